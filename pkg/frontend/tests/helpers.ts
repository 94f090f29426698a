import { JSDOM } from 'jsdom';

export function page(): { doc: Document; root: HTMLElement } {
  const dom = new JSDOM('<!doctype html><html><body><div id="root"></div></body></html>');
  const doc = dom.window.document;
  return { doc, root: doc.getElementById('root') as HTMLElement };
}

export function appPage(): Document {
  const dom = new JSDOM(
    `<!doctype html><html><body>
      <div id="banner"></div>
      <div id="stats"></div>
      <div id="question"></div>
      <div id="debug"></div>
      <button id="debug-toggle"></button>
      <div id="tree"></div>
    </body></html>`,
  );
  return dom.window.document;
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 5000,
  stepMs = 10,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) {
      return;
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error('waitFor timed out');
}

export async function waitForAsync(
  predicate: () => Promise<boolean>,
  timeoutMs = 5000,
  stepMs = 25,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await predicate()) {
      return;
    }
    await new Promise((resolve) => setTimeout(resolve, stepMs));
  }
  throw new Error('waitForAsync timed out');
}

export function click(node: Element | null): void {
  if (!node) {
    throw new Error('expected an element to click');
  }
  (node as HTMLElement).click();
}
