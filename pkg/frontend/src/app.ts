// Console orchestration. Strictly a thin client: labels and hierarchy
// changes only ever happen server-side; this file fetches, renders and
// posts. A 409 means another tab answered first, so the pending question
// is simply re-fetched; network failures raise an offline banner and leave
// the screen otherwise untouched.

import { ApiClient, StaleQuestionError } from './api';
import { clear, el } from './dom';
import { QuestionSubmission, QuestionView } from './question-view';
import { StatsView } from './stats-view';
import { TreeView } from './tree-view';
import type { NextWire } from './types';

export interface AppElements {
  question: HTMLElement;
  tree: HTMLElement;
  stats: HTMLElement;
  banner: HTMLElement;
  debug: HTMLElement;
}

export class AnnotatorApp {
  private readonly questionView: QuestionView;
  private readonly treeView: TreeView;
  private readonly statsView: StatsView;
  private current: NextWire | null = null;
  private debugVisible = false;

  constructor(
    private readonly api: ApiClient,
    private readonly elements: AppElements,
  ) {
    this.questionView = new QuestionView(elements.question, {
      submit: (submission) => void this.submit(submission),
    });
    this.treeView = new TreeView(elements.tree);
    this.statsView = new StatsView(elements.stats);
  }

  async start(): Promise<void> {
    await this.refresh();
  }

  toggleDebug(): void {
    this.debugVisible = !this.debugVisible;
    this.renderDebug();
  }

  async refresh(): Promise<void> {
    try {
      const [next, state] = await Promise.all([this.api.next(), this.api.state()]);
      this.clearBanner();
      this.current = next;
      this.treeView.render(state.hierarchy);
      this.statsView.render(state.stats);
      if (next.done) {
        this.renderDone();
      } else {
        this.questionView.render(next);
      }
      this.renderDebug();
    } catch (error) {
      this.showBanner('offline — the labeling service is unreachable', error);
    }
  }

  private async submit(submission: QuestionSubmission): Promise<void> {
    const question = this.current?.question;
    if (!question) {
      return;
    }
    try {
      await this.api.answer({
        object_id: question.object_id,
        seq: question.seq,
        ...(submission.verdict !== undefined
          ? { verdict: submission.verdict }
          : { new_category: submission.newCategory ?? null }),
      });
      await this.refresh();
    } catch (error) {
      if (error instanceof StaleQuestionError) {
        // someone else answered this question; show the real pending one
        await this.refresh();
        return;
      }
      this.showBanner('offline — answer not delivered, retry when back', error);
    }
  }

  private renderDone(): void {
    const root = this.elements.question;
    clear(root);
    const doc = root.ownerDocument;
    root.append(
      el(doc, 'h2', { 'data-role': 'done' }, ['All objects labeled']),
      el(doc, 'p', {}, ['The queue is finished. Download the labeled dataset:']),
      el(doc, 'a', { href: this.api.exportUrl(), 'data-role': 'export-link' }, [
        'session export (JSON)',
      ]),
    );
  }

  private renderDebug(): void {
    const root = this.elements.debug;
    clear(root);
    if (!this.debugVisible || !this.current) {
      return;
    }
    root.append(
      el(root.ownerDocument, 'pre', { 'data-role': 'debug-payload' }, [
        JSON.stringify(this.current, null, 2),
      ]),
    );
  }

  private showBanner(message: string, error: unknown): void {
    const banner = this.elements.banner;
    banner.textContent = message;
    banner.classList.add('visible');
    console.error(message, error);
  }

  private clearBanner(): void {
    this.elements.banner.textContent = '';
    this.elements.banner.classList.remove('visible');
  }
}

export function mountApp(doc: Document, api: ApiClient): AnnotatorApp {
  const pick = (id: string): HTMLElement => {
    const node = doc.getElementById(id);
    if (!node) {
      throw new Error(`missing #${id} in the host page`);
    }
    return node;
  };
  const app = new AnnotatorApp(api, {
    question: pick('question'),
    tree: pick('tree'),
    stats: pick('stats'),
    banner: pick('banner'),
    debug: pick('debug'),
  });
  const toggle = doc.getElementById('debug-toggle');
  if (toggle) {
    toggle.addEventListener('click', () => app.toggleDebug());
  }
  return app;
}
