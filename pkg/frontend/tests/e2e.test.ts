// Full-stack scripted session: the real Python service on one side, the
// real DOM console under jsdom on the other. A 12-object, 3-category queue
// is answered by clicking rendered buttons, with verdicts derived from the
// fixture's ground truth; the resulting export must equal the export of the
// in-process simulated run byte for byte. A second, unseeded session checks
// that the new-category form enforcement holds against the live service.

import { execFileSync, spawn, ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve, dirname } from 'node:path';
import { fileURLToPath } from 'node:url';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { mountApp } from '../src/app';
import { appPage, click, waitFor, waitForAsync } from './helpers';
import type { NextWire } from '../src/types';

const HERE = dirname(fileURLToPath(import.meta.url));
const REPO = resolve(HERE, '../..');
const PORT = 8790 + (process.pid % 97);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let work: string;
let manifest: string;
let reference: string;
let groundTruth: Record<string, string>;

function onTruthPath(categoryPath: string, truth: string): boolean {
  return truth === categoryPath || truth.startsWith(`${categoryPath}_`);
}

async function createSession(sessionId: string, seedHierarchy: boolean): Promise<void> {
  const response = await fetch(`${BASE}/sessions`, {
    method: 'POST',
    headers: { 'content-type': 'application/json' },
    body: JSON.stringify({
      session_id: sessionId,
      feature_dim: 8,
      oracle_mode: 'interactive',
      manifest,
      reference: seedHierarchy ? reference : null,
      seed_hierarchy: seedHierarchy,
    }),
  });
  expect(response.status).toBe(201);
}

beforeAll(async () => {
  work = mkdtempSync(join(tmpdir(), 'vislabel-e2e-'));
  execFileSync('python3', [
    join(REPO, 'scripts', 'make_fixture.py'),
    '--out-dir',
    work,
    '--flat',
    '4,4,4',
    '--feature-dim',
    '8',
  ]);
  manifest = join(work, 'manifest.jsonl');
  reference = join(work, 'reference.json');
  groundTruth = JSON.parse(readFileSync(reference, 'utf-8')).ground_truth;

  server = spawn('python3', [
    '-c',
    `import uvicorn; from vislabel.service import create_app; ` +
      `uvicorn.run(create_app(${JSON.stringify(join(work, 'served'))}), ` +
      `host="127.0.0.1", port=${PORT}, log_level="warning")`,
  ]);
  await waitFor(() => serverUp(), 20000, 100);
}, 30000);

afterAll(() => {
  server?.kill();
});

let up = false;
function serverUp(): boolean {
  if (!up) {
    void fetch(`${BASE}/session/probe/state`).then(
      (r) => {
        up = r.status === 404;
      },
      () => undefined,
    );
  }
  return up;
}

describe('scripted end-to-end session', () => {
  it(
    'labels 12 objects over HTTP and matches the in-process export byte for byte',
    async () => {
      await createSession('e2e-ui', true);
      const doc = appPage();
      const api = new ApiClient(BASE, 'e2e-ui');
      const app = mountApp(doc, api);
      await app.start();

      for (let step = 0; step < 200; step += 1) {
        const wire: NextWire = await api.next();
        if (wire.done) {
          break;
        }
        const question = wire.question!;
        await waitFor(
          () =>
            doc.querySelector('[data-role=prompt]')?.textContent === question.prompt,
        );
        const truth = groundTruth[question.object_id];
        expect(truth).toBeDefined();
        expect(question.kind).not.toBe('new_category'); // seeded + consistent answers
        const onPath = onTruthPath(question.category_path, truth);
        const verdict = question.kind === 'genus' ? onPath : !onPath;
        click(doc.querySelector(`button[data-verdict=${verdict}]`));
        click(doc.querySelector('[data-role=submit]'));
        await waitFor(() => {
          const meta = doc.querySelector('.question-meta')?.textContent;
          return (
            doc.querySelector('[data-role=done]') !== null ||
            meta !== `object ${question.object_id} · question ${question.seq}`
          );
        });
      }

      await waitFor(() => doc.querySelector('[data-role=done]') !== null);
      expect(doc.querySelector('[data-role=export-link]')?.getAttribute('href')).toBe(
        `${BASE}/session/e2e-ui/export`,
      );
      const uiExport = await api.exportSession();

      const simData = join(work, 'sim-data');
      execFileSync('vislabel', [
        '--data-dir',
        simData,
        'run-sim',
        '--flip-p',
        '0',
        '--seed',
        '1',
        '--reference',
        reference,
        '--manifest',
        manifest,
        '--session-id',
        'e2e-ui',
      ]);
      const outDir = join(work, 'sim-export');
      execFileSync('vislabel', [
        '--data-dir',
        simData,
        'export',
        '--session',
        'e2e-ui',
        '--out',
        outDir,
      ]);
      expect(uiExport.dataset_jsonl).toBe(readFileSync(join(outDir, 'dataset.jsonl'), 'utf-8'));
      expect(uiExport.hierarchy_json).toBe(readFileSync(join(outDir, 'hierarchy.json'), 'utf-8'));
      expect(uiExport.transcripts_jsonl).toBe(
        readFileSync(join(outDir, 'transcripts.jsonl'), 'utf-8'),
      );

      // every object landed on its reference path
      const rows = uiExport.dataset_jsonl
        .trim()
        .split('\n')
        .slice(1)
        .map((line) => JSON.parse(line));
      const assigned = rows.filter((r) => r.row === 'assigned');
      expect(assigned.length).toBe(12);
      for (const row of assigned) {
        expect(row.path).toBe(groundTruth[row.object_id]);
      }
    },
    60000,
  );

  it(
    'enforces the new-category form rules against the live service',
    async () => {
      await createSession('e2e-form', false);
      const doc = appPage();
      const api = new ApiClient(BASE, 'e2e-form');
      const app = mountApp(doc, api);
      await app.start();

      // unseeded session: the first pending item is the bootstrap decision
      await waitFor(() => doc.querySelector('[data-role=new-category]') !== null);
      expect(doc.querySelector('[data-role=decline]')).toBeNull(); // root: no decline

      const before = (await api.next()).question!;
      click(doc.querySelector('[data-role=submit]'));
      await waitFor(
        () => (doc.querySelector('[data-role=form-error]')?.textContent ?? '') !== '',
      );
      const after = (await api.next()).question!;
      expect(after.seq).toBe(before.seq); // nothing was posted

      (doc.querySelector('[data-field=genus]') as HTMLTextAreaElement).value =
        'boxy wooden body';
      click(doc.querySelector('[data-role=submit]'));
      await waitForAsync(async () => (await api.next()).question?.seq !== before.seq);
      const stats = await api.stats();
      expect(stats.categories.created).toBe(1);
    },
    60000,
  );
});
