import { clear, el } from './dom';
import type { StatsWire } from './types';

export class StatsView {
  constructor(private readonly root: HTMLElement) {}

  render(stats: StatsWire): void {
    clear(this.root);
    const doc = this.root.ownerDocument;
    const cells: [string, string][] = [
      ['labeled', `${stats.objects.assigned}/${stats.objects.total}`],
      ['aborted', String(stats.objects.aborted)],
      ['questions', String(stats.questions.total)],
      ['categories', String(stats.categories.count)],
    ];
    for (const [label, value] of cells) {
      this.root.append(
        el(doc, 'span', { class: 'stat', 'data-stat': label }, [`${label}: ${value}`]),
      );
    }
  }
}
