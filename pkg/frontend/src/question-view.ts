// The question screen: object crop, the service's prompt rendered verbatim,
// verdict buttons or the new-category form. Submit stays disabled until a
// verdict is picked; the form blocks submission without a genus (and without
// a differentia when the new node would have siblings).

import { clear, el } from './dom';
import type { NewCategoryBody, NextWire, ObjectViewWire } from './types';

export interface QuestionSubmission {
  verdict?: boolean;
  newCategory?: NewCategoryBody | null;
}

export interface QuestionViewDelegate {
  submit(submission: QuestionSubmission): void;
}

const VERDICT_LABELS: Record<string, [string, string]> = {
  genus: ['Shares this genus', 'Does not share it'],
  differentia: ['Visually distinct', 'Same category'],
};

const THUMB_SIZE = 72;

export class QuestionView {
  private selected: boolean | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly delegate: QuestionViewDelegate,
  ) {}

  private get doc(): Document {
    return this.root.ownerDocument;
  }

  render(next: NextWire): void {
    clear(this.root);
    this.selected = null;
    if (next.done || !next.question) {
      return;
    }
    const doc = this.doc;
    const question = next.question;

    if (next.object) {
      this.root.append(this.cropFigure(next.object, 220));
    }
    this.root.append(
      el(doc, 'p', { class: 'prompt', 'data-role': 'prompt' }, [question.prompt]),
    );
    const meta = el(doc, 'p', { class: 'question-meta' }, [
      `object ${question.object_id} · question ${question.seq}`,
    ]);
    this.root.append(meta);

    if (next.candidate && next.candidate.exemplars.length > 0) {
      const gallery = el(doc, 'div', { class: 'exemplars', 'data-role': 'exemplars' });
      for (const exemplar of next.candidate.exemplars) {
        gallery.append(this.cropFigure(exemplar, THUMB_SIZE));
      }
      this.root.append(
        el(doc, 'p', { class: 'gallery-label' }, ['Already in this category:']),
      );
      this.root.append(gallery);
    }

    if (question.kind === 'new_category') {
      this.renderNewCategoryForm(next);
    } else {
      this.renderVerdictButtons(question.kind);
    }
  }

  private cropFigure(view: ObjectViewWire, size: number): HTMLElement {
    const doc = this.doc;
    const figure = el(doc, 'div', {
      class: 'crop',
      'data-object-id': view.object_id,
      title: view.object_id,
    });
    figure.style.width = `${size}px`;
    figure.style.height = `${size}px`;
    if (view.uri && view.crop) {
      const scale = size / view.crop.side;
      figure.style.backgroundImage = `url("${view.uri}")`;
      figure.style.backgroundPosition = `-${view.crop.x * scale}px -${view.crop.y * scale}px`;
      figure.style.backgroundRepeat = 'no-repeat';
    } else {
      figure.classList.add('crop-missing');
      figure.textContent = view.object_id;
    }
    return figure;
  }

  private renderVerdictButtons(kind: string): void {
    const doc = this.doc;
    const [yesLabel, noLabel] = VERDICT_LABELS[kind];
    const yes = el(doc, 'button', { 'data-verdict': 'true', class: 'verdict' }, [yesLabel]);
    const no = el(doc, 'button', { 'data-verdict': 'false', class: 'verdict' }, [noLabel]);
    const submit = el(doc, 'button', { 'data-role': 'submit', disabled: '' }, ['Submit']);
    const pick = (value: boolean, button: HTMLButtonElement) => {
      this.selected = value;
      for (const other of [yes, no]) {
        other.classList.toggle('picked', other === button);
      }
      submit.removeAttribute('disabled');
    };
    yes.addEventListener('click', () => pick(true, yes));
    no.addEventListener('click', () => pick(false, no));
    submit.addEventListener('click', () => {
      if (this.selected === null) {
        return;
      }
      this.delegate.submit({ verdict: this.selected });
    });
    this.root.append(
      el(doc, 'div', { class: 'verdicts' }, [yes, no]),
      submit,
    );
  }

  private renderNewCategoryForm(next: NextWire): void {
    const doc = this.doc;
    const candidate = next.candidate;
    const needsDifferentia = Boolean(candidate?.has_children);
    const name = el(doc, 'input', { 'data-field': 'name', placeholder: 'name (optional)' });
    const genus = el(doc, 'textarea', {
      'data-field': 'genus',
      placeholder: 'shared visual properties (required)',
    });
    const differentia = el(doc, 'textarea', {
      'data-field': 'differentia',
      placeholder: needsDifferentia
        ? 'what sets it apart from its siblings (required)'
        : 'what sets it apart (optional until it has siblings)',
    });
    const message = el(doc, 'p', { class: 'form-error', 'data-role': 'form-error' });
    const submit = el(doc, 'button', { 'data-role': 'submit' }, ['Create category']);
    submit.addEventListener('click', () => {
      if (!genus.value.trim()) {
        message.textContent = 'A genus description is required.';
        return;
      }
      if (needsDifferentia && !differentia.value.trim()) {
        message.textContent = 'A differentia is required: the category will have siblings.';
        return;
      }
      message.textContent = '';
      this.delegate.submit({
        newCategory: {
          name: name.value.trim() || null,
          genus: genus.value,
          differentia: differentia.value,
        },
      });
    });
    const form = el(doc, 'div', { class: 'new-category-form', 'data-role': 'new-category' }, [
      name,
      genus,
      differentia,
      message,
      submit,
    ]);
    if (candidate && !candidate.is_root) {
      const label = candidate.name ?? candidate.path;
      const decline = el(doc, 'button', { 'data-role': 'decline' }, [
        `No new category — it is a "${label}"`,
      ]);
      decline.addEventListener('click', () => this.delegate.submit({ newCategory: null }));
      form.append(decline);
    }
    this.root.append(form);
  }
}
