/**
 * DOM controller for the review workflow.
 *
 * All state of record lives on the server: every mutation is followed by
 * a queue/status refetch, so a reload rebuilds the identical view. The
 * client renders numbers only from /api/status and /api/report.
 */

import { ApiClient, ApiError } from './api.js';
import {
  canSubmit,
  emptyForm,
  setVerdict,
  toggleLabel,
  toPayload,
  validate,
  type VerdictFormState,
} from './form.js';
import { bandGradient, labelBands } from './highlight.js';
import { actionForKey, isTypingTarget } from './keyboard.js';
import {
  acknowledge,
  currentItem,
  emptyQueue,
  isPending,
  isSubmitted,
  loadFailed,
  loadItems,
  markPending,
  moveCursor,
  pageCount,
  pageItems,
  rollback,
  setPage,
  type QueueState,
} from './queue.js';
import {
  MOVE_LABELS,
  type QueueFilter,
  type ReportResponse,
  type ReviewItem,
  type Role,
  type StatusResponse,
} from './types.js';

interface SessionInfo {
  role: Role;
  evaluatorId: string;
}

export class ReviewApp {
  private session: SessionInfo | null = null;
  private queue: QueueState = emptyQueue();
  private form: VerdictFormState = emptyForm();
  private status: StatusResponse | null = null;
  private report: ReportResponse | null = null;
  private notice = '';

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  start(): void {
    document.addEventListener('keydown', (event) => this.onKey(event));
    this.renderLogin();
  }

  // -- data ----------------------------------------------------------------

  private async refresh(): Promise<void> {
    try {
      const [queueResponse, status] = await Promise.all([
        this.api.fetchQueue(this.queue.filter),
        this.api.fetchStatus(),
      ]);
      this.queue = loadItems(this.queue, queueResponse.items);
      this.status = status;
      // metrics come only from the server, and only once they exist
      this.report = status.complete ? await this.api.fetchReport() : null;
    } catch (error) {
      this.queue = loadFailed(this.queue, describe(error));
    }
    this.render();
  }

  private async submitCurrent(): Promise<void> {
    const item = currentItem(this.queue);
    if (!this.session || !item || !canSubmit(this.form) || isPending(this.queue, item)) {
      return;
    }
    const payload = toPayload(
      this.form,
      this.session.evaluatorId,
      item.abstract_id,
      item.sentence_index,
    );
    this.queue = markPending(this.queue, item);
    this.render();
    try {
      const outcome =
        this.session.role === 'adjudicator'
          ? await this.api.submitResolution(payload)
          : await this.api.submitJudgment(payload);
      this.queue = acknowledge(this.queue, item);
      this.notice = outcome === 'duplicate' ? 'already recorded' : 'recorded';
      this.form = emptyForm();
      await this.refresh();
    } catch (error) {
      // rejected: roll back the optimistic mark, show the server text
      this.queue = rollback(this.queue, item, describe(error));
      this.render();
    }
  }

  private setFilter(filter: QueueFilter): void {
    if (this.queue.filter !== filter) {
      this.queue = { ...emptyQueue(filter) };
      void this.refresh();
    }
  }

  // -- events ----------------------------------------------------------------

  private onKey(event: KeyboardEvent): void {
    if (!this.session || isTypingTarget(event.target)) return;
    const action = actionForKey(event.key);
    if (!action) return;
    event.preventDefault();
    switch (action.kind) {
      case 'next':
        this.queue = moveCursor(this.queue, 1);
        break;
      case 'previous':
        this.queue = moveCursor(this.queue, -1);
        break;
      case 'verdict-correct':
        this.form = setVerdict(this.form, 'correct');
        break;
      case 'verdict-incorrect':
        this.form = setVerdict(this.form, 'incorrect');
        break;
      case 'toggle-label':
        if (this.form.verdict === 'incorrect') {
          this.form = toggleLabel(this.form, action.label);
        }
        break;
      case 'submit':
        void this.submitCurrent();
        return;
      case 'reload':
        void this.refresh();
        return;
    }
    this.render();
  }

  // -- views ----------------------------------------------------------------

  private renderLogin(): void {
    this.root.innerHTML = '';
    const panel = el('div', 'login-panel');
    panel.append(el('h1', '', 'movelab review'));
    panel.append(
      el('p', 'hint', 'Verdict each model-annotated sentence; disputes go to the adjudicator.'),
    );

    const roleSelect = document.createElement('select');
    for (const role of ['evaluator', 'adjudicator'] as Role[]) {
      const option = document.createElement('option');
      option.value = role;
      option.textContent = role;
      roleSelect.append(option);
    }
    const idInput = document.createElement('input');
    idInput.placeholder = 'evaluator id (e.g. eval-a)';
    const startButton = el('button', 'primary', 'start reviewing') as HTMLButtonElement;
    startButton.disabled = true;
    idInput.addEventListener('input', () => {
      startButton.disabled = idInput.value.trim() === '';
    });
    startButton.addEventListener('click', () => {
      this.session = {
        role: roleSelect.value as Role,
        evaluatorId: idInput.value.trim(),
      };
      this.queue = emptyQueue(this.session.role === 'adjudicator' ? 'disputed' : 'all');
      void this.refresh();
    });

    panel.append(labelled('role', roleSelect), labelled('id', idInput), startButton);
    this.root.append(panel);
  }

  private render(): void {
    if (!this.session) return;
    this.root.innerHTML = '';
    this.root.append(this.renderHeader());
    if (this.queue.error) this.root.append(this.renderErrorBanner());
    if (this.report) this.root.append(this.renderReport(this.report));
    const main = el('div', 'layout');
    main.append(this.renderQueue(), this.renderDetail());
    this.root.append(main);
  }

  /** Per-label metrics exactly as served; the client never recomputes. */
  private renderReport(report: ReportResponse): HTMLElement {
    const box = el('div', 'report');
    box.append(el('span', 'caption', 'final metrics (from /api/report)'));
    const table = document.createElement('table');
    const head = document.createElement('tr');
    for (const column of ['label', 'precision', 'recall', 'f1']) {
      head.append(el('th', '', column));
    }
    table.append(head);
    for (const label of MOVE_LABELS) {
      const cells = report.per_label[label];
      if (!cells) continue;
      const row = document.createElement('tr');
      row.append(
        el('td', '', label),
        el('td', '', formatMetric(cells.precision)),
        el('td', '', formatMetric(cells.recall)),
        el('td', '', formatMetric(cells.f1)),
      );
      table.append(row);
    }
    box.append(table);
    if (report.accuracy_mean !== null) {
      box.append(el('span', 'chip', `accuracy ${report.accuracy_mean.toFixed(4)}`));
    }
    return box;
  }

  private renderHeader(): HTMLElement {
    const header = el('header', 'status-bar');
    const who = el('span', 'who', `${this.session?.evaluatorId} (${this.session?.role})`);
    header.append(who);
    if (this.status) {
      const s = this.status;
      header.append(
        chip(`items ${s.items}`),
        chip(`disputed ${s.disputed}`),
        chip(`resolved ${s.resolved}`),
        chip(`final verdicts ${s.final_verdicts}`, 'final-verdicts'),
      );
      if (s.complete) header.append(chip('workflow complete', 'complete'));
    }
    const filters = el('span', 'filters');
    for (const filter of ['disputed', 'all'] as QueueFilter[]) {
      const button = el(
        'button',
        this.queue.filter === filter ? 'filter active' : 'filter',
        filter,
      );
      button.addEventListener('click', () => this.setFilter(filter));
      filters.append(button);
    }
    header.append(filters);
    return header;
  }

  private renderErrorBanner(): HTMLElement {
    const banner = el('div', 'banner error');
    banner.append(el('span', '', this.queue.error ?? ''));
    const retry = el('button', '', 'retry');
    retry.addEventListener('click', () => void this.refresh());
    banner.append(retry);
    return banner;
  }

  private renderQueue(): HTMLElement {
    const panel = el('section', 'queue-panel');
    const items = pageItems(this.queue);
    if (items.length === 0) {
      panel.append(el('p', 'empty', 'nothing in this queue'));
      return panel;
    }
    const list = el('ul', 'queue');
    for (const item of items) {
      const row = el('li', 'queue-row');
      const absolute = this.queue.items.indexOf(item);
      if (absolute === this.queue.cursor) row.classList.add('current');
      if (isSubmitted(this.queue, item)) row.classList.add('submitted');
      const swatch = el('span', 'swatch');
      swatch.style.background = bandGradient(item.predicted);
      row.append(
        swatch,
        el('span', 'key', `${item.abstract_id} #${item.sentence_index}`),
        el('span', 'preview', item.sentence.slice(0, 60)),
      );
      row.addEventListener('click', () => {
        this.queue = { ...this.queue, cursor: absolute };
        this.render();
      });
      list.append(row);
    }
    panel.append(list);
    if (pageCount(this.queue) > 1) {
      const pager = el('div', 'pager');
      const prev = el('button', '', 'prev');
      prev.addEventListener('click', () => {
        this.queue = setPage(this.queue, this.queue.page - 1);
        this.render();
      });
      const next = el('button', '', 'next');
      next.addEventListener('click', () => {
        this.queue = setPage(this.queue, this.queue.page + 1);
        this.render();
      });
      pager.append(prev, el('span', '', `page ${this.queue.page + 1} / ${pageCount(this.queue)}`), next);
      panel.append(pager);
    }
    return panel;
  }

  private renderDetail(): HTMLElement {
    const panel = el('section', 'detail-panel');
    const item = currentItem(this.queue);
    if (!item) {
      panel.append(el('p', 'empty', 'select an item'));
      return panel;
    }
    if (item.context.before) panel.append(el('p', 'context', item.context.before));
    const sentence = el('div', 'sentence');
    const bands = el('span', 'bands');
    bands.style.background = bandGradient(item.predicted);
    sentence.append(bands, el('span', 'text', item.sentence));
    panel.append(sentence);
    if (item.context.after) panel.append(el('p', 'context', item.context.after));

    const predicted = el('div', 'predicted');
    predicted.append(el('span', 'caption', 'model labels:'));
    for (const band of labelBands(item.predicted)) {
      const tag = el('span', 'label-chip', band.label);
      tag.style.borderColor = band.color;
      predicted.append(tag);
    }
    panel.append(predicted);
    panel.append(this.renderVerdicts(item));
    panel.append(this.renderForm(item));
    return panel;
  }

  private renderVerdicts(item: ReviewItem): HTMLElement {
    const box = el('div', 'verdicts');
    // blind review: evaluators see peers' verdicts only once both are in
    const visible =
      this.session?.role === 'adjudicator' || item.judgments.length >= 2;
    if (!visible) {
      box.append(el('span', 'caption', `verdicts recorded: ${item.judgments.length} (hidden until both are in)`));
      return box;
    }
    box.append(el('span', 'caption', 'verdicts:'));
    for (const judgment of item.judgments) {
      const text =
        judgment.verdict === 'incorrect'
          ? `${judgment.evaluator}: incorrect -> ${(judgment.corrected_labels ?? []).join('+')}`
          : `${judgment.evaluator}: correct`;
      box.append(el('span', `verdict ${judgment.verdict}`, text));
    }
    if (item.disputed && !item.resolved) box.append(el('span', 'verdict disputed', 'DISPUTED'));
    if (item.resolved) box.append(el('span', 'verdict resolved', 'resolved'));
    return box;
  }

  private renderForm(item: ReviewItem): HTMLElement {
    const box = el('div', 'verdict-form');
    const correct = el(
      'button',
      this.form.verdict === 'correct' ? 'verdict-btn active' : 'verdict-btn',
      'correct (c)',
    );
    correct.addEventListener('click', () => {
      this.form = setVerdict(this.form, 'correct');
      this.render();
    });
    const incorrect = el(
      'button',
      this.form.verdict === 'incorrect' ? 'verdict-btn active' : 'verdict-btn',
      'incorrect (x)',
    );
    incorrect.addEventListener('click', () => {
      this.form = setVerdict(this.form, 'incorrect');
      this.render();
    });
    box.append(correct, incorrect);

    if (this.form.verdict === 'incorrect') {
      const labels = el('div', 'label-toggles');
      for (const [i, label] of MOVE_LABELS.entries()) {
        const toggle = el(
          'button',
          this.form.corrected.includes(label) ? 'toggle active' : 'toggle',
          `${label} (${i + 1})`,
        );
        toggle.addEventListener('click', () => {
          this.form = toggleLabel(this.form, label);
          this.render();
        });
        labels.append(toggle);
      }
      box.append(labels);
    }

    const note = document.createElement('input');
    note.placeholder = 'note (optional)';
    note.value = this.form.note;
    note.addEventListener('input', () => {
      this.form = { ...this.form, note: note.value };
    });
    box.append(note);

    const submit = el('button', 'primary submit', 'submit (Enter)') as HTMLButtonElement;
    submit.disabled = !canSubmit(this.form) || isPending(this.queue, item);
    submit.addEventListener('click', () => void this.submitCurrent());
    box.append(submit);

    const problem = validate(this.form);
    if (problem && this.form.verdict !== null) {
      box.append(el('span', 'form-problem', problem));
    }
    if (this.notice) {
      box.append(el('span', 'notice', this.notice));
      this.notice = '';
    }
    return box;
  }
}

// -- tiny DOM helpers ---------------------------------------------------------

function el(tag: string, className = '', text = ''): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function chip(text: string, extra = ''): HTMLElement {
  return el('span', `chip ${extra}`.trim(), text);
}

function labelled(caption: string, control: HTMLElement): HTMLElement {
  const wrap = el('label', 'field');
  wrap.append(el('span', 'caption', caption), control);
  return wrap;
}

function formatMetric(value: number | null): string {
  return value === null ? 'undefined' : value.toFixed(4);
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  if (error instanceof Error) return `network failure: ${error.message}`;
  return String(error);
}
