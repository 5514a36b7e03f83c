// Annotation state machine, kept free of DOM concerns so the contract
// (submit gating, idempotence, 409 recovery) is testable headlessly.

import { ApiClient, BatchDoc, TracePayload } from './api.js';

export type Label = 0 | 1;

export interface UiBatchItem {
  id: string;
  text: string;
  uncertainty: number;
  label: Label | null;
}

export type ViewState = 'connecting' | 'waiting' | 'labeling' | 'complete' | 'offline';

export interface StoreSnapshot {
  view: ViewState;
  items: UiBatchItem[];
  canSubmit: boolean;
  submitting: boolean;
  batchIndex: number;
  labeledTotal: number;
  trace: TracePayload | null;
  lastError: string | null;
}

export class AnnotationStore {
  private items: UiBatchItem[] = [];
  private view: ViewState = 'connecting';
  private batchIndex = -1;
  private labeledTotal = 0;
  private trace: TracePayload | null = null;
  private submitting = false;
  private lastError: string | null = null;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l();
  }

  snapshot(): StoreSnapshot {
    return {
      view: this.view,
      items: this.items.map((it) => ({ ...it })),
      canSubmit: this.canSubmit(),
      submitting: this.submitting,
      batchIndex: this.batchIndex,
      labeledTotal: this.labeledTotal,
      trace: this.trace,
      lastError: this.lastError,
    };
  }

  canSubmit(): boolean {
    return this.items.length > 0 &&
      this.items.every((it) => it.label !== null) &&
      !this.submitting;
  }

  /** One poll step: refresh status, then batch or trace as appropriate. */
  async poll(): Promise<void> {
    let status;
    try {
      status = await this.api.status();
      this.lastError = null;
    } catch (err) {
      // connection loss: banner, keep any labels already set
      this.lastError = String(err);
      this.view = this.items.length > 0 ? 'labeling' : 'offline';
      this.emit();
      return;
    }
    this.labeledTotal = status.labeled_total;
    if (status.state === 'complete') {
      this.view = 'complete';
      this.items = [];
      await this.refreshTrace();
    } else if (status.state === 'collecting') {
      if (this.view !== 'labeling' || status.batch_index !== this.batchIndex) {
        await this.loadBatch(status.batch_index);
      }
    } else {
      this.view = 'waiting';
      this.items = [];
      await this.refreshTrace();
    }
    this.emit();
  }

  private async refreshTrace(): Promise<void> {
    try {
      this.trace = await this.api.trace();
    } catch {
      // trace is cosmetic; keep the last one on transient failures
    }
  }

  /** Fetch the pending batch, preserving labels for overlapping ids. */
  private async loadBatch(batchIndex: number): Promise<void> {
    const docs = await this.api.batch();
    const kept = new Map(this.items
      .filter((it) => it.label !== null)
      .map((it) => [it.id, it.label]));
    // service order is the annotation order; never re-sorted client-side
    this.items = docs.map((d: BatchDoc) => ({
      id: d.id,
      text: d.text,
      uncertainty: d.uncertainty,
      label: kept.get(d.id) ?? null,
    }));
    this.batchIndex = batchIndex;
    this.view = 'labeling';
  }

  setLabel(id: string, label: Label): void {
    const item = this.items.find((it) => it.id === id);
    if (item) {
      item.label = label;
      this.emit();
    }
  }

  /**
   * Submit the full batch. No-op unless every item is labeled and no
   * submission is in flight (double-click safe). On 409 the batch is
   * refetched and overlapping labels survive.
   */
  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    const labels: Record<string, Label> = {};
    for (const it of this.items) {
      labels[it.id] = it.label as Label;
    }
    this.submitting = true;
    this.emit();
    try {
      const code = await this.api.submitLabels(labels);
      if (code === 409) {
        const status = await this.api.status();
        if (status.state === 'collecting') {
          await this.loadBatch(status.batch_index);
        } else {
          this.view = 'waiting';
          this.items = [];
        }
      } else {
        this.view = 'waiting';
        this.items = [];
      }
      this.lastError = null;
    } catch (err) {
      // connection trouble: keep every label, surface a banner
      this.lastError = String(err);
    } finally {
      this.submitting = false;
      this.emit();
    }
  }
}
