// DOM layer: renders the store snapshot, wires clicks and the keyboard
// shortcuts (1 = relevant, 0 = irrelevant, arrows move focus).

import { renderChartSvg } from './chart.js';
import { AnnotationStore } from './store.js';

export class AnnotationView {
  private focusIndex = 0;

  constructor(private readonly root: HTMLElement,
              private readonly store: AnnotationStore) {
    store.subscribe(() => this.render());
    document.addEventListener('keydown', (ev) => this.onKey(ev));
  }

  private onKey(ev: KeyboardEvent): void {
    const snap = this.store.snapshot();
    if (snap.view !== 'labeling' || snap.items.length === 0) return;
    if (ev.key === 'ArrowDown' || ev.key === 'ArrowRight') {
      this.focusIndex = Math.min(this.focusIndex + 1, snap.items.length - 1);
    } else if (ev.key === 'ArrowUp' || ev.key === 'ArrowLeft') {
      this.focusIndex = Math.max(this.focusIndex - 1, 0);
    } else if (ev.key === '1' || ev.key === '0') {
      const item = snap.items[this.focusIndex];
      this.store.setLabel(item.id, ev.key === '1' ? 1 : 0);
      this.focusIndex = Math.min(this.focusIndex + 1, snap.items.length - 1);
    } else if (ev.key === 'Enter' && snap.canSubmit) {
      void this.store.submit();
    } else {
      return;
    }
    ev.preventDefault();
    this.render();
  }

  render(): void {
    const snap = this.store.snapshot();
    const banner = snap.lastError
      ? `<div class="banner">connection problem, retrying… (${snap.lastError})</div>`
      : '';
    if (snap.view === 'labeling') {
      const rows = snap.items.map((it, i) => `
        <li class="doc ${i === this.focusIndex ? 'focused' : ''}" data-id="${it.id}">
          <span class="meta">#${i + 1} · uncertainty ${it.uncertainty.toFixed(3)}</span>
          <p class="text"></p>
          <span class="controls">
            <button data-label="1" class="${it.label === 1 ? 'chosen' : ''}">relevant (1)</button>
            <button data-label="0" class="${it.label === 0 ? 'chosen' : ''}">irrelevant (0)</button>
          </span>
        </li>`).join('');
      const done = snap.items.filter((it) => it.label !== null).length;
      this.root.innerHTML = `
        ${banner}
        <h2>Label this batch (${done}/${snap.items.length})</h2>
        <ol class="batch">${rows}</ol>
        <button id="submit" ${snap.canSubmit ? '' : 'disabled'}>
          submit ${snap.items.length} labels
        </button>`;
      // document text set via textContent: never trust corpus HTML
      this.root.querySelectorAll('li.doc').forEach((li, i) => {
        (li.querySelector('.text') as HTMLElement).textContent =
          snap.items[i].text;
      });
      this.root.querySelectorAll('li.doc button').forEach((btn) => {
        btn.addEventListener('click', (ev) => {
          const b = ev.currentTarget as HTMLButtonElement;
          const id = (b.closest('li.doc') as HTMLElement).dataset.id as string;
          this.store.setLabel(id, b.dataset.label === '1' ? 1 : 0);
        });
      });
      const submit = this.root.querySelector('#submit') as HTMLButtonElement;
      submit.addEventListener('click', () => void this.store.submit());
    } else {
      const headline = {
        connecting: 'Connecting to the annotation service…',
        waiting: 'Training in progress — next batch is on its way',
        complete: 'Run complete. Thanks for labeling!',
        offline: 'Service unreachable — retrying',
        labeling: '',
      }[snap.view];
      const chart = snap.trace
        ? renderChartSvg(snap.trace.records)
        : '<p class="muted">no trace yet</p>';
      this.root.innerHTML = `
        ${banner}
        <h2>${headline}</h2>
        <p class="muted">${snap.labeledTotal} documents labeled so far</p>
        ${chart}`;
    }
  }
}
