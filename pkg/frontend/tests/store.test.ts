// Contract tests for the annotation store against a scripted transport.

import { describe, expect, it } from 'vitest';
import { ApiClient, FetchLike } from '../src/api.js';
import { AnnotationStore } from '../src/store.js';

interface Scripted {
  status?: object;
  batch?: object[];
  trace?: object;
  labelsStatus?: number;
  onLabels?: (body: unknown) => void;
}

function transport(script: () => Scripted): FetchLike {
  return async (url: string, init?: RequestInit) => {
    const s = script();
    if (url.endsWith('/status')) {
      return new Response(JSON.stringify(s.status), { status: 200 });
    }
    if (url.endsWith('/batch')) {
      return new Response(JSON.stringify(s.batch ?? []), { status: 200 });
    }
    if (url.endsWith('/trace')) {
      return new Response(JSON.stringify(s.trace ?? { state: 'waiting', records: [] }),
        { status: 200 });
    }
    if (url.endsWith('/labels')) {
      s.onLabels?.(JSON.parse(String(init?.body)));
      const code = s.labelsStatus ?? 204;
      return new Response(code === 204 ? null : '{}', { status: code });
    }
    throw new Error(`unexpected url ${url}`);
  };
}

function collecting(batchIndex: number, docs: object[]): Scripted {
  return {
    status: {
      session_id: 's', state: 'collecting', batch_index: batchIndex,
      pending_count: docs.length, received_count: 0, labeled_total: 0,
    },
    batch: docs,
  };
}

const DOCS = [
  { id: 'a', text: 'doc a', uncertainty: 0.01 },
  { id: 'b', text: 'doc b', uncertainty: 0.02 },
  { id: 'c', text: 'doc c', uncertainty: 0.03 },
];

describe('submit gating', () => {
  it('submit stays disabled until every item is labeled', async () => {
    const store = new AnnotationStore(
      new ApiClient('', transport(() => collecting(0, DOCS))));
    await store.poll();
    expect(store.snapshot().view).toBe('labeling');
    expect(store.canSubmit()).toBe(false);
    store.setLabel('a', 1);
    store.setLabel('b', 0);
    expect(store.canSubmit()).toBe(false);
    store.setLabel('c', 1);
    expect(store.canSubmit()).toBe(true);
  });

  it('items render in service order, never re-sorted', async () => {
    const shuffled = [DOCS[2], DOCS[0], DOCS[1]];
    const store = new AnnotationStore(
      new ApiClient('', transport(() => collecting(0, shuffled))));
    await store.poll();
    expect(store.snapshot().items.map((it) => it.id)).toEqual(['c', 'a', 'b']);
  });

  it('outgoing labels are exactly the user-set labels', async () => {
    let posted: any = null;
    const script = collecting(0, DOCS);
    script.onLabels = (body) => { posted = body; };
    const store = new AnnotationStore(new ApiClient('', transport(() => script)));
    await store.poll();
    store.setLabel('a', 1);
    store.setLabel('b', 0);
    store.setLabel('c', 0);
    await store.submit();
    expect(posted).toEqual({ labels: { a: 1, b: 0, c: 0 } });
    expect(store.snapshot().view).toBe('waiting');
  });
});

describe('double submit', () => {
  it('second click while in flight is a no-op', async () => {
    let posts = 0;
    const script = collecting(0, DOCS);
    script.onLabels = () => { posts += 1; };
    const store = new AnnotationStore(new ApiClient('', transport(() => script)));
    await store.poll();
    for (const d of DOCS) store.setLabel(d.id, 0);
    const first = store.submit();
    const second = store.submit(); // canSubmit false: submitting in flight
    await Promise.all([first, second]);
    expect(posts).toBe(1);
  });

  it('after success the batch is cleared, so a re-click cannot send', async () => {
    const script = collecting(0, DOCS);
    const store = new AnnotationStore(new ApiClient('', transport(() => script)));
    await store.poll();
    for (const d of DOCS) store.setLabel(d.id, 1);
    await store.submit();
    expect(store.canSubmit()).toBe(false);
    expect(store.snapshot().items).toEqual([]);
  });
});

describe('409 recovery', () => {
  it('refetches the batch and preserves overlapping labels', async () => {
    const nextDocs = [DOCS[1], DOCS[2],
      { id: 'd', text: 'doc d', uncertainty: 0.04 }];
    let phase: 'stale' | 'recovered' = 'stale';
    const script = (): Scripted => phase === 'stale'
      ? { ...collecting(0, DOCS), labelsStatus: 409 }
      : collecting(1, nextDocs);
    const store = new AnnotationStore(new ApiClient('', transport(script)));
    await store.poll();
    store.setLabel('a', 1);
    store.setLabel('b', 0);
    store.setLabel('c', 1);
    // the POST sees the stale phase and gets 409; the recovery fetches
    // run after we flip the server to its new batch
    const submitting = store.submit();
    phase = 'recovered';
    await submitting;
    const snap = store.snapshot();
    expect(snap.view).toBe('labeling');
    expect(snap.items.map((it) => it.id)).toEqual(['b', 'c', 'd']);
    const byId = new Map(snap.items.map((it) => [it.id, it.label]));
    expect(byId.get('b')).toBe(0);  // overlapping labels preserved
    expect(byId.get('c')).toBe(1);
    expect(byId.get('d')).toBeNull();  // new doc starts unset
  });
});

describe('connection loss', () => {
  it('keeps label state and raises the banner', async () => {
    let offline = false;
    const base = collecting(0, DOCS);
    const fetchImpl: FetchLike = async (url, init) => {
      if (offline) throw new Error('ECONNREFUSED');
      return transport(() => base)(url, init);
    };
    const store = new AnnotationStore(new ApiClient('', fetchImpl));
    await store.poll();
    store.setLabel('a', 1);
    offline = true;
    await store.poll();
    const snap = store.snapshot();
    expect(snap.lastError).toContain('ECONNREFUSED');
    expect(snap.view).toBe('labeling');
    const byId = new Map(snap.items.map((it) => [it.id, it.label]));
    expect(byId.get('a')).toBe(1);  // nothing lost
  });
});

describe('waiting and complete states', () => {
  it('shows the trace while waiting', async () => {
    const script: Scripted = {
      status: { session_id: 's', state: 'waiting', batch_index: 1,
                pending_count: 0, received_count: 0, labeled_total: 25 },
      trace: { state: 'waiting', records: [
        { iteration: 0, labeled_count: 20, positive_share: 0.1,
          pool: { precision: null, recall: 0, f1: null },
          test: { precision: 0.5, recall: 0.4, f1: 0.44 } }] },
    };
    const store = new AnnotationStore(new ApiClient('', transport(() => script)));
    await store.poll();
    const snap = store.snapshot();
    expect(snap.view).toBe('waiting');
    expect(snap.trace?.records).toHaveLength(1);
    expect(snap.labeledTotal).toBe(25);
  });
});
