import { ApiClient } from './api.js';
import { AnnotationStore } from './store.js';
import { AnnotationView } from './ui.js';

const POLL_INTERVAL_MS = 1000;
const MAX_BACKOFF_MS = 10000;

const api = new ApiClient('', (url, init) => fetch(url, init));
const store = new AnnotationStore(api);
const root = document.getElementById('app') as HTMLElement;
new AnnotationView(root, store);

let backoff = POLL_INTERVAL_MS;

async function tick(): Promise<void> {
  await store.poll();
  const snap = store.snapshot();
  backoff = snap.lastError
    ? Math.min(backoff * 2, MAX_BACKOFF_MS)
    : POLL_INTERVAL_MS;
  window.setTimeout(() => void tick(), backoff);
}

void tick();
