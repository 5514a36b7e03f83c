// Typed client for the annotation service JSON endpoints.

export interface StatusPayload {
  session_id: string;
  state: 'waiting' | 'collecting' | 'complete';
  batch_index: number;
  pending_count: number;
  received_count: number;
  labeled_total: number;
}

export interface BatchDoc {
  id: string;
  text: string;
  uncertainty: number;
}

export interface ScoreSet {
  precision: number | null;
  recall: number | null;
  f1: number | null;
}

export interface TraceRecord {
  iteration: number;
  labeled_count: number;
  positive_share: number;
  pool: ScoreSet;
  test: ScoreSet;
}

export interface TracePayload {
  state: string;
  records: TraceRecord[];
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private readonly base: string,
              private readonly fetchImpl: FetchLike) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`);
    if (!res.ok) {
      throw new ApiError(res.status, `GET ${path} -> ${res.status}`);
    }
    return res.json() as Promise<T>;
  }

  status(): Promise<StatusPayload> {
    return this.get<StatusPayload>('/status');
  }

  batch(): Promise<BatchDoc[]> {
    return this.get<BatchDoc[]>('/batch');
  }

  trace(): Promise<TracePayload> {
    return this.get<TracePayload>('/trace');
  }

  /** Submit a full batch of labels; resolves to the HTTP status code. */
  async submitLabels(labels: Record<string, 0 | 1>): Promise<number> {
    const res = await this.fetchImpl(`${this.base}/labels`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ labels }),
    });
    if (res.ok || res.status === 409 || res.status === 202) {
      return res.status;
    }
    throw new ApiError(res.status, `POST /labels -> ${res.status}`);
  }
}
