/**
 * Thin client for the adjudication HTTP API.
 *
 * The fetch implementation is injectable so tests can run without a
 * server. Server rejections carry the server's error text verbatim.
 */

import type {
  QueueFilter,
  QueueResponse,
  ReportResponse,
  ReviewItem,
  StatusResponse,
  SubmitOutcome,
  VerdictPayload,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseError(response: Response): Promise<never> {
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(message, response.status);
}

export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.base + path);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  fetchQueue(filter: QueueFilter): Promise<QueueResponse> {
    return this.get<QueueResponse>(`/api/items?filter=${filter}`);
  }

  fetchItem(abstractId: string, sentenceIndex: number): Promise<ReviewItem> {
    return this.get<ReviewItem>(`/api/items/${abstractId}/${sentenceIndex}`);
  }

  fetchStatus(): Promise<StatusResponse> {
    return this.get<StatusResponse>('/api/status');
  }

  fetchReport(): Promise<ReportResponse> {
    return this.get<ReportResponse>('/api/report');
  }

  async submitJudgment(payload: VerdictPayload): Promise<SubmitOutcome> {
    const body = await this.post<{ status: SubmitOutcome }>('/api/judgments', payload);
    return body.status;
  }

  async submitResolution(payload: VerdictPayload): Promise<SubmitOutcome> {
    const body = await this.post<{ status: SubmitOutcome }>('/api/resolutions', payload);
    return body.status;
  }
}
