// Thin typed client over the session HTTP API. The console never mutates
// anything locally: every state change is a round trip through here.

import type { AnswerAck, AnswerBody, ExportWire, NextWire, StateWire, StatsWire } from './types';

export class StaleQuestionError extends Error {
  constructor(public pending: unknown) {
    super('answer targeted a stale question');
  }
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    readonly sessionId: string,
  ) {}

  private url(suffix: string): string {
    return `${this.baseUrl}/session/${encodeURIComponent(this.sessionId)}${suffix}`;
  }

  private async getJson<T>(suffix: string): Promise<T> {
    const response = await fetch(this.url(suffix));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  next(): Promise<NextWire> {
    return this.getJson<NextWire>('/next');
  }

  state(): Promise<StateWire> {
    return this.getJson<StateWire>('/state');
  }

  stats(): Promise<StatsWire> {
    return this.getJson<StatsWire>('/stats');
  }

  exportSession(): Promise<ExportWire> {
    return this.getJson<ExportWire>('/export');
  }

  exportUrl(): string {
    return this.url('/export');
  }

  async answer(body: AnswerBody): Promise<AnswerAck> {
    const response = await fetch(this.url('/answer'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (response.status === 409) {
      const payload = await response.json();
      throw new StaleQuestionError(payload.pending);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as AnswerAck;
  }
}
