// Thin typed client for the elicitation service. All numerical truth
// lives server-side; this file only moves JSON.

import type {
  FitStatusDoc,
  JudgementSubmission,
  PredictiveDoc,
  SessionDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

/** Network-level failure (server unreachable); retryable by the UI. */
export class ConnectionError extends Error {}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${path}`, {
        headers: { "content-type": "application/json" },
        ...init,
      });
    } catch (err) {
      throw new ConnectionError(`server unreachable: ${String(err)}`);
    }
    const text = await response.text();
    const body = text ? JSON.parse(text) : {};
    if (!response.ok) {
      // Error bodies carry {error, message}; surface the message verbatim.
      throw new ApiError(
        response.status,
        body.error ?? "HttpError",
        body.message ?? response.statusText,
      );
    }
    return body as T;
  }

  listModels(): Promise<{ models: { model: string; names: string[] }[] }> {
    return this.request("/models");
  }

  createSession(body: {
    model: string;
    partitions: unknown[];
    covariates: unknown[];
    model_options?: Record<string, unknown>;
  }): Promise<SessionDoc> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.request(`/sessions/${id}`);
  }

  submitJudgements(
    id: string,
    judgements: JudgementSubmission[],
  ): Promise<SessionDoc> {
    return this.request(`/sessions/${id}/judgements`, {
      method: "POST",
      body: JSON.stringify({ judgements }),
    });
  }

  startFit(id: string, config?: Record<string, unknown>): Promise<unknown> {
    return this.request(`/sessions/${id}/fit`, {
      method: "POST",
      body: JSON.stringify({ config: config ?? {} }),
    });
  }

  fitStatus(id: string): Promise<FitStatusDoc> {
    return this.request(`/sessions/${id}/fit/status`);
  }

  predictive(
    id: string,
    params: { covariate: string; from?: number; to?: number; points?: number },
  ): Promise<PredictiveDoc> {
    const q = new URLSearchParams({ covariate: params.covariate });
    if (params.from !== undefined) q.set("from", String(params.from));
    if (params.to !== undefined) q.set("to", String(params.to));
    if (params.points !== undefined) q.set("points", String(params.points));
    return this.request(`/sessions/${id}/predictive?${q.toString()}`);
  }
}
