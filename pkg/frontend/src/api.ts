/** Typed client for the gateway HTTP API. All state changes go through here. */

import type {
  Criterion,
  DeterminationRecord,
  ReviewRecord,
  StatementDetail,
  StatementSummary,
} from "./types.js";

export class NotFoundError extends Error {}

/** Optimistic-revision conflict: the UI should reload and retry. */
export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
  }
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (response.status === 404) {
      throw new NotFoundError(`not found: ${path}`);
    }
    if (response.status === 409) {
      const body = await response.text();
      throw new ConflictError(body);
    }
    if (!response.ok) {
      throw new ApiError(await response.text(), response.status);
    }
    return (await response.json()) as T;
  }

  listStatements(): Promise<{ statements: StatementSummary[] }> {
    return this.request("/statements");
  }

  getStatement(id: string): Promise<StatementDetail> {
    return this.request(`/statements/${encodeURIComponent(id)}`);
  }

  submitReview(body: {
    statement_id: string;
    sentence_index: number;
    criterion: Criterion;
    verdict: ReviewRecord["verdict"];
    reviewer_id: string;
    expected_revision?: number;
  }): Promise<ReviewRecord> {
    return this.request("/reviews", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  submitDetermination(body: {
    statement_id: string;
    criterion: Criterion;
    decision: DeterminationRecord["decision"];
    cited_sentences: number[];
    reviewer_id: string;
  }): Promise<DeterminationRecord> {
    return this.request("/determinations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getReport(runId: string, facet: "sector" | "turnover" | "year"): Promise<unknown> {
    return this.request(`/reports/${encodeURIComponent(runId)}?facet=${facet}`);
  }
}
