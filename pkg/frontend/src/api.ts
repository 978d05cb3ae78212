import type {
  AgreementRow,
  CandidateCard,
  Progress,
  QueuedDecision,
  ReportRow,
  SessionSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** 409 from the decision endpoint: the pair was already decided elsewhere. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
  }
}

type FetchLike = typeof fetch;

/**
 * Thin typed wrapper over the annotation service API. The client never
 * mutates server state except through postDecision.
 */
export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    const body = await resp.json().catch(() => ({}));
    if (resp.status === 409) {
      throw new ConflictError(String((body as { error?: string }).error ?? "conflict"));
    }
    if (!resp.ok) {
      throw new ApiError(
        String((body as { error?: string }).error ?? `HTTP ${resp.status}`),
        resp.status,
      );
    }
    return body;
  }

  session(): Promise<SessionSummary> {
    return this.request("/api/session") as Promise<SessionSummary>;
  }

  /** Next undecided candidate for the annotator, or null when none remain. */
  async next(annotator: string): Promise<CandidateCard | null> {
    const body = (await this.request(
      `/api/session/next?annotator=${encodeURIComponent(annotator)}`,
    )) as CandidateCard | { done: boolean };
    if ("done" in body && body.done) {
      return null;
    }
    return body as CandidateCard;
  }

  async postDecision(decision: QueuedDecision): Promise<void> {
    await this.request("/api/session/decision", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  progress(): Promise<Progress> {
    return this.request("/api/session/progress") as Promise<Progress>;
  }

  async metrics(): Promise<ReportRow[]> {
    const body = (await this.request("/api/metrics")) as { reports: ReportRow[] };
    return body.reports;
  }

  async agreement(): Promise<AgreementRow[]> {
    const body = (await this.request("/api/agreement")) as { rows: AgreementRow[] };
    return body.rows;
  }
}
