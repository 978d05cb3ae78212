import { ApiClient } from "./api.js";
import type { AgreementRow, Progress, ReportRow, SessionSummary } from "./types.js";

export interface DashboardState {
  summary: SessionSummary | null;
  reports: ReportRow[];
  agreement: AgreementRow[];
  progress: Progress | null;
  stale: boolean;
}

/** The only client-side arithmetic: a ratio of two fetched counts. */
export function progressPercent(progress: Progress | null): number {
  if (!progress || progress.expected === 0) {
    return 0;
  }
  return Math.round((100 * progress.decided) / progress.expected);
}

/**
 * Polls the metrics endpoints on a fixed interval. All numbers are
 * display-only; a fetch failure keeps the last good data and raises the
 * stale flag for the banner.
 */
export class DashboardPoller {
  private state: DashboardState = {
    summary: null,
    reports: [],
    agreement: [],
    progress: null,
    stale: false,
  };
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly onUpdate: (state: DashboardState) => void,
    private readonly intervalMs = 2000,
  ) {}

  async tick(): Promise<DashboardState> {
    try {
      const [summary, reports, agreement, progress] = await Promise.all([
        this.api.session(),
        this.api.metrics(),
        this.api.agreement(),
        this.api.progress(),
      ]);
      this.state = { summary, reports, agreement, progress, stale: false };
    } catch {
      this.state = { ...this.state, stale: true };
    }
    this.onUpdate(this.state);
    return this.state;
  }

  start(): void {
    if (this.timer === null) {
      void this.tick();
      this.timer = setInterval(() => void this.tick(), this.intervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
