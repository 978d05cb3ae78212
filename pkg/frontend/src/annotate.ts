import { ApiClient } from "./api.js";
import { DecisionQueue } from "./queue.js";
import type { CandidateCard, Decision } from "./types.js";

export interface FlowStats {
  decided: number;
  accepted: number;
  rejected: number;
  meanLatencyMs: number;
}

export interface FlowHooks {
  onCard?(card: CandidateCard): void;
  onDone?(stats: FlowStats): void;
  onNotice?(message: string): void;
}

/** Maps the single-keystroke bindings: A accepts, R rejects. */
export function keyToDecision(key: string): Decision | null {
  const k = key.toLowerCase();
  if (k === "a") return "accept";
  if (k === "r") return "reject";
  return null;
}

/**
 * The annotate loop: fetch-next, show the card, take one accept/reject,
 * post it (through the ordered offline queue) with the observed decision
 * latency, fetch the next. Conflicts skip the card with a notice.
 */
export class AnnotateFlow {
  private card: CandidateCard | null = null;
  private shownAt = 0;
  private latencies: number[] = [];
  private counts = { accept: 0, reject: 0 };

  constructor(
    private readonly api: ApiClient,
    private readonly annotator: string,
    private readonly queue: DecisionQueue,
    private readonly hooks: FlowHooks = {},
    private readonly clock: () => number = () => Date.now(),
  ) {}

  get currentCard(): CandidateCard | null {
    return this.card;
  }

  stats(): FlowStats {
    const total = this.latencies.reduce((a, b) => a + b, 0);
    return {
      decided: this.counts.accept + this.counts.reject,
      accepted: this.counts.accept,
      rejected: this.counts.reject,
      meanLatencyMs: this.latencies.length ? total / this.latencies.length : 0,
    };
  }

  async start(): Promise<void> {
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    let next: CandidateCard | null;
    try {
      next = await this.api.next(this.annotator);
    } catch (err) {
      this.hooks.onNotice?.(`cannot reach the service: ${(err as Error).message}`);
      return;
    }
    if (next === null) {
      this.card = null;
      this.hooks.onDone?.(this.stats());
      return;
    }
    const queuedIds = new Set(this.queue.snapshot().map((d) => d.rule_id));
    if (queuedIds.has(next.rule_id)) {
      // The server hasn't seen our queued decision for this card yet; wait
      // for a retry instead of presenting it a second time.
      this.hooks.onNotice?.("waiting to sync queued decisions before continuing");
      return;
    }
    this.card = next;
    this.shownAt = this.clock();
    this.hooks.onCard?.(next);
  }

  /** Record one keystroke for the current card and advance. */
  async decide(decision: Decision): Promise<void> {
    if (this.card === null) {
      return;
    }
    const card = this.card;
    this.card = null;
    const latency = this.clock() - this.shownAt;
    this.latencies.push(latency);
    this.counts[decision] += 1;
    const drained = await this.queue.push({
      rule_id: card.rule_id,
      annotator: this.annotator,
      decision,
      latency_ms: latency,
    });
    if (!drained) {
      this.hooks.onNotice?.(
        `offline: ${this.queue.pending} decision(s) queued, will retry in order`,
      );
    }
    await this.fetchNext();
  }

  /** Retry a previously stalled queue, then resume fetching if idle. */
  async retry(): Promise<void> {
    const drained = await this.queue.flush();
    if (drained && this.card === null) {
      await this.fetchNext();
    }
  }
}
