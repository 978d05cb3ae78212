import { ApiClient, ConflictError } from "./api.js";
import type { QueuedDecision } from "./types.js";

/**
 * Per-annotator outbox for decisions. Posts strictly in order; a network
 * failure keeps the remaining items queued for a later retry, while a
 * conflict drops the offending item (someone already decided that pair) and
 * keeps going.
 */
export class DecisionQueue {
  private items: QueuedDecision[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly onConflict?: (d: QueuedDecision, message: string) => void,
  ) {}

  get pending(): number {
    return this.items.length;
  }

  snapshot(): QueuedDecision[] {
    return [...this.items];
  }

  /** Enqueue and immediately try to drain. Resolves true when drained. */
  push(decision: QueuedDecision): Promise<boolean> {
    this.items.push(decision);
    return this.flush();
  }

  async flush(): Promise<boolean> {
    while (this.items.length > 0) {
      const head = this.items[0]!;
      try {
        await this.api.postDecision(head);
      } catch (err) {
        if (err instanceof ConflictError) {
          this.items.shift();
          this.onConflict?.(head, err.message);
          continue;
        }
        return false; // offline or server trouble: keep order, retry later
      }
      this.items.shift();
    }
    return true;
  }
}
