import type { QueuedDecision } from "../src/types.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export interface FakeServiceOptions {
  cards: Array<Record<string, unknown>>;
  conflictIds?: Set<string>;
  failPosts?: () => boolean;
}

/**
 * In-memory stand-in for the annotation service: serves cards in order,
 * accepts decisions, and can simulate conflicts or network loss.
 */
export class FakeService {
  decided: QueuedDecision[] = [];

  constructor(private readonly opts: FakeServiceOptions) {}

  fetch = async (input: string | URL | Request, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    if (url.includes("/api/session/next")) {
      const annotator = new URL(url).searchParams.get("annotator") ?? "";
      const seen = new Set(
        this.decided.filter((d) => d.annotator === annotator).map((d) => d.rule_id),
      );
      const next = this.opts.cards.find((c) => !seen.has(String(c.rule_id)));
      return jsonResponse(next ?? { done: true });
    }
    if (url.includes("/api/session/decision")) {
      if (this.opts.failPosts?.()) {
        throw new TypeError("fetch failed");
      }
      const body = JSON.parse(String(init?.body)) as QueuedDecision;
      if (this.opts.conflictIds?.has(body.rule_id)) {
        // record it as decided so /next moves past it
        this.decided.push(body);
        return jsonResponse({ error: "already decided" }, 409);
      }
      this.decided.push(body);
      return jsonResponse({ ok: true, decided: this.decided.length, expected: 0 });
    }
    if (url.includes("/api/session/progress")) {
      return jsonResponse({
        decided: this.decided.length,
        expected: this.opts.cards.length,
        complete: this.decided.length >= this.opts.cards.length,
        per_annotator: {},
      });
    }
    if (url.includes("/api/session")) {
      return jsonResponse({ active: true, finished: false });
    }
    if (url.includes("/api/metrics")) {
      return jsonResponse({ reports: [] });
    }
    if (url.includes("/api/agreement")) {
      return jsonResponse({ rows: [] });
    }
    return jsonResponse({ error: "not found" }, 404);
  };
}

export function card(id: string, overrides: Record<string, unknown> = {}) {
  return {
    rule_id: id,
    rule_text: `[MASK] in {${id}} -> sports`,
    prompt: `[MASK] topic: some text about ${id}`,
    source_text: `some text about ${id}`,
    label_name: "sports",
    iteration: 1,
    ...overrides,
  };
}
