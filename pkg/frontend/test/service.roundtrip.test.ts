/**
 * Round trip against the real annotation service: the pipeline runs the
 * synthetic experiment in http_sessions mode, and this scripted session
 * plays the browser client, annotating all 20 candidate rules through the
 * same flow code the UI uses. Mid-way we confirm the decisions are visible
 * via /api/session/progress; afterwards the service's own report output
 * confirms the pipeline moved past the annotation stage.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotateFlow } from "../src/annotate.js";
import { ApiClient } from "../src/api.js";
import { DecisionQueue } from "../src/queue.js";

const GEN_SCRIPT = `
import sys
from ruleboost.synthetic import make_synthetic_task, write_task, write_config
outdir = sys.argv[1]
task = make_synthetic_task(seed=0, n_clean=60, n_unlabeled=400, n_dev=60, n_test=100)
write_task(task, outdir)
write_config(task, outdir, checkpoint_dir=outdir + "/run", seed=0, iterations=1,
             top_n=2, candidates_per_instance=10, budget=20, annotators=1,
             http={"host": "127.0.0.1", "port": 0, "session_timeout": 90})
print("ok")
`;

let proc: ChildProcess | null = null;
let base = "";
let stdoutLines: string[] = [];
let exitCode: Promise<number | null> = Promise.resolve(null);

async function waitFor<T>(
  poll: () => Promise<T | null>,
  what: string,
  timeoutMs = 60000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const value = await poll();
      if (value !== null) return value;
    } catch {
      // service not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  const outdir = mkdtempSync(join(tmpdir(), "annot-ui-"));
  const gen = spawnSync("python3", ["-c", GEN_SCRIPT, outdir], { encoding: "utf-8" });
  expect(gen.status, gen.stderr).toBe(0);

  proc = spawn("python3", ["-u", "-m", "ruleboost.cli", "serve", "--config", join(outdir, "config.yaml")]);
  exitCode = new Promise((resolve) => proc!.on("exit", (code) => resolve(code)));
  let buffer = "";
  proc.stdout!.on("data", (chunk: Buffer) => {
    buffer += chunk.toString();
    const lines = buffer.split("\n");
    buffer = lines.pop() ?? "";
    stdoutLines.push(...lines);
  });
  proc.stderr!.on("data", () => {});

  const url = await waitFor(async () => {
    const line = stdoutLines.find((l) => l.includes("listening on"));
    return line ? line.split("listening on ")[1]!.trim() : null;
  }, "the service address", 30000);
  base = url;
}, 60000);

afterAll(() => {
  proc?.kill();
});

describe("annotation round trip against the live service", () => {
  it("annotates 20 rules and drives the pipeline past the annotation stage", async () => {
    const api = new ApiClient(base);

    const summary = await waitFor(
      async () => ((await api.session()).active ? api.session() : null),
      "an active session",
    );
    expect(summary.n_candidates).toBe(20);
    expect(summary.expected_decisions).toBe(20);

    const notices: string[] = [];
    const queue = new DecisionQueue(api, (d, m) => notices.push(`${d.rule_id}:${m}`));
    let done = false;
    const flow = new AnnotateFlow(api, "a1", queue, {
      onDone: () => (done = true),
    });

    await flow.start();
    // Annotate the first half, then check the server sees the decisions.
    for (let i = 0; i < 10; i++) {
      expect(flow.currentCard).not.toBeNull();
      expect(flow.currentCard!.prompt).toContain("[MASK]");
      expect(flow.currentCard!.rule_text.length).toBeGreaterThan(0);
      await flow.decide(i % 5 === 4 ? "reject" : "accept");
    }
    const midway = await api.progress();
    expect(midway.decided).toBe(10);
    expect(midway.expected).toBe(20);
    expect(midway.per_annotator["a1"]).toBe(10);

    while (!done) {
      expect(flow.currentCard).not.toBeNull();
      await flow.decide("accept");
    }
    expect(flow.stats().decided).toBe(20);
    expect(notices).toEqual([]);

    // With the session complete the pipeline finishes its single iteration
    // and the serve process prints one report per iteration and exits 0.
    const code = await exitCode;
    expect(code).toBe(0);
    const reports = stdoutLines
      .filter((l) => l.startsWith("{"))
      .map((l) => JSON.parse(l) as { iteration: number; rules_proposed: number });
    const final = reports.find((r) => r.iteration === 1);
    expect(final).toBeDefined();
    expect(final!.rules_proposed).toBe(20);
  }, 120000);
});
