import { AnnotateFlow, keyToDecision } from "./annotate.js";
import type { FlowStats } from "./annotate.js";
import { ApiClient } from "./api.js";
import { DashboardPoller, progressPercent } from "./dashboard.js";
import type { DashboardState } from "./dashboard.js";
import { DecisionQueue } from "./queue.js";
import type { CandidateCard } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

/** The prompt with its [MASK] slot highlighted. */
export function renderPrompt(prompt: string): string {
  return escapeHtml(prompt).replace(/\[MASK\]/g, "<mark>[MASK]</mark>");
}

function renderCard(card: CandidateCard): void {
  $("card").hidden = false;
  $("done-screen").hidden = true;
  $("card-rule").textContent = card.rule_text;
  $("card-prompt").innerHTML = renderPrompt(card.prompt);
  $("card-source").textContent = card.source_text;
  $("card-label").textContent = card.label_name;
  $("card-iteration").textContent = `iteration ${card.iteration}`;
}

function renderDone(stats: FlowStats): void {
  $("card").hidden = true;
  $("done-screen").hidden = false;
  $("done-stats").textContent =
    `${stats.decided} decided (${stats.accepted} accepted, ${stats.rejected} rejected), ` +
    `mean ${(stats.meanLatencyMs / 1000).toFixed(1)}s per rule`;
}

function notice(message: string): void {
  const box = $("notice");
  box.textContent = message;
  box.hidden = false;
  setTimeout(() => (box.hidden = true), 4000);
}

function renderDashboard(state: DashboardState): void {
  $("stale-banner").hidden = !state.stale;
  const pct = progressPercent(state.progress);
  $("progress-bar").style.width = `${pct}%`;
  $("progress-text").textContent = state.progress
    ? `${state.progress.decided} / ${state.progress.expected} decisions (${pct}%)`
    : "no active session";
  const reportRows = state.reports
    .map(
      (r) =>
        `<tr><td>${r.iteration}</td><td>${r.coverage.toFixed(3)}</td>` +
        `<td>${r.rule_accuracy === null ? "-" : r.rule_accuracy.toFixed(3)}</td>` +
        `<td>${r.ensemble_accuracy_dev.toFixed(3)}</td>` +
        `<td>${r.ensemble_accuracy_test === null ? "-" : r.ensemble_accuracy_test.toFixed(3)}</td>` +
        `<td>${r.rules_accepted}/${r.rules_proposed}</td></tr>`,
    )
    .join("");
  $("metrics-body").innerHTML =
    reportRows || `<tr><td colspan="6" class="empty">no iterations yet</td></tr>`;
  const agreementRows = state.agreement
    .map(
      (a) =>
        `<tr><td>${a.iteration}</td><td>${a.p_bar.toFixed(2)}</td>` +
        `<td>${a.p_e.toFixed(2)}</td><td>${a.kappa.toFixed(2)}</td></tr>`,
    )
    .join("");
  $("agreement-body").innerHTML =
    agreementRows || `<tr><td colspan="4" class="empty">no agreement data yet</td></tr>`;
}

function boot(): void {
  const base = (window.location.hash || "").startsWith("#http")
    ? window.location.hash.slice(1)
    : `${window.location.protocol}//${window.location.host}`;
  const api = new ApiClient(base);

  const poller = new DashboardPoller(api, renderDashboard);
  poller.start();

  let flow: AnnotateFlow | null = null;

  $("start-button").addEventListener("click", () => {
    const annotator = ($("annotator-input") as HTMLInputElement).value.trim();
    if (!annotator) {
      notice("enter your annotator id first");
      return;
    }
    const queue = new DecisionQueue(api, (d, msg) =>
      notice(`rule ${d.rule_id} skipped: ${msg}`),
    );
    flow = new AnnotateFlow(
      api,
      annotator,
      queue,
      { onCard: renderCard, onDone: renderDone, onNotice: notice },
      () => performance.now(),
    );
    $("login").hidden = true;
    void flow.start();
  });

  window.addEventListener("keydown", (event) => {
    if (
      event.target instanceof HTMLInputElement ||
      event.target instanceof HTMLTextAreaElement
    ) {
      return;
    }
    const decision = keyToDecision(event.key);
    if (decision && flow) {
      event.preventDefault();
      void flow.decide(decision);
    }
  });
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
