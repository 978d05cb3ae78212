export type Decision = "accept" | "reject";

/** Mirrors the GET /api/session/next payload exactly; read-only. */
export interface CandidateCard {
  rule_id: string;
  rule_text: string;
  prompt: string;
  source_text: string;
  label_name: string;
  iteration: number;
}

export interface SessionSummary {
  active: boolean;
  finished: boolean;
  id?: string;
  iteration?: number;
  state?: string;
  annotators?: string[];
  n_candidates?: number;
  expected_decisions?: number;
}

export interface Progress {
  decided: number;
  expected: number;
  complete: boolean;
  per_annotator: Record<string, number>;
}

export interface ReportRow {
  iteration: number;
  err_t: number;
  alpha_t: number;
  rules_proposed: number;
  rules_accepted: number;
  accepted_total: number;
  coverage: number;
  rule_accuracy: number | null;
  ensemble_accuracy_dev: number;
  ensemble_accuracy_test: number | null;
  kappa: { p_bar: number; p_e: number; kappa: number } | null;
  wall_time: number;
}

export interface AgreementRow {
  iteration: number;
  p_bar: number;
  p_e: number;
  kappa: number;
}

export interface QueuedDecision {
  rule_id: string;
  annotator: string;
  decision: Decision;
  latency_ms: number;
}
