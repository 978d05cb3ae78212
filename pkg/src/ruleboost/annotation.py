"""Candidate-rule annotation: sessions, majority voting, merging, agreement.

A session distributes one iteration's candidate rules to annotators for
binary accept/reject decisions. Decisions are immutable once recorded (a
second write for the same pair is an error, never an overwrite), votes need
a strict majority to accept, and accepted singleton rules from the same
source instance and label are merged into one rule by unioning their mask
vocabularies. Fleiss' kappa summarizes inter-annotator agreement. A scripted
annotator stands in for humans in headless runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Mapping, Sequence

import numpy as np

from .data import Dataset, LabelSpace, Rule, rule_from_json, rule_to_json, with_status
from .matching import MatchConfig, RuleMatcher
from .rulegen import MaskFiller, RuleTemplate, derive_seed, render_rule_text

Decision = Literal["accept", "reject"]
DECISIONS = ("accept", "reject")


@dataclass(frozen=True)
class AnnotationSession:
    """One iteration's candidates plus per-annotator binary decisions."""

    id: str
    iteration: int
    rules: tuple[Rule, ...]
    annotators: tuple[str, ...]
    decisions: Mapping[tuple[str, str], str] = field(default_factory=dict)
    latencies: Mapping[tuple[str, str], float] = field(default_factory=dict)
    state: Literal["open", "closed"] = "open"
    k: int = 10

    @property
    def candidates(self) -> tuple[str, ...]:
        return tuple(rule.id for rule in self.rules)

    def rule_by_id(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    def decided(self) -> int:
        return len(self.decisions)

    def expected(self) -> int:
        return len(self.rules) * len(self.annotators)

    def undecided_for(self, annotator_id: str) -> list[str]:
        """Rule ids still awaiting this annotator's decision, in session order."""
        if annotator_id not in self.annotators:
            raise KeyError(f"unknown annotator {annotator_id}")
        return [
            rule.id
            for rule in self.rules
            if (rule.id, annotator_id) not in self.decisions
        ]

    def missing_pairs(self, quorum: int | None = None) -> list[tuple[str, str]]:
        """Pairs still required before the session may close.

        With a quorum of m, a rule needs any m decisions; without one, every
        (rule, annotator) pair must be decided.
        """
        if quorum is not None:
            missing = []
            for rule in self.rules:
                have = sum(
                    1 for a in self.annotators if (rule.id, a) in self.decisions
                )
                if have < quorum:
                    missing.extend(
                        (rule.id, a)
                        for a in self.annotators
                        if (rule.id, a) not in self.decisions
                    )
            return missing
        return [
            (rule.id, a)
            for rule in self.rules
            for a in self.annotators
            if (rule.id, a) not in self.decisions
        ]


def open_session(
    candidates: Sequence[Rule],
    annotators: Sequence[str],
    iteration: int,
    k: int = 10,
) -> AnnotationSession:
    if not annotators:
        raise ValueError("need at least one annotator")
    for rule in candidates:
        if rule.status != "candidate":
            raise ValueError(f"rule {rule.id} is already {rule.status}")
    ids = [rule.id for rule in candidates]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate rule ids in candidate list")
    return AnnotationSession(
        id=f"session-{iteration}",
        iteration=iteration,
        rules=tuple(candidates),
        annotators=tuple(annotators),
        k=k,
    )


def record_decision(
    session: AnnotationSession,
    rule_id: str,
    annotator_id: str,
    decision: str,
    latency_ms: float | None = None,
) -> AnnotationSession:
    """Store one immutable decision; duplicates and unknown ids are errors."""
    if session.state != "open":
        raise ValueError("session is closed")
    if rule_id not in session.candidates:
        raise KeyError(f"unknown rule {rule_id}")
    if annotator_id not in session.annotators:
        raise KeyError(f"unknown annotator {annotator_id}")
    if decision not in DECISIONS:
        raise ValueError(f"decision must be accept or reject, got {decision!r}")
    pair = (rule_id, annotator_id)
    if pair in session.decisions:
        raise ValueError(f"already decided: {rule_id} by {annotator_id}")
    decisions = dict(session.decisions)
    decisions[pair] = decision
    latencies = dict(session.latencies)
    if latency_ms is not None:
        latencies[pair] = latency_ms
    return replace(session, decisions=decisions, latencies=latencies)


def close_and_vote(
    session: AnnotationSession,
    quorum: int | None = None,
    labels: LabelSpace | None = None,
) -> tuple[AnnotationSession, list[Rule]]:
    """Majority-vote the candidates, merge accepted rules, close the session.

    A rule is accepted only on a strict majority of its recorded decisions
    (ties reject). Accepted rules sharing (source instance, label, entity
    constraint, template) merge by vocabulary union, truncated to the
    session's k with contributions ordered by rule id.
    """
    if session.state != "open":
        raise ValueError("session already closed")
    missing = session.missing_pairs(quorum)
    if missing:
        raise ValueError(f"quorum unmet; missing decisions: {missing[:10]}")
    accepted: list[Rule] = []
    for rule in session.rules:
        votes = [
            session.decisions[(rule.id, a)]
            for a in session.annotators
            if (rule.id, a) in session.decisions
        ]
        n_accept = sum(v == "accept" for v in votes)
        if 2 * n_accept > len(votes):
            accepted.append(rule)
    merged: dict[tuple, list[Rule]] = {}
    for rule in accepted:
        key = (rule.source_instance_id, rule.label, rule.entity_constraint, rule.template_id)
        merged.setdefault(key, []).append(rule)
    out: list[Rule] = []
    for group in merged.values():
        group.sort(key=lambda r: r.id)
        base = group[0]
        vocab: list[str] = []
        for rule in group:
            for tok in sorted(rule.mask_vocabulary):
                if tok not in vocab:
                    vocab.append(tok)
        vocab = vocab[: session.k]
        display = labels.name_of(base.label) if labels else str(base.label)
        out.append(
            replace(
                with_status(base, "accepted"),
                mask_vocabulary=frozenset(vocab),
                rule_text=render_rule_text(
                    frozenset(vocab), display, base.entity_constraint
                ),
            )
        )
    out.sort(key=lambda r: r.id)
    return replace(session, state="closed"), out


def decision_matrix(session: AnnotationSession) -> np.ndarray:
    """N x 2 matrix of (accept, reject) counts per rule, in session order."""
    counts = np.zeros((len(session.rules), 2), dtype=float)
    for i, rule in enumerate(session.rules):
        for annotator in session.annotators:
            decision = session.decisions.get((rule.id, annotator))
            if decision == "accept":
                counts[i, 0] += 1
            elif decision == "reject":
                counts[i, 1] += 1
    return counts


def kappa_from_agreement(p_bar: float, p_e: float) -> float:
    """Chance-corrected agreement (p_bar - p_e) / (1 - p_e)."""
    if p_e >= 1.0:
        if abs(p_bar - 1.0) < 1e-12:
            return 1.0
        raise ValueError("degenerate agreement: expected agreement is 1")
    return (p_bar - p_e) / (1.0 - p_e)


def fleiss_kappa(matrix: np.ndarray) -> tuple[float, float, float]:
    """Fleiss' kappa over an N x C matrix of per-category rating counts.

    Returns (p_bar, p_e, kappa). Every item must be rated by the same number
    n >= 2 of annotators.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise ValueError("expected an N x C count matrix")
    row_totals = matrix.sum(axis=1)
    n = row_totals[0]
    if n < 2 or not np.all(row_totals == n):
        raise ValueError("every item needs the same number (>= 2) of ratings")
    p_i = ((matrix * matrix).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_i.mean())
    proportions = matrix.sum(axis=0) / matrix.sum()
    p_e = float((proportions * proportions).sum())
    return p_bar, p_e, kappa_from_agreement(p_bar, p_e)


@dataclass(frozen=True)
class ScriptedAnnotatorSpec:
    """Headless annotator policy: oracle checks rule precision on a labeled pool."""

    policy: Literal["oracle", "noisy_oracle", "accept_all", "reject_all"] = "oracle"
    p_flip: float = 0.0
    seed: int = 0
    precision_threshold: float = 0.8

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_flip < 0.5:
            raise ValueError("p_flip must be in [0, 0.5)")


def rule_precision(
    rule: Rule,
    eval_pool: Dataset,
    cfg: MatchConfig,
    filler: MaskFiller,
    template: RuleTemplate | None = None,
    matcher: RuleMatcher | None = None,
) -> float:
    """Empirical precision of one rule over a labeled pool (0 when it matches nothing)."""
    probe = with_status(rule, "accepted") if rule.status == "candidate" else rule
    matcher = matcher or RuleMatcher(cfg, filler, template)
    matched = 0
    correct = 0
    for inst in eval_pool.instances:
        if matcher.score(inst, probe) > cfg.sigma:
            matched += 1
            correct += int(inst.gold_label == probe.label)
    return correct / matched if matched else 0.0


def scripted_annotate(
    session: AnnotationSession,
    spec: ScriptedAnnotatorSpec,
    eval_pool: Dataset | None = None,
    cfg: MatchConfig | None = None,
    filler: MaskFiller | None = None,
    template: RuleTemplate | None = None,
) -> AnnotationSession:
    """Fill in every (rule, annotator) decision according to the policy.

    Oracle policies accept a rule iff its precision on the eval pool exceeds
    the threshold; the noisy variant flips each decision independently per
    (annotator, rule) with probability p_flip, seeded so identical inputs
    reproduce identical sessions.
    """
    oracle_needed = spec.policy in ("oracle", "noisy_oracle")
    if oracle_needed:
        if eval_pool is None or not eval_pool.instances:
            raise ValueError("oracle policies need a non-empty labeled pool")
        if cfg is None or filler is None:
            raise ValueError("oracle policies need a match config and filler")
        matcher = RuleMatcher(cfg, filler, template)
    base: dict[str, str] = {}
    for rule in session.rules:
        if spec.policy == "accept_all":
            base[rule.id] = "accept"
        elif spec.policy == "reject_all":
            base[rule.id] = "reject"
        else:
            precision = rule_precision(
                rule, eval_pool, cfg, filler, template, matcher
            )
            base[rule.id] = (
                "accept" if precision > spec.precision_threshold else "reject"
            )
    for rule in session.rules:
        for annotator in session.annotators:
            decision = base[rule.id]
            if spec.policy == "noisy_oracle" and spec.p_flip > 0.0:
                rng = np.random.default_rng(derive_seed(spec.seed, annotator, rule.id))
                if rng.random() < spec.p_flip:
                    decision = "reject" if decision == "accept" else "accept"
            session = record_decision(session, rule.id, annotator, decision)
    return session


def session_to_json(session: AnnotationSession) -> dict:
    return {
        "id": session.id,
        "iteration": session.iteration,
        "rules": [rule_to_json(r) for r in session.rules],
        "annotators": list(session.annotators),
        "decisions": [
            {"rule_id": rid, "annotator": a, "decision": d}
            for (rid, a), d in sorted(session.decisions.items())
        ],
        "latencies": [
            {"rule_id": rid, "annotator": a, "latency_ms": ms}
            for (rid, a), ms in sorted(session.latencies.items())
        ],
        "state": session.state,
        "k": session.k,
    }


def session_from_json(row: dict) -> AnnotationSession:
    return AnnotationSession(
        id=row["id"],
        iteration=row["iteration"],
        rules=tuple(rule_from_json(r) for r in row["rules"]),
        annotators=tuple(row["annotators"]),
        decisions={
            (d["rule_id"], d["annotator"]): d["decision"] for d in row["decisions"]
        },
        latencies={
            (d["rule_id"], d["annotator"]): d["latency_ms"]
            for d in row.get("latencies", [])
        },
        state=row["state"],
        k=row["k"],
    )
