"""Soft rule matching: combined embedding / vocabulary-overlap similarity.

An accepted rule matches an unlabeled instance when the convex combination
``alpha * cosine + (1 - alpha) * overlap`` strictly exceeds the threshold
sigma. An entity-type constraint is a hard gate (score 0 on mismatch), and
conflicts between rules are resolved by the highest score with deterministic
tie-breaking (older rule wins).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .data import (
    Dataset,
    Instance,
    Rule,
    SparseVec,
    WeakLabelRecord,
    featurize,
)
from .rulegen import MaskFiller, RuleTemplate, render_prompt


@dataclass(frozen=True)
class MatchConfig:
    alpha: float = 0.25   # weight of the embedding part of the score
    sigma: float = 0.12   # strict matching threshold
    k: int = 10           # instance-side predicted-vocabulary size

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0,1]")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma {self.sigma} outside [0,1]")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


def embedding_similarity(e_u: SparseVec, e_r: SparseVec) -> float:
    """Cosine similarity clamped to [0,1]; zero vectors similarity 0."""
    if e_u.size != e_r.size:
        raise ValueError(f"feature space mismatch: {e_u.size} vs {e_r.size}")
    if e_u.is_zero or e_r.is_zero:
        return 0.0
    cos = e_u.dot(e_r) / (e_u.norm() * e_r.norm())
    return min(1.0, max(0.0, cos))


def vocab_similarity(v_u: frozenset[str] | set[str], v_r: frozenset[str] | set[str], k: int) -> float:
    """Overlap ratio |V_u & V_r| / k; the instance side must hold exactly k tokens."""
    if len(v_u) != k:
        raise ValueError(f"instance vocabulary must have exactly k={k} tokens, got {len(v_u)}")
    if len(v_r) > k:
        raise ValueError(f"rule vocabulary larger than k={k}: {len(v_r)}")
    return len(set(v_u) & set(v_r)) / k


def matching_score(s_a: float, s_b: float, alpha: float) -> float:
    """Convex combination alpha*s_a + (1-alpha)*s_b."""
    return alpha * s_a + (1.0 - alpha) * s_b


def rule_embedding(rule: Rule, space_size: int) -> SparseVec:
    """Hashed bag-of-tokens embedding of the rule's mask vocabulary."""
    return featurize(sorted(rule.mask_vocabulary), space_size)


class RuleMatcher:
    """Matches instances against accepted rules with per-instance vocabulary caching.

    The instance-side predicted vocabulary is a pure function of (instance,
    template, filler), so it is memoized across iterations; rule embeddings
    are memoized by rule id.
    """

    def __init__(
        self,
        cfg: MatchConfig,
        filler: MaskFiller,
        template: RuleTemplate | None = None,
    ):
        self.cfg = cfg
        self.filler = filler
        self.template = template
        self._vocab_cache: dict[str, frozenset[str]] = {}
        self._rule_embeddings: dict[str, SparseVec] = {}

    def instance_vocabulary(self, x: Instance) -> frozenset[str]:
        cached = self._vocab_cache.get(x.id)
        if cached is not None:
            return cached
        prompt = render_prompt(self.template, x) if self.template else ""
        preds = self.filler.fill(prompt, x, self.cfg.k)
        vocab = frozenset(p.token for p in preds)
        self._vocab_cache[x.id] = vocab
        return vocab

    def _rule_embedding(self, rule: Rule, space_size: int) -> SparseVec:
        emb = self._rule_embeddings.get(rule.id)
        if emb is None or emb.size != space_size:
            emb = rule_embedding(rule, space_size)
            self._rule_embeddings[rule.id] = emb
        return emb

    def score(self, x: Instance, rule: Rule) -> float:
        """Combined score of one rule on one instance; 0 on entity-gate mismatch."""
        if rule.entity_constraint is not None:
            pair = x.entity_pair
            if pair is None or (pair.head_type, pair.tail_type) != rule.entity_constraint:
                return 0.0
        s_a = embedding_similarity(
            x.features, self._rule_embedding(rule, x.features.size)
        )
        v_u = self.instance_vocabulary(x)
        if len(v_u) == self.cfg.k:
            s_b = vocab_similarity(v_u, rule.mask_vocabulary, self.cfg.k)
        else:
            # Degenerate short pool: keep the fixed normalizer k.
            s_b = len(v_u & rule.mask_vocabulary) / self.cfg.k
        return matching_score(s_a, s_b, self.cfg.alpha)

    def match_instance(
        self, x: Instance, rules: Sequence[Rule], iteration: int = 0
    ) -> WeakLabelRecord | None:
        """Weak label from the best rule scoring strictly above sigma, else None.

        Ties on the score break toward the older rule (iteration asc, id asc).
        """
        for rule in rules:
            if rule.status != "accepted":
                raise ValueError(f"rule {rule.id} is {rule.status}, not accepted")
        best: tuple[float, int, str] | None = None
        best_rule: Rule | None = None
        for rule in rules:
            s = self.score(x, rule)
            if s <= self.cfg.sigma:
                continue
            key = (-s, rule.iteration, rule.id)
            if best is None or key < best:
                best = key
                best_rule = rule
        if best_rule is None:
            return None
        return WeakLabelRecord(
            instance_id=x.id,
            label=best_rule.label,
            rule_id=best_rule.id,
            matching_score=-best[0],
            iteration=iteration,
        )

    def apply_rules(
        self, unlabeled: Dataset, rules: Sequence[Rule], iteration: int = 0
    ) -> tuple[Dataset, float, float | None]:
        """Match every instance; return the weak-labeled set, coverage, accuracy.

        Coverage is matched/total. Rule accuracy is computed only against
        hidden gold labels (evaluation mode) and is None when no matched
        instance carries one.
        """
        matched: list[Instance] = []
        records: dict[str, WeakLabelRecord] = {}
        n_correct = 0
        n_scored = 0
        for inst in unlabeled.instances:
            rec = self.match_instance(inst, rules, iteration)
            if rec is None:
                continue
            matched.append(inst)
            records[inst.id] = rec
            if inst.gold_label is not None:
                n_scored += 1
                n_correct += int(rec.label == inst.gold_label)
        coverage = len(matched) / len(unlabeled.instances) if unlabeled.instances else 0.0
        accuracy = (n_correct / n_scored) if n_scored else None
        return Dataset(tuple(matched), "weak_labeled", records), coverage, accuracy


def match_instance(
    x: Instance,
    rules: Sequence[Rule],
    cfg: MatchConfig,
    filler: MaskFiller,
    template: RuleTemplate | None = None,
    iteration: int = 0,
) -> WeakLabelRecord | None:
    return RuleMatcher(cfg, filler, template).match_instance(x, rules, iteration)


def apply_rules(
    unlabeled: Dataset,
    rules: Sequence[Rule],
    cfg: MatchConfig,
    filler: MaskFiller,
    template: RuleTemplate | None = None,
    iteration: int = 0,
) -> tuple[Dataset, float, float | None]:
    return RuleMatcher(cfg, filler, template).apply_rules(unlabeled, rules, iteration)


DEFAULT_SIGMA_GRID = tuple(round(0.30 + 0.05 * i, 2) for i in range(13))


def sweep_sigma(
    dev: Dataset,
    rules: Sequence[Rule],
    cfg: MatchConfig,
    filler: MaskFiller,
    template: RuleTemplate | None = None,
    grid: Sequence[float] = DEFAULT_SIGMA_GRID,
) -> tuple[float, list[dict]]:
    """Grid-search sigma on the dev set, maximizing weak-label F1.

    Precision is measured over matched dev instances, recall over the whole
    dev set; ties prefer the larger (more conservative) sigma. Returns the
    winning sigma and the per-gridpoint table.
    """
    if not dev.instances:
        raise ValueError("empty dev set")
    matcher = RuleMatcher(cfg, filler, template)
    scored: list[tuple[float, int | None]] = []
    for inst in dev.instances:
        best: tuple[float, int, str] | None = None
        label: int | None = None
        for rule in rules:
            s = matcher.score(inst, rule)
            key = (-s, rule.iteration, rule.id)
            if best is None or key < best:
                best, label = key, rule.label
        scored.append((-best[0] if best is not None else 0.0, label))
    table: list[dict] = []
    best_sigma, best_f1 = grid[0], -1.0
    for sigma in grid:
        matched = [
            (label, inst.gold_label)
            for (score, label), inst in zip(scored, dev.instances)
            if label is not None and score > sigma
        ]
        correct = sum(1 for label, gold in matched if label == gold)
        precision = correct / len(matched) if matched else 0.0
        recall = correct / len(dev.instances)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        table.append(
            {
                "sigma": sigma,
                "coverage": len(matched) / len(dev.instances),
                "precision": precision,
                "recall": recall,
                "f1": f1,
            }
        )
        if f1 >= best_f1:
            best_sigma, best_f1 = sigma, f1
    return best_sigma, table
