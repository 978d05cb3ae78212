"""Multiclass boosting bookkeeping over the small clean set.

Instance weights concentrate on examples the current models keep getting
wrong; those large-error instances seed the next round of rule discovery.
The model coefficient follows the multiclass (SAMME-style) form
``log((1-err)/err) + log(K-1)`` and reduces to the classic two-class
coefficient when K == 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .data import Dataset, Instance

#: Error-rate clamp keeping the coefficient finite for perfect models.
ERR_EPSILON = 1e-10


@dataclass(frozen=True)
class BoostState:
    """Positive per-instance weights (aligned with the clean set) plus history."""

    weights: tuple[float, ...]
    iteration: int = 0
    history: tuple[tuple[float, float], ...] = ()  # (err_t, alpha_t) per round

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("empty clean set")
        if any(w <= 0.0 for w in self.weights):
            raise ValueError("all boosting weights must be positive")


def init_weights(n_clean: int) -> BoostState:
    """Uniform weights 1/n over the clean set, iteration 0, no history."""
    if n_clean < 1:
        raise ValueError("empty clean set")
    return BoostState(weights=(1.0 / n_clean,) * n_clean)


def _check_aligned(state: BoostState, predictions: list[int], gold: list[int]) -> None:
    if not (len(state.weights) == len(predictions) == len(gold)):
        raise ValueError(
            f"length mismatch: {len(state.weights)} weights, "
            f"{len(predictions)} predictions, {len(gold)} gold labels"
        )


def weighted_error(state: BoostState, predictions: list[int], gold: list[int]) -> float:
    """Weighted misclassification fraction sum(w*1[y!=p]) / sum(w)."""
    _check_aligned(state, predictions, gold)
    total = sum(state.weights)
    wrong = sum(
        w for w, p, y in zip(state.weights, predictions, gold) if p != y
    )
    return wrong / total


def model_coefficient(err_t: float, k: int) -> float:
    """Model weight log((1-err)/err) + log(K-1), natural logarithm.

    A zero (or one) error rate is clamped to keep the value finite. A return
    value <= 0 signals a worse-than-chance model; callers decide whether to
    keep it out of the voting ensemble.
    """
    if k < 2:
        raise ValueError(f"need at least 2 classes, got {k}")
    if err_t <= 0.0:
        warnings.warn(
            f"error rate {err_t} clamped to {ERR_EPSILON}", stacklevel=2
        )
        err_t = ERR_EPSILON
    elif err_t >= 1.0:
        warnings.warn(
            f"error rate {err_t} clamped to {1.0 - ERR_EPSILON}", stacklevel=2
        )
        err_t = 1.0 - ERR_EPSILON
    return math.log((1.0 - err_t) / err_t) + math.log(k - 1)


def is_worse_than_chance(err_t: float, k: int) -> bool:
    return err_t >= (k - 1) / k


def update_weights(
    state: BoostState, alpha_t: float, predictions: list[int], gold: list[int]
) -> BoostState:
    """Multiply misclassified weights by exp(alpha_t), then renormalize to sum 1.

    Renormalization keeps 10+ rounds overflow-free and cannot change any
    argmax-based selection. The pre-update weighted error is recorded in the
    history together with alpha_t.
    """
    if not math.isfinite(alpha_t):
        raise ValueError(f"alpha_t must be finite, got {alpha_t}")
    _check_aligned(state, predictions, gold)
    err_t = weighted_error(state, predictions, gold)
    scaled = [
        w * math.exp(alpha_t) if p != y else w
        for w, p, y in zip(state.weights, predictions, gold)
    ]
    total = sum(scaled)
    return BoostState(
        weights=tuple(w / total for w in scaled),
        iteration=state.iteration + 1,
        history=state.history + ((err_t, alpha_t),),
    )


def top_n_large_error(
    state: BoostState,
    clean: Dataset,
    ensemble_predictions: list[int],
    n: int,
) -> list[Instance]:
    """The n misclassified clean instances with the largest weights.

    If fewer than n are misclassified, the remainder is padded with the
    largest-weight correctly-classified instances so the rule budget stays
    fully used. Ties break on instance id ascending.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if len(clean.instances) != len(state.weights) or len(ensemble_predictions) != len(
        state.weights
    ):
        raise ValueError("clean set, predictions, and weights must align")
    wrong: list[tuple[float, str, Instance]] = []
    right: list[tuple[float, str, Instance]] = []
    for w, pred, inst in zip(state.weights, ensemble_predictions, clean.instances):
        bucket = wrong if pred != inst.gold_label else right
        bucket.append((w, inst.id, inst))
    key = lambda item: (-item[0], item[1])
    ordered = sorted(wrong, key=key) + sorted(right, key=key)
    return [inst for _, _, inst in ordered[:n]]


def boost_state_to_json(state: BoostState) -> dict:
    return {
        "weights": list(state.weights),
        "iteration": state.iteration,
        "history": [list(h) for h in state.history],
    }


def boost_state_from_json(row: dict) -> BoostState:
    return BoostState(
        weights=tuple(row["weights"]),
        iteration=row["iteration"],
        history=tuple((h[0], h[1]) for h in row["history"]),
    )
