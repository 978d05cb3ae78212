"""Weighted or equal-weight voting over the per-iteration weak models.

Coefficient-weighted voting sums each member's probability vector scaled by
its boosting coefficient; the equal-weight mode (the default) gives every
member the same say, which avoids a strong initial model drowning out the
later complementary ones. Members can be recorded without voting rights:
non-positive coefficients in weighted mode, or failing the better-than-chance
dev gate in equal-weight mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

from .data import Instance
from .learner import WeakModel, predict_proba, predict_proba_batch

EnsembleMode = Literal["alpha_weighted", "equal_weighted"]


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple[WeakModel, ...] = ()
    mode: EnsembleMode = "equal_weighted"
    voting: tuple[bool, ...] = ()  # aligned with members

    def __post_init__(self) -> None:
        if len(self.voting) != len(self.members):
            raise ValueError("voting flags must align with members")

    def voters(self) -> list[tuple[float, WeakModel]]:
        """(coefficient, model) pairs that participate in prediction."""
        out = []
        for member, votes in zip(self.members, self.voting):
            if not votes:
                continue
            coeff = member.alpha_t if self.mode == "alpha_weighted" else 1.0
            out.append((coeff, member))
        return out


def add_member(
    ensemble: EnsembleModel,
    model: WeakModel,
    dev_accuracy: float | None = None,
    n_classes: int | None = None,
) -> EnsembleModel:
    """Append a member; voting rights depend on the mode.

    In alpha_weighted mode a member with a non-positive coefficient is stored
    but never votes. In equal_weighted mode a member votes unless dev-set
    accuracy is provided and fails to beat chance (1/K); the gate is skipped
    when the ensemble has no voters yet, so the bootstrap member always
    leaves the ensemble usable.
    """
    if ensemble.mode == "alpha_weighted":
        votes = model.alpha_t > 0.0
    else:
        votes = True
        if dev_accuracy is not None and n_classes is not None and any(ensemble.voting):
            votes = dev_accuracy > 1.0 / n_classes
    return EnsembleModel(
        members=ensemble.members + (model,),
        mode=ensemble.mode,
        voting=ensemble.voting + (votes,),
    )


def ensemble_proba(ensemble: EnsembleModel, x: Instance) -> np.ndarray:
    """Normalized coefficient-weighted sum of member probability vectors."""
    if not ensemble.members:
        raise ValueError("ensemble has no members")
    voters = ensemble.voters()
    if not voters:
        raise ValueError("degenerate ensemble: no member is eligible to vote")
    acc = sum(coeff * predict_proba(member, x) for coeff, member in voters)
    return acc / acc.sum()


def ensemble_proba_batch(ensemble: EnsembleModel, x_matrix: sp.csr_matrix) -> np.ndarray:
    if not ensemble.members:
        raise ValueError("ensemble has no members")
    voters = ensemble.voters()
    if not voters:
        raise ValueError("degenerate ensemble: no member is eligible to vote")
    acc = sum(coeff * predict_proba_batch(member, x_matrix) for coeff, member in voters)
    return acc / acc.sum(axis=1, keepdims=True)


def ensemble_predict(ensemble: EnsembleModel, x: Instance) -> int:
    """Argmax class id (1-based); exact ties go to the lowest id."""
    return int(ensemble_proba(ensemble, x).argmax()) + 1


def ensemble_predict_batch(ensemble: EnsembleModel, x_matrix: sp.csr_matrix) -> list[int]:
    probs = ensemble_proba_batch(ensemble, x_matrix)
    return [int(c) + 1 for c in probs.argmax(axis=1)]
