"""Margin-subsystem feasibility under a weight box, and minimal conflict
extraction by deletion filtering.

A subsystem is the question: can samples I all sit at margin >= 1 with
every weight coordinate inside [-w_bound, w_bound] (intercept free)?  When
the answer is no, the deletion filter shrinks I to an inclusion-minimal
infeasible core; every such core S yields the valid covering inequality
sum_{i in S} z_i >= 1.

Everything here is pure: extractions may run concurrently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import FEAS_TOL, Dataset
from .qp import min_slack_feasibility

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConflictCut:
    """Sorted sample indices that cannot all be enforced simultaneously."""

    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(i) for i in self.members)
        if not members:
            raise ValueError("a cut needs at least one member")
        if sorted(set(members)) != list(members):
            raise ValueError("members must be sorted and unique")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class Subsystem:
    """Margin constraints of the given samples under the weight box."""

    dataset: Dataset
    indices: tuple[int, ...]
    w_bound: float

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if len(set(indices)) != len(indices):
            raise ValueError("indices must be unique")
        if indices and not (0 <= min(indices) and max(indices) < self.dataset.n):
            raise ValueError("index out of range")
        if self.w_bound < 0:
            raise ValueError("w_bound must be nonnegative")
        object.__setattr__(self, "indices", indices)


def _margin_rows(dataset: Dataset, indices) -> list[tuple[np.ndarray, float]]:
    # variables (w, b); row y_i * [x_i, 1] with right-hand side 1
    rows = []
    for i in indices:
        a = np.append(dataset.labels[i] * dataset.features[i],
                      dataset.labels[i])
        rows.append((a, 1.0))
    return rows


def _min_slack(dataset: Dataset, indices, w_bound: float):
    m = dataset.m
    var_lb = np.append(np.full(m, -w_bound), -np.inf)
    var_ub = np.append(np.full(m, w_bound), np.inf)
    return min_slack_feasibility(_margin_rows(dataset, indices),
                                 var_lb, var_ub)


def is_feasible(sub: Subsystem, feas_tol: float = FEAS_TOL) -> bool:
    """True iff the subsystem's minimum total slack is within tolerance."""
    if not sub.indices:
        return True
    slack, _ = _min_slack(sub.dataset, sub.indices, sub.w_bound)
    if abs(slack - feas_tol) <= 2.0 * feas_tol:
        logger.debug(
            "borderline subsystem: slack %.3e vs tolerance %.1e (%d rows)",
            slack, feas_tol, len(sub.indices),
        )
    return slack <= feas_tol


def extract_conflict(sub: Subsystem, feas_tol: float = FEAS_TOL) -> ConflictCut:
    """Shrink an infeasible subsystem to an inclusion-minimal core.

    Deletion filter: visit indices in order of decreasing slack contribution
    at the full system's minimum-slack witness (ties by index) and drop each
    index whose removal keeps the system infeasible.  One pass guarantees
    minimality because a kept index was necessary against a superset of the
    final core.
    """
    if not sub.indices:
        raise ValueError("cannot extract a conflict from an empty subsystem")
    slack, witness = _min_slack(sub.dataset, sub.indices, sub.w_bound)
    if slack <= feas_tol:
        raise ValueError("subsystem is feasible; no conflict to extract")

    w, b = witness[:-1], witness[-1]
    idx = np.fromiter(sub.indices, dtype=int)
    u = sub.dataset.labels[idx] * (sub.dataset.features[idx] @ w + b)
    contribution = np.maximum(0.0, 1.0 - u)
    order = sorted(range(len(idx)), key=lambda j: (-contribution[j], idx[j]))

    kept = list(idx[order])
    for i in list(kept):
        if len(kept) <= 1:
            break
        trial = [j for j in kept if j != i]
        trial_slack, _ = _min_slack(sub.dataset, trial, sub.w_bound)
        if trial_slack > feas_tol:
            kept = trial
    return ConflictCut(tuple(sorted(kept)))
