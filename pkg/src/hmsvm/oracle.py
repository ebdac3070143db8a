"""Exhaustive reference optimum for small instances.

Enumerates every 0/1 marking, feasibility-checks the unmarked samples'
margin system over the weight box, and minimizes the quadratic term over
the feasible ones.  Exponential in the sample count by construction; the
command-line wrapper refuses more than 16 samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FEAS_TOL, Dataset, Hyperplane
from .hinge import derive_incumbent, train_hinge
from .qp import QpProblem, QpStatus, min_slack_feasibility, solve_qp

#: hard cap so a typo cannot start a week-long enumeration
MAX_ORACLE_SAMPLES = 20


@dataclass(frozen=True)
class OracleResult:
    value: float
    z: np.ndarray
    hyperplane: Hyperplane


def brute_force_optimum(
    dataset: Dataset,
    C: float,
    *,
    w_bound: float | None = None,
    feas_tol: float = FEAS_TOL,
) -> OracleResult:
    """Global optimum by enumeration of all 2^n markings.

    ``w_bound`` defaults to the hinge-derived weight box, which provably
    contains every optimal weight vector, so the boxed search is exact.
    Markings whose penalty alone cannot beat the best value found are
    skipped; ties keep the first marking in enumeration order.
    """
    n, m = dataset.n, dataset.m
    if n > MAX_ORACLE_SAMPLES:
        raise ValueError(
            f"{n} samples is beyond the enumeration cap ({MAX_ORACLE_SAMPLES})"
        )
    if w_bound is None:
        hyperplane, xi = train_hinge(dataset, C)
        w_bound = derive_incumbent(dataset, hyperplane, xi, C,
                                   feas_tol=feas_tol).w_bound

    var_lb = np.append(np.full(m, -w_bound), -np.inf)
    var_ub = np.append(np.full(m, w_bound), np.inf)
    best_value = C * n
    best_z = np.ones(n, dtype=np.int8)
    best_plane = Hyperplane(np.zeros(m), 0.0)

    y = dataset.labels
    X = dataset.features
    for mask in range(2 ** n):
        z = np.array([(mask >> i) & 1 for i in range(n)], dtype=np.int8)
        penalty = C * int(z.sum())
        if penalty >= best_value - 1e-12:
            continue
        enforced = np.flatnonzero(z == 0)
        rows = [
            (np.append(y[i] * X[i], y[i]), 1.0) for i in enforced
        ]
        slack, _ = min_slack_feasibility(rows, var_lb, var_ub)
        if slack > feas_tol:
            continue
        quad = _min_norm_separator(X, y, enforced, w_bound)
        if quad is None:
            continue
        value, plane = quad
        if value + penalty < best_value - 1e-12:
            best_value = value + penalty
            best_z = z
            best_plane = plane
    return OracleResult(best_value, best_z, best_plane)


def _min_norm_separator(X, y, enforced, w_bound):
    """min 0.5 ||w||^2 with the given samples at margin >= 1, w boxed."""
    m = X.shape[1]
    if enforced.size == 0:
        return 0.0, Hyperplane(np.zeros(m), 0.0)
    k = m + 1
    P = np.zeros((k, k))
    P[:m, :m] = np.eye(m)
    A = np.hstack([y[enforced, None] * X[enforced], y[enforced, None]])
    prob = QpProblem(
        P=P, q=np.zeros(k), A=A,
        lb=np.ones(enforced.size), ub=np.full(enforced.size, np.inf),
        var_lb=np.append(np.full(m, -w_bound), -np.inf),
        var_ub=np.append(np.full(m, w_bound), np.inf),
    )
    sol = solve_qp(prob)
    if sol.status is not QpStatus.SOLVED:
        return None
    return sol.objective, Hyperplane(sol.x[:m], float(sol.x[m]))
