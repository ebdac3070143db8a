"""Stage 1: hinge-loss training, the initial incumbent and the weight box.

The hinge trainer solves the classic soft-margin primal QP.  Rounding its
slacks up gives a feasible 0/1-loss solution whose objective bounds the
optimum from above, and that bound in turn caps how large any optimal
weight coordinate can be, which is what the conflict machinery needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FEAS_TOL,
    Assignment,
    Dataset,
    EngineError,
    Hyperplane,
    hml_objective,
    margins,
)
from .qp import QpProblem, QpStatus, solve_qp


class TrainingIncomplete(EngineError):
    """Hinge QP ran out of iterations; carries the best iterate found."""

    def __init__(self, message: str, hyperplane: Hyperplane, xi: np.ndarray):
        super().__init__(message)
        self.hyperplane = hyperplane
        self.xi = xi


@dataclass(frozen=True)
class InitBounds:
    """Initial incumbent plus the bounds derived from its objective."""

    hyperplane: Hyperplane
    assignment: Assignment
    objective_ub: float
    w_bound: float


def hinge_qp(dataset: Dataset, C: float) -> QpProblem:
    """Primal soft-margin QP over variables (w, b, xi)."""
    n, m = dataset.n, dataset.m
    k = m + 1 + n
    P = np.zeros((k, k))
    P[:m, :m] = np.eye(m)
    q = np.concatenate([np.zeros(m + 1), np.full(n, C)])
    y = dataset.labels
    A = np.hstack([y[:, None] * dataset.features, y[:, None], np.eye(n)])
    var_lb = np.concatenate([np.full(m + 1, -np.inf), np.zeros(n)])
    var_ub = np.full(k, np.inf)
    return QpProblem(P=P, q=q, A=A, lb=np.ones(n), ub=np.full(n, np.inf),
                     var_lb=var_lb, var_ub=var_ub)


def train_hinge(
    dataset: Dataset,
    C: float,
    *,
    eps_abs: float = 1e-8,
    eps_rel: float = 1e-8,
    iter_cap: int = 20000,
    time_cap: float | None = None,
) -> tuple[Hyperplane, np.ndarray]:
    """Train the hinge-loss separator; returns (hyperplane, slacks).

    Slacks are recomputed from the margins of the returned hyperplane, so
    xi_i = max(0, 1 - u_i) holds exactly no matter how the QP terminated.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    sol = solve_qp(hinge_qp(dataset, C), iter_cap=iter_cap,
                   time_cap=time_cap, eps_abs=eps_abs, eps_rel=eps_rel)
    m = dataset.m
    hyperplane = Hyperplane(w=sol.x[:m], b=float(sol.x[m]))
    xi = np.maximum(0.0, 1.0 - margins(dataset, hyperplane))
    if sol.status is not QpStatus.SOLVED:
        raise TrainingIncomplete(
            f"hinge training stopped at {sol.status.value} "
            f"(primal {sol.primal_residual:.2e}, dual {sol.dual_residual:.2e})",
            hyperplane,
            xi,
        )
    return hyperplane, xi


def derive_incumbent(
    dataset: Dataset,
    hyperplane: Hyperplane,
    xi: np.ndarray,
    C: float,
    *,
    feas_tol: float = FEAS_TOL,
    tight_w_bound: bool = False,
) -> InitBounds:
    """Round slacks into marks and derive the objective and weight bounds.

    A sample is marked iff its slack exceeds the feasibility tolerance
    (slacks above 1 still yield a single mark, since marks are binary).
    The weight box half-width defaults to 2*sqrt(objective_ub); the sharper
    sqrt(2*objective_ub), valid because the quadratic term alone is at most
    the objective, is available behind ``tight_w_bound``.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.shape[0] != dataset.n:
        raise ValueError("need one slack per sample")
    z = (xi > feas_tol).astype(np.int8)
    assignment = Assignment(z)
    objective_ub = hml_objective(dataset, hyperplane, assignment, C,
                                 feas_tol=feas_tol)
    if tight_w_bound:
        w_bound = math.sqrt(2.0 * objective_ub)
    else:
        w_bound = 2.0 * math.sqrt(objective_ub)
    return InitBounds(hyperplane, assignment, objective_ub, w_bound)
