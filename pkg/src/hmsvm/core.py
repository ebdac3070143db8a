"""Domain types, loss functions and solution-quality accounting.

Everything here is immutable after construction and free of hidden state,
so all types and functions are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

#: Absolute tolerance on the margin constraint u_i >= 1.
FEAS_TOL = 1e-6

#: Default relative optimality tolerance.
OPT_TOL = 1e-6

#: Bounds at or beyond this magnitude are treated as infinite.
INF = 1e20


class SvmError(Exception):
    """Base class for errors raised by this package."""


class DataError(SvmError):
    """An input file or dataset is malformed."""


class EngineError(SvmError):
    """A numerical subproblem could not be solved."""


class ConsistencyError(SvmError):
    """A (hyperplane, assignment) pair violates the margin bookkeeping."""


class Status(str, Enum):
    OPTIMAL = "Optimal"
    TIME_LIMIT = "TimeLimit"
    INFEASIBLE_INPUT = "Infeasible-input"
    ERROR = "Error"


def _read_only(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """n samples of m real features with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=float).ravel()
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        n, m = feats.shape
        if n < 1 or m < 1:
            raise ValueError("need at least one sample and one feature")
        if labs.shape[0] != n:
            raise ValueError(f"{labs.shape[0]} labels for {n} feature rows")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if not np.all(np.isin(labs, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", _read_only(feats))
        object.__setattr__(self, "labels", _read_only(labs))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Hyperplane:
    """Separator {x : w.x + b = 0}."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if not np.all(np.isfinite(w)) or not math.isfinite(self.b):
            raise ValueError("hyperplane coefficients must be finite")
        object.__setattr__(self, "w", _read_only(w))
        object.__setattr__(self, "b", float(self.b))


@dataclass(frozen=True)
class Assignment:
    """Binary marks: z_i = 1 means sample i is misclassified or within margin."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z)
        if not np.all(np.isin(z, (0, 1))):
            raise ValueError("assignment entries must be 0 or 1")
        object.__setattr__(self, "z", _read_only(z.astype(np.int8)))

    @property
    def n_marked(self) -> int:
        return int(self.z.sum())


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the three-stage solve.

    ``time_limit`` caps the whole run; ``sampling_budget`` and
    ``full_cut_budget`` are the wall-clock budgets of the two cut-harvest
    phases and must fit inside the total.  ``big_m_policy`` is either
    ``"per-sample-derived"`` (bounds derived from the weight box) or
    ``"fixed"`` with ``big_m_value`` supplying the constant.
    """

    C: float
    time_limit: float = 600.0
    sampling_budget: float = 30.0
    full_cut_budget: float = 30.0
    feas_tol: float = FEAS_TOL
    opt_tol: float = OPT_TOL
    seed: int = 0
    big_m_policy: str = "per-sample-derived"
    big_m_value: float | None = None
    sample_size_cap: int = 50
    use_cuts: bool = True
    tight_weight_box: bool = False
    use_warm_start: bool = True

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.sampling_budget < 0 or self.full_cut_budget < 0:
            raise ValueError("phase budgets must be nonnegative")
        if self.sampling_budget + self.full_cut_budget > self.time_limit:
            raise ValueError("phase budgets exceed the total time limit")
        if self.sample_size_cap < 1:
            raise ValueError("sample_size_cap must be at least 1")
        if self.big_m_policy not in ("per-sample-derived", "fixed"):
            raise ValueError(f"unknown big-M policy {self.big_m_policy!r}")
        if self.big_m_policy == "fixed" and (
            self.big_m_value is None or self.big_m_value < 1.0
        ):
            raise ValueError("fixed big-M policy needs a value >= 1")


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one solve: incumbent, bounds, status and counters."""

    incumbent: tuple[Hyperplane, Assignment]
    upper_bound: float
    lower_bound: float
    gap_percent: float
    status: Status
    nodes_explored: int
    cuts_generated: int
    elapsed_seconds: dict[str, float]
    # diagnostics beyond the wire format
    root_relax_value: float = math.nan
    cuts: tuple[tuple[int, ...], ...] = field(default=())


def hinge_loss(u: float) -> float:
    """Convex surrogate max(0, 1 - u)."""
    return max(0.0, 1.0 - u)


def hard_margin_loss(u: float) -> int:
    """Unit penalty for any margin strictly below 1."""
    return 1 if u < 1.0 else 0


def margins(dataset: Dataset, hyperplane: Hyperplane) -> np.ndarray:
    """Per-sample margins u_i = y_i (w.x_i + b)."""
    if hyperplane.w.shape[0] != dataset.m:
        raise ValueError(
            f"hyperplane has {hyperplane.w.shape[0]} weights, dataset has "
            f"{dataset.m} features"
        )
    return dataset.labels * (dataset.features @ hyperplane.w + hyperplane.b)


def hml_objective(
    dataset: Dataset,
    hyperplane: Hyperplane,
    assignment: Assignment,
    C: float,
    feas_tol: float = FEAS_TOL,
) -> float:
    """0.5 ||w||^2 + C * (number of marked samples).

    Refuses inconsistent inputs: every unmarked sample must actually sit at
    margin >= 1 - feas_tol, so infeasible incumbents can never be reported.
    """
    u = margins(dataset, hyperplane)
    bad = (assignment.z == 0) & (u < 1.0 - feas_tol)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConsistencyError(
            f"sample {i} is unmarked but has margin {u[i]:.9g} < 1"
        )
    w = hyperplane.w
    return 0.5 * float(w @ w) + C * float(assignment.z.sum())


def relative_gap(upper: float, lower: float) -> float:
    """Optimality gap in percent: 100 (upper - lower) / max(|upper|, 1e-10).

    A lower bound marginally above the upper bound (within 1e-9 relative)
    is numerical noise and maps to a gap of zero; anything beyond that is
    rejected.
    """
    tiny = 1e-9 * max(1.0, abs(upper))
    if lower > upper + tiny:
        raise ValueError(f"lower bound {lower} exceeds upper bound {upper}")
    if upper == lower:
        return 0.0
    return max(0.0, 100.0 * (upper - lower) / max(abs(upper), 1e-10))
