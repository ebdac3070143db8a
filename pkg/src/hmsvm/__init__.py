"""Exact training of support vector machines with the hard-margin (0/1)
loss: a hinge warm start, conflict-cut harvesting over sampled subsystems,
and branch-and-bound on the cut-strengthened big-M model.
"""

from .core import (
    Assignment,
    ConsistencyError,
    DataError,
    Dataset,
    EngineError,
    Hyperplane,
    SolveReport,
    SolverConfig,
    Status,
    SvmError,
    hard_margin_loss,
    hinge_loss,
    hml_objective,
    margins,
    relative_gap,
)
from .conflicts import ConflictCut, Subsystem, extract_conflict, is_feasible
from .cuts import CutPool, run_full_phase, run_sampling_phase
from .bnb import derive_big_m, solve
from .data import (
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_libsvm,
    save_dataset,
)
from .hinge import InitBounds, derive_incumbent, train_hinge
from .oracle import brute_force_optimum
from .qp import QpProblem, QpSolution, min_slack_feasibility, solve_qp

__all__ = [
    "Assignment",
    "ConflictCut",
    "ConsistencyError",
    "CutPool",
    "DataError",
    "Dataset",
    "EngineError",
    "Hyperplane",
    "InitBounds",
    "QpProblem",
    "QpSolution",
    "SolveReport",
    "SolverConfig",
    "Status",
    "Subsystem",
    "SvmError",
    "SyntheticSpec",
    "brute_force_optimum",
    "derive_big_m",
    "derive_incumbent",
    "extract_conflict",
    "generate_synthetic",
    "hard_margin_loss",
    "hinge_loss",
    "hml_objective",
    "is_feasible",
    "load_csv",
    "load_libsvm",
    "margins",
    "min_slack_feasibility",
    "relative_gap",
    "run_full_phase",
    "run_sampling_phase",
    "save_dataset",
    "solve",
    "solve_qp",
    "train_hinge",
]
