"""Stage 3: exact 0/1-loss training by branch-and-bound.

The mixed-integer model keeps continuous (w, b) and relaxed marks z in one
convex QP per node: margin rows are linearized with per-sample big-M
constants that are exact over the bounded (w, b) box, covering cuts from
the harvest phase strengthen the relaxation, and branching fixes marks.
Nodes come off a best-first heap keyed on their relaxation value; every
incumbent candidate is re-evaluated through a clean separator QP over
(w, b) alone, so reported incumbents are margin-consistent to machine
precision rather than to big-M roundoff.

A full solve is Step 1 (hinge warm start and bounds), Step 2 (cut
harvest within its budgets) and Step 3 (this tree search), all under one
wall-clock limit.  Single-threaded by construction; repeated runs with the
same configuration reproduce the same report whenever the run ends by
optimality rather than by the clock.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np

from .core import (
    Assignment,
    ConsistencyError,
    Dataset,
    Hyperplane,
    SolveReport,
    SolverConfig,
    Status,
    hml_objective,
    relative_gap,
)
from .conflicts import ConflictCut, Subsystem, _min_slack, is_feasible
from .cuts import CutPool, run_full_phase, run_sampling_phase
from .hinge import TrainingIncomplete, derive_incumbent, train_hinge
from .qp import BoxQpSolver, QpProblem, QpStatus, solve_qp

_INT_TOL = 1e-6
_NODE_ITER_CAP = 20000
_PROBE_EVERY = 5


@dataclass(frozen=True)
class BigMPolicy:
    """How margin rows are linearized: derived per sample or one constant."""

    mode: str = "per-sample-derived"
    value: float | None = None

    def constants(self, dataset: Dataset, w_bound: float) -> tuple[np.ndarray, float]:
        big_m, b_bound = derive_big_m(dataset, w_bound)
        if self.mode == "fixed":
            if self.value is None or self.value < 1.0:
                raise ValueError("fixed big-M policy needs a value >= 1")
            big_m = np.full(dataset.n, float(self.value))
        return big_m, b_bound


@dataclass
class BnbNode:
    fixed_zero: frozenset[int]
    fixed_one: frozenset[int]
    relax_value: float
    depth: int
    warm_start: np.ndarray | None = None
    warm_duals: np.ndarray | None = None
    z: np.ndarray | None = None


@dataclass
class NodeRelaxation:
    """Relaxation outcome at one node: bound, fractional marks, separator.

    ``certified_bound`` is the Lagrangian dual value at the returned
    multipliers: a valid lower bound on the node optimum even when the
    iteration stopped early, which keeps the tree's pruning sound.
    """

    value: float
    z: np.ndarray
    hyperplane: Hyperplane
    x: np.ndarray
    y: np.ndarray
    status: QpStatus
    certified_bound: float = -math.inf


def derive_big_m(dataset: Dataset, w_bound: float) -> tuple[np.ndarray, float]:
    """Per-sample big-M constants exact over the (w, b) box.

    With every |w_j| <= w_bound and |b| <= b_bound, the margin shortfall
    1 - y_i (w.x_i + b) never exceeds 1 + w_bound * ||x_i||_1 + b_bound,
    so relaxing row i by that much makes it vacuous, which is exactly what
    marking sample i must achieve.
    """
    if w_bound < 0:
        raise ValueError("w_bound must be nonnegative")
    norms = np.abs(dataset.features).sum(axis=1)
    b_bound = 1.0 + w_bound * float(norms.max())
    big_m = 1.0 + w_bound * norms + b_bound
    return big_m, b_bound


def check_lazy_cuts(assignment: Assignment, pool) -> list[ConflictCut]:
    """Cuts an integral candidate violates (no member marked)."""
    z = assignment.z
    return [cut for cut in pool if z[list(cut.members)].sum() < 0.5]


class _Model:
    """The step-3 QP over (w, b, z) with a shared factorization.

    Rows and matrices are fixed; node fixings only move variable bounds,
    so every node solve reuses the same scaling and cached factor.
    """

    def __init__(self, dataset, C, big_m, w_bound, b_bound, cut_members):
        self.dataset = dataset
        self.C = float(C)
        self.big_m = big_m
        n, m = dataset.n, dataset.m
        self.n, self.m = n, m
        k = m + 1 + n
        P = np.zeros((k, k))
        P[:m, :m] = np.eye(m)
        q = np.concatenate([np.zeros(m + 1), np.full(n, C)])
        y = dataset.labels
        margin_rows = np.hstack(
            [y[:, None] * dataset.features, y[:, None], np.diag(big_m)]
        )
        cut_rows = np.zeros((len(cut_members), k))
        for ci, members in enumerate(cut_members):
            for g in members:
                cut_rows[ci, m + 1 + g] = 1.0
        A = np.vstack([margin_rows, cut_rows])
        p = A.shape[0]
        self.var_lb = np.concatenate(
            [np.full(m, -w_bound), [-b_bound], np.zeros(n)]
        )
        self.var_ub = np.concatenate(
            [np.full(m, w_bound), [b_bound], np.ones(n)]
        )
        self.solver = BoxQpSolver(
            P=P, q=q, A=A, lb=np.ones(p), ub=np.full(p, np.inf),
            var_lb=self.var_lb, var_ub=self.var_ub,
        )

    def _node_bounds(self, fixed_zero, fixed_one):
        lb, ub = self.var_lb.copy(), self.var_ub.copy()
        off = self.m + 1
        for i in fixed_zero:
            ub[off + i] = 0.0
        for i in fixed_one:
            lb[off + i] = 1.0
        return lb, ub

    def solve_node(self, fixed_zero, fixed_one, warm=None, warm_duals=None):
        lb, ub = self._node_bounds(fixed_zero, fixed_one)
        if warm_duals is not None and len(warm_duals) != self.solver.p + self.solver.k:
            warm_duals = None  # stale duals from a differently sized model
        sol = self.solver.solve(
            var_lb=lb, var_ub=ub, warm_start=warm, warm_start_duals=warm_duals,
            iter_cap=_NODE_ITER_CAP,
        )
        m = self.m
        certified = self.solver.dual_bound(sol.y, var_lb=lb, var_ub=ub)
        return NodeRelaxation(
            value=sol.objective,
            z=np.clip(sol.x[m + 1:], 0.0, 1.0),
            hyperplane=Hyperplane(sol.x[:m], float(sol.x[m])),
            x=sol.x,
            y=sol.y,
            status=sol.status,
            certified_bound=certified,
        )


def _enforced_separator(
    dataset: Dataset, zero_idx: np.ndarray, w_bound: float, b_bound: float
) -> Hyperplane | None:
    """Min-norm boxed separator putting the given samples at margin >= 1."""
    m = dataset.m
    k = m + 1
    P = np.zeros((k, k))
    P[:m, :m] = np.eye(m)
    if zero_idx.size:
        y = dataset.labels[zero_idx, None]
        A = np.hstack([y * dataset.features[zero_idx], y])
    else:
        A = np.zeros((0, k))
    prob = QpProblem(
        P=P, q=np.zeros(k), A=A,
        lb=np.ones(A.shape[0]), ub=np.full(A.shape[0], np.inf),
        var_lb=np.append(np.full(m, -w_bound), -b_bound),
        var_ub=np.append(np.full(m, w_bound), b_bound),
    )
    sol = solve_qp(prob)
    if sol.status is not QpStatus.SOLVED:
        return None
    return Hyperplane(sol.x[:m], float(sol.x[m]))


def solve_node_relaxation(
    dataset: Dataset,
    node: BnbNode,
    active_cuts,
    C: float,
    big_m: np.ndarray,
    w_bound: float,
    b_bound: float,
    *,
    warm_start=None,
) -> NodeRelaxation:
    """One-shot node relaxation (tree searches reuse a shared model)."""
    members = [c.members if isinstance(c, ConflictCut) else tuple(c)
               for c in active_cuts]
    model = _Model(dataset, C, np.asarray(big_m, dtype=float), w_bound,
                   b_bound, members)
    return model.solve_node(node.fixed_zero, node.fixed_one, warm=warm_start)


def solve(dataset: Dataset, cfg: SolverConfig) -> SolveReport:
    """Train to proven optimality within the configured budgets."""
    t_start = time.perf_counter()
    deadline = t_start + cfg.time_limit
    timings: dict[str, float] = {}

    # ---- step 1: hinge warm start, incumbent, bounds
    step1_timed_out = False
    try:
        hyperplane, xi = train_hinge(
            dataset, cfg.C, time_cap=max(0.0, deadline - time.perf_counter())
        )
    except TrainingIncomplete as exc:
        hyperplane, xi = exc.hyperplane, exc.xi
        step1_timed_out = True
    init = derive_incumbent(
        dataset, hyperplane, xi, cfg.C,
        feas_tol=cfg.feas_tol, tight_w_bound=cfg.tight_weight_box,
    )
    incumbent = (init.hyperplane, init.assignment)
    upper = init.objective_ub
    w_bound = init.w_bound
    timings["step1"] = time.perf_counter() - t_start

    def report(status, lower, nodes, pool, root_value):
        timings["total"] = time.perf_counter() - t_start
        timings.setdefault("step2", 0.0)
        timings.setdefault("step3", 0.0)
        lower = min(lower, upper)
        return SolveReport(
            incumbent=incumbent,
            upper_bound=upper,
            lower_bound=lower,
            gap_percent=relative_gap(upper, lower),
            status=status,
            nodes_explored=nodes,
            cuts_generated=len(pool) if pool is not None else 0,
            elapsed_seconds=dict(timings),
            root_relax_value=root_value,
            cuts=tuple(pool.member_sets()) if pool is not None else (),
        )

    if step1_timed_out or time.perf_counter() >= deadline:
        return report(Status.TIME_LIMIT, 0.0, 0, None, math.nan)

    # ---- step 2: cut harvest
    t2 = time.perf_counter()
    pool = CutPool()
    if cfg.use_cuts:
        budget = min(cfg.sampling_budget, max(0.0, deadline - time.perf_counter()))
        run_sampling_phase(
            dataset, w_bound, budget, cfg.seed, pool=pool,
            sample_size_cap=cfg.sample_size_cap, feas_tol=cfg.feas_tol,
        )
        budget = min(cfg.full_cut_budget, max(0.0, deadline - time.perf_counter()))
        run_full_phase(dataset, w_bound, pool, budget, feas_tol=cfg.feas_tol)
    timings["step2"] = time.perf_counter() - t2

    # ---- step 3: best-first branch-and-bound
    t3 = time.perf_counter()
    big_m, b_bound = BigMPolicy(cfg.big_m_policy, cfg.big_m_value).constants(
        dataset, w_bound
    )
    model = _Model(dataset, cfg.C, big_m, w_bound, b_bound, pool.member_sets())
    n = dataset.n
    nodes_explored = 0
    counter = itertools.count()
    heap: list = []

    def cutoff() -> float:
        return upper - cfg.opt_tol * max(abs(upper), 1e-10)

    def margin_subsystem_feasible(fixed_zero) -> bool:
        if not fixed_zero:
            return True
        if any(set(c.members) <= fixed_zero for c in pool):
            return False
        sub = Subsystem(dataset, tuple(sorted(fixed_zero)), w_bound)
        return is_feasible(sub, cfg.feas_tol)

    def evaluate(fixed_zero, fixed_one, depth, warm, warm_duals, floor):
        nonlocal nodes_explored
        if not margin_subsystem_feasible(fixed_zero):
            return None
        if not cfg.use_warm_start:
            warm, warm_duals = None, None
        rel = model.solve_node(fixed_zero, fixed_one, warm=warm,
                               warm_duals=warm_duals)
        nodes_explored += 1
        if rel.status is QpStatus.INFEASIBLE:
            return None
        value = rel.value
        if rel.status is not QpStatus.SOLVED:
            # an unconverged primal value is not a valid bound; fall back
            # to the certified dual value or, failing that, the parent's
            value = max(floor, rel.certified_bound)
        return BnbNode(
            fixed_zero=fixed_zero, fixed_one=fixed_one,
            relax_value=value, depth=depth,
            warm_start=rel.x,
            warm_duals=rel.y,
            z=rel.z,
        )

    def push(node):
        heappush(heap, (node.relax_value, next(counter), node))

    def update_incumbent(z_int):
        """Evaluate a candidate marking exactly; adopt it if it wins.

        The separator for the unmarked samples comes from a small clean QP
        over (w, b) alone, whose margins land on their bounds to machine
        precision, so consistency never falls to big-M roundoff.
        """
        nonlocal upper, incumbent
        zero_idx = np.flatnonzero(z_int < 0.5)
        plane = _enforced_separator(dataset, zero_idx, w_bound, b_bound)
        if plane is None:
            return None
        assignment = Assignment(z_int.astype(np.int8))
        try:
            objective = hml_objective(
                dataset, plane, assignment, cfg.C, cfg.feas_tol
            )
        except ConsistencyError:
            return None
        if objective < upper:
            upper = objective
            incumbent = (plane, assignment)
        return objective

    def probe_rounding(node):
        """Round the node's marks into a candidate and try it as incumbent.

        Marks are rounded at 1/2, violated pool cuts are repaired by
        marking their most fractional member, and unenforceable unmarked
        sets are repaired greedily: mark the sample with the largest
        shortfall at the minimum-slack witness until the rest fit.
        """
        z_cand = np.rint(np.clip(node.z, 0.0, 1.0))
        for i in node.fixed_zero:
            z_cand[i] = 0.0
        for i in node.fixed_one:
            z_cand[i] = 1.0
        for cut in pool:
            members = list(cut.members)
            if z_cand[members].sum() < 0.5:
                free_members = [i for i in members if i not in node.fixed_zero]
                if not free_members:
                    return
                z_cand[max(free_members, key=lambda i: node.z[i])] = 1.0
        for _ in range(n):
            zero_idx = np.flatnonzero(z_cand < 0.5)
            if zero_idx.size == 0:
                break
            slack, witness = _min_slack(dataset, zero_idx, w_bound)
            if slack <= cfg.feas_tol:
                break
            u = dataset.labels[zero_idx] * (
                dataset.features[zero_idx] @ witness[:-1] + witness[-1]
            )
            shortfall = np.maximum(0.0, 1.0 - u)
            repairable = [
                j for j, i in enumerate(zero_idx) if i not in node.fixed_zero
            ]
            if not repairable:
                return
            z_cand[zero_idx[max(repairable, key=lambda j: shortfall[j])]] = 1.0
        else:
            return
        update_incumbent(z_cand)

    root_warm = None
    if cfg.use_warm_start:
        root_warm = np.concatenate(
            [init.hyperplane.w, [init.hyperplane.b],
             init.assignment.z.astype(float)]
        )
    model_members = pool.member_sets()
    root = evaluate(frozenset(), frozenset(), 0, root_warm, None, 0.0)
    root_value = root.relax_value if root is not None else math.nan
    status = Status.OPTIMAL
    lower = upper
    if root is not None:
        push(root)
        # the root is priced against the whole pool; the subtree keeps only
        # the cuts the root actually leans on, and the lazy check reinstates
        # any dropped cut an integral candidate later violates
        if model_members and root.warm_duals is not None:
            y_cuts = root.warm_duals[n: n + len(model_members)]
            kept = [mem for mem, yv in zip(model_members, y_cuts)
                    if abs(yv) > 1e-10]
            if len(kept) < len(model_members):
                model_members = kept
                model = _Model(dataset, cfg.C, big_m, w_bound, b_bound, kept)

    last_probe = -_PROBE_EVERY
    while heap:
        if time.perf_counter() >= deadline:
            status = Status.TIME_LIMIT
            lower = heap[0][0]
            break
        value, _, node = heappop(heap)
        if value >= cutoff():
            lower = value
            break
        if nodes_explored - last_probe >= _PROBE_EVERY:
            last_probe = nodes_explored
            probe_rounding(node)
            if value >= cutoff():
                lower = value
                break
        z = node.z
        free = np.ones(n, dtype=bool)
        for i in node.fixed_zero:
            free[i] = False
        for i in node.fixed_one:
            free[i] = False
        fractional = np.where(free & (np.minimum(z, 1.0 - z) > _INT_TOL))[0]
        if fractional.size == 0:
            z_int = np.rint(z)
            z_int[~free] = 0.0
            for i in node.fixed_one:
                z_int[i] = 1.0
            violated = check_lazy_cuts(Assignment(z_int.astype(np.int8)), pool)
            if violated:
                # activate the violated cuts and re-solve the node
                extra = [c.members for c in violated
                         if c.members not in model_members]
                model_members = model_members + extra
                model = _Model(dataset, cfg.C, big_m, w_bound, b_bound,
                               model_members)
                rel = model.solve_node(node.fixed_zero, node.fixed_one)
                nodes_explored += 1
                if rel.status is QpStatus.SOLVED:
                    node.relax_value = max(node.relax_value, rel.value)
                node.z = rel.z
                node.warm_start = rel.x
                node.warm_duals = rel.y
                push(node)
                continue
            cand = update_incumbent(z_int)
            close_tol = max(1e-9, cfg.opt_tol * max(1.0, abs(node.relax_value)))
            if cand is not None and cand <= node.relax_value + close_tol:
                continue
            # the rounded marks do not realize the node bound (a mark sat a
            # hair above zero); force the worst relaxation abuser to a side
            abuse = np.where(free & (z_int < 0.5), z * model.big_m, -1.0)
            j = int(np.argmax(abuse))
            if abuse[j] < 0:
                continue
        else:
            j = int(min(fractional, key=lambda i: (abs(z[i] - 0.5), i)))
        floor = node.relax_value
        for fz, fo in (
            (node.fixed_zero | {j}, node.fixed_one),
            (node.fixed_zero, node.fixed_one | {j}),
        ):
            child = evaluate(fz, fo, node.depth + 1, node.warm_start,
                             node.warm_duals, floor)
            if child is not None and child.relax_value < cutoff():
                push(child)
    else:
        lower = upper  # tree exhausted: the incumbent is proven optimal

    timings["step3"] = time.perf_counter() - t3
    return report(status, lower, nodes_explored, pool, root_value)
