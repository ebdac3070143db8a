"""Stage 2: harvest covering cuts from infeasible margin subsystems.

The harvest runs a small branch-and-cut over the covering master problem
(minimize the number of marked samples subject to the cuts found so far).
At every node the master LP relaxation is solved, the samples the LP
leaves unmarked are tested for joint feasibility under the weight box,
and each failure is shrunk to a minimal conflict that joins the pool as a
new covering row.  Randomly sampled subsets keep the subsystems small and
diverse before a final pass over the full sample set.

The sampled subsets are pre-seeded per index, merged in index order, and
processed one at a time, so a run that ends by saturation rather than by
the wall clock is reproducible bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import FEAS_TOL, Dataset
from .conflicts import ConflictCut, Subsystem, extract_conflict, is_feasible
from .qp import BoxQpSolver

#: LP values at or below this count as "unmarked" when forming subsystems.
Z_ZERO_TOL = 1e-6

#: Tree-size cap for each sampled subset's branch-and-cut.
SUBSET_NODE_CAP = 200

#: Sampling stops early after this many consecutive cut-free subsets.
SUBSET_STALL_LIMIT = 25

#: Safety cap on separation rounds at a single node.
_ROUNDS_CAP = 50

_LP_ITER_CAP = 5000


@dataclass
class MasterNode:
    """One node of the covering master: variable fixings plus LP state."""

    fixed_zero: frozenset[int] = frozenset()
    fixed_one: frozenset[int] = frozenset()
    lp_value: float = float("nan")
    fractional_z: np.ndarray | None = None

    def __post_init__(self):
        if self.fixed_zero & self.fixed_one:
            raise ValueError("a sample cannot be fixed both ways")


@dataclass
class _CutRecord:
    cut: ConflictCut
    origin: str
    created: float = field(default_factory=time.time)


class CutPool:
    """Deduplicated covering cuts, optionally filtered for dominance.

    With dominance filtering on (the default), no stored cut is a strict
    superset of another: supersets of an existing cut are rejected and
    existing supersets of a new cut are evicted.  ``version`` increments on
    every successful insertion, which lets callers detect growth even when
    evictions keep the count flat.
    """

    def __init__(self, dominance: bool = True):
        self.dominance = dominance
        self.version = 0
        self._records: dict[tuple[int, ...], _CutRecord] = {}

    def add(self, cut: ConflictCut, origin: str = "full") -> bool:
        key = cut.members
        if key in self._records:
            return False
        if self.dominance:
            new = set(key)
            for other in self._records:
                if set(other) <= new:
                    return False
            evict = [k for k in self._records if new < set(k)]
            for k in evict:
                del self._records[k]
        self._records[key] = _CutRecord(cut, origin)
        self.version += 1
        return True

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(record.cut for record in self._records.values())

    def __contains__(self, cut: ConflictCut) -> bool:
        return cut.members in self._records

    def origins(self) -> dict[tuple[int, ...], str]:
        return {k: r.origin for k, r in self._records.items()}

    def member_sets(self) -> list[tuple[int, ...]]:
        return list(self._records.keys())


def save_cut_pool(pool: CutPool, path, n: int, w_bound: float) -> None:
    """One cut per line as sorted space-separated 0-based indices."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={n} w_ub={w_bound:.17g}\n")
        for members in pool.member_sets():
            fh.write(" ".join(str(i) for i in members) + "\n")


def load_cut_pool(path) -> tuple[CutPool, int, float]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        n = int(header[0].split("=", 1)[1])
        w_bound = float(header[1].split("=", 1)[1])
        pool = CutPool()
        for line in fh:
            if line.strip():
                pool.add(ConflictCut(tuple(int(t) for t in line.split())))
    return pool, n, w_bound


def _solve_master_lp(sub: np.ndarray, active_cuts, fixed_zero, fixed_one,
                     warm=None):
    """LP relaxation of the restricted covering master; returns (z, value)."""
    r = sub.shape[0]
    local = {int(g): j for j, g in enumerate(sub)}
    rows = np.zeros((len(active_cuts), r))
    for ci, members in enumerate(active_cuts):
        for g in members:
            rows[ci, local[g]] = 1.0
    var_lb = np.zeros(r)
    var_ub = np.ones(r)
    for g in fixed_zero:
        if g in local:
            var_ub[local[g]] = 0.0
    for g in fixed_one:
        if g in local:
            var_lb[local[g]] = 1.0
    solver = BoxQpSolver(
        P=np.zeros((r, r)),
        q=np.ones(r),
        A=rows,
        lb=np.ones(len(active_cuts)),
        ub=np.full(len(active_cuts), np.inf),
        var_lb=var_lb,
        var_ub=var_ub,
    )
    sol = solver.solve(warm_start=warm, iter_cap=_LP_ITER_CAP)
    # MaxIter iterates are still usable: they only steer the harvest
    return np.clip(sol.x, 0.0, 1.0), sol.objective


def separate_at_node(
    node: MasterNode,
    pool: CutPool,
    sub_indices,
    dataset: Dataset,
    w_bound: float,
    *,
    feas_tol: float = FEAS_TOL,
    deadline: float | None = None,
    origin: str = "full",
) -> list[ConflictCut]:
    """Run the per-node separation loop; returns the cuts it added.

    Each round solves the node LP, collects the samples left at zero, and
    feasibility-checks them as one subsystem.  A feasible subsystem ends
    the loop; an infeasible one is shrunk to a minimal conflict that is
    added to the pool and, being inside the subset, to the node LP itself.
    The node's ``lp_value`` and ``fractional_z`` are refreshed in place.
    """
    sub = np.asarray(sorted(int(i) for i in sub_indices), dtype=int)
    sub_set = set(sub.tolist())
    added: list[ConflictCut] = []
    warm = None
    for _ in range(_ROUNDS_CAP):
        active = [m for m in pool.member_sets() if set(m) <= sub_set]
        z_local, value = _solve_master_lp(
            sub, active, node.fixed_zero, node.fixed_one, warm=warm
        )
        warm = z_local
        node.lp_value = value
        full = np.ones(dataset.n)
        full[sub] = z_local
        node.fractional_z = full
        zero_idx = tuple(int(g) for g, zv in zip(sub, z_local)
                         if zv <= Z_ZERO_TOL)
        subsystem = Subsystem(dataset, zero_idx, w_bound)
        if is_feasible(subsystem, feas_tol):
            break
        cut = extract_conflict(subsystem, feas_tol)
        if not pool.add(cut, origin):
            break
        added.append(cut)
        if deadline is not None and time.perf_counter() >= deadline:
            break
    return added


def _branch_and_cut(
    dataset: Dataset,
    indices,
    w_bound: float,
    pool: CutPool,
    deadline: float,
    node_cap: int | None,
    feas_tol: float,
    origin: str,
) -> int:
    """Depth-first covering branch-and-cut; returns the number of new cuts."""
    sub = sorted(int(i) for i in indices)
    before = pool.version
    stack = [MasterNode()]
    best_int = float("inf")
    nodes = 0
    while stack:
        if time.perf_counter() >= deadline:
            break
        if node_cap is not None and nodes >= node_cap:
            break
        node = stack.pop()
        # a cut fully inside the zero-fixings makes the node infeasible
        fz = node.fixed_zero
        if any(set(m) <= fz for m in pool.member_sets()
               if set(m) <= set(sub)):
            continue
        nodes += 1
        separate_at_node(node, pool, sub, dataset, w_bound,
                         feas_tol=feas_tol, deadline=deadline, origin=origin)
        if node.lp_value >= best_int - 1.0 + 1e-6:
            continue
        z = node.fractional_z[sub]
        free = [j for j, g in enumerate(sub)
                if g not in node.fixed_zero and g not in node.fixed_one]
        frac = [j for j in free if min(z[j], 1.0 - z[j]) > Z_ZERO_TOL]
        if not frac:
            best_int = min(best_int, round(node.lp_value))
            continue
        j = min(frac, key=lambda jj: (abs(z[jj] - 0.5), sub[jj]))
        g = sub[j]
        stack.append(MasterNode(node.fixed_zero, node.fixed_one | {g}))
        stack.append(MasterNode(node.fixed_zero | {g}, node.fixed_one))
    return pool.version - before


def run_sampling_phase(
    dataset: Dataset,
    w_bound: float,
    sampling_budget: float,
    seed: int,
    *,
    pool: CutPool | None = None,
    sample_size_cap: int = 50,
    feas_tol: float = FEAS_TOL,
) -> CutPool:
    """Harvest cuts from random sample subsets until the budget or a stall.

    Subsets of size min(n // 2, cap) are drawn independently per subset
    index from a seed split, so the subset sequence never depends on how
    many subsets the clock allows.  The phase ends at the wall-clock
    budget or once SUBSET_STALL_LIMIT consecutive subsets add nothing.
    """
    pool = pool if pool is not None else CutPool()
    if sampling_budget <= 0:
        return pool
    n = dataset.n
    r = min(n // 2, sample_size_cap)
    if r < 1:
        return pool
    deadline = time.perf_counter() + sampling_budget
    stall = 0
    subset_id = 0
    while time.perf_counter() < deadline and stall < SUBSET_STALL_LIMIT:
        rng = np.random.default_rng([seed, subset_id])
        subset = np.sort(rng.choice(n, size=r, replace=False))
        before = pool.version
        _branch_and_cut(
            dataset, subset, w_bound, pool, deadline, SUBSET_NODE_CAP,
            feas_tol, origin=f"sampled({subset_id})",
        )
        stall = 0 if pool.version > before else stall + 1
        subset_id += 1
    return pool


def run_full_phase(
    dataset: Dataset,
    w_bound: float,
    pool: CutPool,
    full_budget: float,
    *,
    feas_tol: float = FEAS_TOL,
) -> CutPool:
    """Continue the harvest over all samples, hot-started with the pool."""
    if full_budget <= 0:
        return pool
    deadline = time.perf_counter() + full_budget
    _branch_and_cut(
        dataset, range(dataset.n), w_bound, pool, deadline, None,
        feas_tol, origin="full",
    )
    return pool
