import itertools

import numpy as np
import pytest

from hmsvm.core import EngineError
from hmsvm.qp import (
    BoxQpSolver,
    QpProblem,
    QpStatus,
    min_slack_feasibility,
    solve_qp,
)

INF = np.inf


def free(k):
    return np.full(k, -INF), np.full(k, INF)


def active_set_oracle(P, q, A, d):
    """Exact optimum of min .5 x'Px + q'x s.t. Ax >= d by enumerating
    active sets; multipliers of the stacked KKT system must be <= 0."""
    k, p = len(q), len(d)
    best = None
    for r in range(min(k, p) + 1):
        for subset in itertools.combinations(range(p), r):
            G = A[list(subset)]
            KKT = np.block([[P, G.T], [G, np.zeros((r, r))]])
            rhs = np.concatenate([-q, d[list(subset)]])
            try:
                sol = np.linalg.solve(KKT, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:k], sol[k:]
            if np.any(A @ x < d - 1e-9) or np.any(lam > 1e-9):
                continue
            value = 0.5 * x @ P @ x + q @ x
            if best is None or value < best - 1e-12:
                best = value
    return best


def test_projection_example():
    lo, hi = free(1)
    prob = QpProblem(P=[[1.0]], q=[0.0], A=[[1.0]], lb=[3.0], ub=[INF],
                     var_lb=lo, var_ub=hi)
    sol = solve_qp(prob)
    assert sol.status is QpStatus.SOLVED
    assert sol.x[0] == pytest.approx(3.0, abs=1e-8)
    assert sol.objective == pytest.approx(4.5, abs=1e-8)


def test_hinge_qp_two_point_analytic():
    # variables (w, b, xi1, xi2); dataset {(-1,-1),(+1,+1)}, C = 1
    P = np.zeros((4, 4))
    P[0, 0] = 1.0
    q = np.array([0.0, 0.0, 1.0, 1.0])
    A = np.array([
        [1.0, -1.0, 1.0, 0.0],
        [1.0, 1.0, 0.0, 1.0],
    ])
    prob = QpProblem(P=P, q=q, A=A, lb=[1.0, 1.0], ub=[INF, INF],
                     var_lb=[-INF, -INF, 0.0, 0.0], var_ub=[INF] * 4)
    sol = solve_qp(prob)
    assert sol.status is QpStatus.SOLVED
    assert sol.objective == pytest.approx(0.5, abs=1e-8)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.x[1] == pytest.approx(0.0, abs=1e-6)
    assert np.all(sol.x[2:] <= 1e-6)


def test_empty_feasible_set_detected():
    lo, hi = free(1)
    prob = QpProblem(P=[[1.0]], q=[0.0], A=[[1.0], [1.0]],
                     lb=[1.0, -INF], ub=[INF, 0.0], var_lb=lo, var_ub=hi)
    assert solve_qp(prob).status is QpStatus.INFEASIBLE


def test_non_psd_cost_rejected():
    lo, hi = free(1)
    with pytest.raises(EngineError):
        solve_qp(QpProblem(P=[[-1.0]], q=[0.0], A=np.zeros((0, 1)),
                           lb=[], ub=[], var_lb=lo, var_ub=hi))


def test_bound_validation():
    with pytest.raises(ValueError):
        QpProblem(P=[[1.0]], q=[0.0], A=[[1.0]], lb=[2.0], ub=[1.0],
                  var_lb=[-INF], var_ub=[INF])


def test_random_strictly_convex_matches_active_set_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(30):
        k = int(rng.integers(2, 7))
        p = int(rng.integers(1, 11))
        R = rng.standard_normal((k, k))
        P = R.T @ R + 0.5 * np.eye(k)
        q = rng.standard_normal(k)
        A = rng.standard_normal((p, k))
        d = A @ rng.standard_normal(k) - rng.uniform(0.0, 2.0, p)
        lo, hi = free(k)
        sol = solve_qp(QpProblem(P=P, q=q, A=A, lb=d, ub=np.full(p, INF),
                                 var_lb=lo, var_ub=hi))
        oracle = active_set_oracle(P, q, A, d)
        assert sol.status is QpStatus.SOLVED
        worst = max(worst, abs(sol.objective - oracle) / max(1.0, abs(oracle)))
    assert worst <= 1e-5


def test_kkt_conditions_at_solution():
    rng = np.random.default_rng(21)
    for _ in range(10):
        k, p = 4, 6
        R = rng.standard_normal((k, k))
        P = R.T @ R + np.eye(k)
        q = rng.standard_normal(k)
        A = rng.standard_normal((p, k))
        d = A @ rng.standard_normal(k) - rng.uniform(0, 1, p)
        prob = QpProblem(P=P, q=q, A=A, lb=d, ub=np.full(p, INF),
                         var_lb=np.full(k, -INF), var_ub=np.full(k, INF))
        sol = solve_qp(prob)
        assert sol.status is QpStatus.SOLVED
        y = sol.y
        stationarity = P @ sol.x + q + A.T @ y[:p] + y[p:]
        assert np.abs(stationarity).max() <= 1e-6 * max(1.0, np.abs(q).max())
        # complementary slackness: inactive rows carry no multiplier
        gaps = A @ sol.x - d
        assert np.abs(y[:p] * gaps).max() <= 1e-6 * max(1.0, np.abs(d).max())


def test_warm_start_matches_cold_objective():
    rng = np.random.default_rng(4)
    k, p = 5, 8
    R = rng.standard_normal((k, k))
    P = R.T @ R + np.eye(k)
    q = rng.standard_normal(k)
    A = rng.standard_normal((p, k))
    d = A @ rng.standard_normal(k) - rng.uniform(0, 1, p)
    prob = QpProblem(P=P, q=q, A=A, lb=d, ub=np.full(p, INF),
                     var_lb=np.full(k, -INF), var_ub=np.full(k, INF))
    cold = solve_qp(prob)
    warm = solve_qp(prob, warm_start=cold.x)
    assert abs(cold.objective - warm.objective) <= 1e-8


def test_solver_reusable_with_bound_overrides():
    solver = BoxQpSolver(P=[[1.0]], q=[0.0], A=np.zeros((0, 1)), lb=[], ub=[],
                         var_lb=[-5.0], var_ub=[5.0])
    lowered = solver.solve(var_lb=[2.0], var_ub=[5.0])
    assert lowered.x[0] == pytest.approx(2.0, abs=1e-8)
    raised = solver.solve(var_lb=[-5.0], var_ub=[-1.0])
    assert raised.x[0] == pytest.approx(-1.0, abs=1e-8)


def test_dual_bound_never_exceeds_optimum():
    rng = np.random.default_rng(5)
    for _ in range(40):
        k = int(rng.integers(2, 6))
        p = int(rng.integers(1, 8))
        diag = np.zeros(k)
        diag[: int(rng.integers(1, k + 1))] = rng.uniform(0.5, 2.0, size=None)
        rng.shuffle(diag)
        P = np.diag(diag)
        q = rng.standard_normal(k)
        A = rng.standard_normal((p, k))
        vlb = -rng.uniform(0.5, 3.0, k)
        vub = rng.uniform(0.5, 3.0, k)
        d = A @ rng.uniform(vlb, vub) - rng.uniform(0, 1, p)
        solver = BoxQpSolver(P, q, A, d, np.full(p, INF), vlb, vub)
        sol = solver.solve()
        assert sol.status is QpStatus.SOLVED
        tol = 1e-6 * max(1.0, abs(sol.objective))
        assert solver.dual_bound(sol.y) <= sol.objective + tol
        for _ in range(3):
            noise = np.concatenate([rng.standard_normal(p) * 3, np.zeros(k)])
            assert solver.dual_bound(noise) <= sol.objective + tol


def test_min_slack_examples():
    total, witness = min_slack_feasibility([(np.array([1.0]), 1.0)],
                                           [-INF], [INF])
    assert total == pytest.approx(0.0, abs=1e-9)
    assert witness[0] >= 1.0 - 1e-9

    total, _ = min_slack_feasibility(
        [(np.array([1.0]), 1.0), (np.array([-1.0]), 1.0)], [-INF], [INF]
    )
    assert total == pytest.approx(2.0, abs=1e-9)

    total, _ = min_slack_feasibility([(np.array([1.0]), 2.0)], [-INF], [1.0])
    assert total == pytest.approx(1.0, abs=1e-9)


def test_min_slack_zero_for_constructed_feasible_systems():
    rng = np.random.default_rng(9)
    for _ in range(50):
        k = int(rng.integers(1, 5))
        p = int(rng.integers(1, 8))
        x_star = rng.standard_normal(k)
        A = rng.standard_normal((p, k))
        d = A @ x_star - rng.uniform(0, 1, p)
        total, witness = min_slack_feasibility(
            list(zip(A, d)), np.full(k, -INF), np.full(k, INF)
        )
        assert total <= 1e-9
        assert np.all(A @ witness >= d - 1e-8)


def test_min_slack_empty_rows():
    total, witness = min_slack_feasibility([], [-1.0], [1.0])
    assert total == 0.0
    assert witness.shape == (1,)
