import numpy as np
import pytest

from hmsvm.core import (
    Assignment,
    Dataset,
    SolverConfig,
    Status,
    hml_objective,
)
from hmsvm.conflicts import ConflictCut
from hmsvm.bnb import (
    BigMPolicy,
    BnbNode,
    check_lazy_cuts,
    derive_big_m,
    solve,
    solve_node_relaxation,
)
from hmsvm.oracle import brute_force_optimum
from tests.conftest import random_dataset


def small_cfg(C, seed=0, **kw):
    return SolverConfig(C=C, time_limit=60.0, sampling_budget=1.0,
                        full_cut_budget=1.0, seed=seed, **kw)


def test_big_m_single_sample():
    d = Dataset([[1.0]], [1.0], "one")
    big_m, b_bound = derive_big_m(d, 2.0)
    assert b_bound == pytest.approx(3.0)
    assert big_m[0] == pytest.approx(6.0)


def test_big_m_zero_features(contradictory_pair):
    big_m, b_bound = derive_big_m(contradictory_pair, 2.83)
    assert b_bound == pytest.approx(1.0)
    assert np.allclose(big_m, 2.0)


def test_big_m_covers_margin_shortfall_over_box():
    rng = np.random.default_rng(8)
    d = random_dataset(8, 9, 3)
    w_bound = 1.7
    big_m, b_bound = derive_big_m(d, w_bound)
    for _ in range(200):
        w = rng.uniform(-w_bound, w_bound, 3)
        b = rng.uniform(-b_bound, b_bound)
        shortfall = 1.0 - d.labels * (d.features @ w + b)
        assert np.all(shortfall <= big_m + 1e-9)


def test_big_m_fixed_policy(contradictory_pair):
    policy = BigMPolicy(mode="fixed", value=50.0)
    big_m, b_bound = policy.constants(contradictory_pair, 2.83)
    assert np.allclose(big_m, 50.0)
    assert b_bound == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BigMPolicy(mode="fixed", value=0.5).constants(contradictory_pair, 1.0)


def test_node_relaxation_all_marks_fixed(contradictory_pair):
    big_m, b_bound = derive_big_m(contradictory_pair, 2.83)
    node = BnbNode(frozenset(), frozenset({0, 1}), 0.0, 0)
    rel = solve_node_relaxation(contradictory_pair, node, [], 1.0, big_m,
                                2.83, b_bound)
    assert rel.value == pytest.approx(2.0, abs=1e-7)  # C * n, w = 0
    assert np.allclose(rel.hyperplane.w, 0.0, atol=1e-6)


def test_node_relaxation_with_cut(contradictory_pair):
    big_m, b_bound = derive_big_m(contradictory_pair, 2.83)
    node = BnbNode(frozenset(), frozenset(), 0.0, 0)
    rel = solve_node_relaxation(contradictory_pair, node,
                                [ConflictCut((0, 1))], 1.0, big_m, 2.83,
                                b_bound)
    assert rel.value == pytest.approx(1.0, abs=1e-7)
    assert rel.z.sum() == pytest.approx(1.0, abs=1e-6)


def test_node_relaxation_separable(separable_pair):
    # at C = 100 marking is never worth it, so the relaxation sits at the
    # max-margin value and the marks vanish; at C = 1 the big-M trade is
    # cheaper and the relaxation dips to min_w w^2/2 + 2C(1-w)/M
    big_m, b_bound = derive_big_m(separable_pair, 4.0)
    node = BnbNode(frozenset(), frozenset(), 0.0, 0)
    rel = solve_node_relaxation(separable_pair, node, [], 100.0, big_m, 4.0,
                                b_bound)
    assert rel.value == pytest.approx(0.5, abs=1e-6)
    assert np.all(rel.z <= 1e-6)
    low_c = solve_node_relaxation(separable_pair, node, [], 1.0, big_m, 4.0,
                                  b_bound)
    w_interior = 2.0 / big_m[0]
    expect = 0.5 * w_interior ** 2 + 2.0 * (1.0 - w_interior) / big_m[0]
    assert low_c.value == pytest.approx(expect, rel=1e-6)


def test_check_lazy_cuts():
    pool = [ConflictCut((0, 1))]
    assert check_lazy_cuts(Assignment([1, 1]), pool) == []
    violated = check_lazy_cuts(Assignment([0, 0]), pool)
    assert [c.members for c in violated] == [(0, 1)]
    assert check_lazy_cuts(Assignment([1, 0]), pool) == []


def test_solve_contradictory_pair(contradictory_pair):
    report = solve(contradictory_pair, small_cfg(1.0))
    assert report.status is Status.OPTIMAL
    assert report.upper_bound == pytest.approx(1.0, abs=1e-9)
    assert report.incumbent[1].n_marked == 1


def test_solve_separable_pair(separable_pair):
    for C in (1.0, 100.0):
        report = solve(separable_pair, small_cfg(C))
        assert report.status is Status.OPTIMAL
        assert report.upper_bound == pytest.approx(0.5, abs=1e-8)
        assert report.incumbent[1].n_marked == 0


def test_solve_matches_oracle_on_random_instance():
    d = random_dataset(77, 8, 2)
    report = solve(d, small_cfg(10.0, seed=77))
    oracle = brute_force_optimum(d, 10.0)
    assert report.status is Status.OPTIMAL
    rel = abs(report.upper_bound - oracle.value) / max(abs(oracle.value), 1e-9)
    assert rel <= 1e-6


def test_incumbent_is_margin_consistent(contradictory_pair):
    report = solve(contradictory_pair, small_cfg(1.0))
    plane, marks = report.incumbent
    value = hml_objective(contradictory_pair, plane, marks, 1.0)
    assert value == pytest.approx(report.upper_bound)


def test_report_bounds_ordered(separable_pair):
    report = solve(separable_pair, small_cfg(1.0))
    assert report.lower_bound <= report.upper_bound + 1e-9
    assert report.gap_percent == pytest.approx(0.0, abs=1e-9)


def test_root_strengthening_strict_on_conflict_pair(contradictory_pair_x1):
    with_cuts = solve(contradictory_pair_x1, small_cfg(1.0))
    no_cuts = solve(contradictory_pair_x1,
                    SolverConfig(C=1.0, time_limit=60.0, sampling_budget=0.0,
                                 full_cut_budget=0.0, use_cuts=False))
    assert with_cuts.upper_bound == pytest.approx(1.0, abs=1e-9)
    assert no_cuts.upper_bound == pytest.approx(1.0, abs=1e-9)
    assert with_cuts.root_relax_value > no_cuts.root_relax_value + 0.1
    # the no-cut root is the pure big-M relaxation value 2 / M
    big_m, _ = derive_big_m(contradictory_pair_x1,
                            2.0 * np.sqrt(2.0))
    assert no_cuts.root_relax_value == pytest.approx(2.0 / big_m[0], rel=1e-4)


def test_warm_start_neutrality():
    d = random_dataset(101, 10, 2)
    with_warm = solve(d, small_cfg(5.0, seed=3))
    without = solve(d, small_cfg(5.0, seed=3, use_warm_start=False))
    assert with_warm.status == without.status
    rel = abs(with_warm.upper_bound - without.upper_bound)
    assert rel <= 1e-6 * max(1.0, abs(without.upper_bound))


def test_optimal_weights_stay_inside_derived_boxes():
    from hmsvm.hinge import derive_incumbent, train_hinge

    for seed in (5, 6):
        d = random_dataset(seed, 9, 2)
        report = solve(d, small_cfg(10.0, seed=seed))
        h, xi = train_hinge(d, 10.0)
        init = derive_incumbent(d, h, xi, 10.0)
        assert report.status is Status.OPTIMAL
        w_star = report.incumbent[0].w
        assert np.abs(w_star).max() <= init.w_bound + 1e-9


def test_solve_report_time_budget_zero_cut_phases(contradictory_pair):
    cfg = SolverConfig(C=1.0, time_limit=30.0, sampling_budget=0.0,
                       full_cut_budget=0.0, seed=0)
    report = solve(contradictory_pair, cfg)
    assert report.cuts_generated == 0
    assert report.status is Status.OPTIMAL
    assert report.upper_bound == pytest.approx(1.0, abs=1e-9)
