import numpy as np
import pytest

from hmsvm.core import (
    Assignment,
    ConsistencyError,
    Dataset,
    Hyperplane,
    SolverConfig,
    hard_margin_loss,
    hinge_loss,
    hml_objective,
    margins,
    relative_gap,
)


@pytest.mark.parametrize("u,expected", [(1.0, 0.0), (0.0, 1.0), (-1.0, 2.0)])
def test_hinge_loss_examples(u, expected):
    assert hinge_loss(u) == expected


@pytest.mark.parametrize("u,expected", [(0.999, 1), (1.0, 0), (-10.0, 1)])
def test_hard_margin_loss_examples(u, expected):
    assert hard_margin_loss(u) == expected


def test_loss_relations_on_random_inputs():
    rng = np.random.default_rng(0)
    for u in rng.uniform(-50, 50, size=500):
        assert hard_margin_loss(u) in (0, 1)
        assert hinge_loss(u) >= 0.0
        assert hinge_loss(u) >= 1.0 - u
        # the hinge dominates the unit penalty on the penalized side
        if hard_margin_loss(u) == 1:
            assert hinge_loss(u) > 0.0


def test_margins_examples():
    d = Dataset([[1.0]], [1.0], "a")
    assert margins(d, Hyperplane([1.0], 0.0))[0] == pytest.approx(1.0)
    d = Dataset([[0.0]], [-1.0], "b")
    assert margins(d, Hyperplane([0.0], 0.0))[0] == pytest.approx(0.0)
    d = Dataset([[2.0, 0.0]], [-1.0], "c")
    assert margins(d, Hyperplane([1.0, 0.0], 0.0))[0] == pytest.approx(-2.0)


def test_margins_rejects_dimension_mismatch():
    d = Dataset([[1.0, 2.0]], [1.0], "wide")
    with pytest.raises(ValueError):
        margins(d, Hyperplane([1.0], 0.0))


def test_margins_linear_in_hyperplane():
    rng = np.random.default_rng(3)
    d = Dataset(rng.standard_normal((7, 3)), np.where(rng.random(7) < 0.5, -1, 1), "lin")
    w1, b1 = rng.standard_normal(3), 0.7
    w2, b2 = rng.standard_normal(3), -0.2
    alpha, beta = 2.5, -1.25
    combined = Hyperplane(alpha * w1 + beta * w2, alpha * b1 + beta * b2)
    expect = alpha * margins(d, Hyperplane(w1, b1)) + beta * margins(d, Hyperplane(w2, b2))
    assert np.allclose(margins(d, combined), expect, atol=1e-12)


def test_hml_objective_zero_plane_pays_full_penalty():
    d = Dataset(np.ones((5, 2)), [1, 1, -1, -1, 1], "five")
    value = hml_objective(d, Hyperplane([0.0, 0.0], 0.0), Assignment([1] * 5), 1.0)
    assert value == pytest.approx(5.0)


def test_hml_objective_two_point_max_margin():
    # analytic optimum for the symmetric pair: w = 1, b = 0, objective 1/2
    d = Dataset([[-1.0], [1.0]], [-1.0, 1.0], "pair")
    value = hml_objective(d, Hyperplane([1.0], 0.0), Assignment([0, 0]), 1.0)
    assert value == pytest.approx(0.5)


def test_hml_objective_example_arithmetic():
    # w = (3,4), two marks, C = 10 -> 0.5*25 + 20
    d = Dataset([[1.0, 0.0], [0.0, 1.0]], [1.0, -1.0], "two")
    value = hml_objective(d, Hyperplane([3.0, 4.0], 0.0), Assignment([1, 1]), 10.0)
    assert value == pytest.approx(32.5)


def test_hml_objective_rejects_inconsistent_marks():
    d = Dataset([[0.0]], [1.0], "one")
    with pytest.raises(ConsistencyError):
        hml_objective(d, Hyperplane([0.0], 0.0), Assignment([0]), 1.0)


def test_hml_objective_monotone_in_marks_and_penalty():
    rng = np.random.default_rng(11)
    d = Dataset(rng.standard_normal((6, 2)), np.where(rng.random(6) < 0.5, -1, 1), "mono")
    h = Hyperplane(rng.standard_normal(2), 0.1)
    base = hml_objective(d, h, Assignment([1] * 6), 2.0)
    assert hml_objective(d, h, Assignment([1] * 6), 3.0) > base
    u = margins(d, h)
    z = (u < 1 - 1e-6).astype(int)
    fewer = hml_objective(d, h, Assignment(z), 2.0)
    assert fewer <= base


@pytest.mark.parametrize("upper,lower,expected", [
    (100.0, 50.0, 50.0),
    (7.5, 7.5, 0.0),
    (0.0, 0.0, 0.0),
])
def test_relative_gap_examples(upper, lower, expected):
    assert relative_gap(upper, lower) == pytest.approx(expected)


def test_relative_gap_rejects_crossed_bounds():
    with pytest.raises(ValueError):
        relative_gap(1.0, 2.0)


def test_relative_gap_tolerates_bound_noise():
    assert relative_gap(1.0, 1.0 + 1e-12) == 0.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(C=0.0)
    with pytest.raises(ValueError):
        SolverConfig(C=1.0, time_limit=10.0, sampling_budget=6.0, full_cut_budget=6.0)
    with pytest.raises(ValueError):
        SolverConfig(C=1.0, opt_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(C=1.0, big_m_policy="fixed")
    cfg = SolverConfig(C=2.0)
    assert cfg.sampling_budget + cfg.full_cut_budget <= cfg.time_limit


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.empty((0, 2)), [], "empty")
    with pytest.raises(ValueError):
        Dataset([[1.0]], [2.0], "badlabel")
    with pytest.raises(ValueError):
        Dataset([[np.nan]], [1.0], "nan")
    with pytest.raises(ValueError):
        Dataset([[1.0], [2.0]], [1.0], "short")
