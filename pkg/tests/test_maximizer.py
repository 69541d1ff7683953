"""Global maximizers: convergence on known optima, determinism, budgets."""

import numpy as np
import pytest

from fabolas.maximizer import (
    MaximizerBudget,
    cmaes_maximize,
    combined_maximize,
    direct_maximize,
)


def neg_sphere(center):
    def f(x):
        return -float(np.sum((x - center) ** 2))

    return f


def branin_unit(u):
    """Branin mapped to the unit square, negated for maximization."""
    x1 = -5.0 + 15.0 * u[0]
    x2 = 15.0 * u[1]
    b = 5.1 / (4 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8 * np.pi)
    val = (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10
    return -val


class TestDirect:
    def test_sphere_center_found_exactly(self):
        # the optimum sits at the initial center, so DIRECT nails it
        x, v = direct_maximize(neg_sphere(np.full(3, 0.5)), 3, MaximizerBudget(200))
        assert np.allclose(x, 0.5)
        assert v == pytest.approx(0.0)

    def test_off_center_sphere_within_tolerance(self):
        target = np.array([0.3, 0.7])
        x, _ = direct_maximize(neg_sphere(target), 2, MaximizerBudget(500))
        assert np.linalg.norm(x - target) < 1e-2

    def test_respects_evaluation_budget(self):
        calls = []

        def counting(x):
            calls.append(1)
            return -float(np.sum(x**2))

        direct_maximize(counting, 2, MaximizerBudget(73))
        assert len(calls) <= 73

    def test_deterministic(self):
        f = neg_sphere(np.array([0.21, 0.63]))
        x1, v1 = direct_maximize(f, 2, MaximizerBudget(300))
        x2, v2 = direct_maximize(f, 2, MaximizerBudget(300))
        assert np.array_equal(x1, x2)
        assert v1 == v2

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            MaximizerBudget(0)


class TestCmaes:
    def test_sphere_high_precision(self):
        target = np.array([0.3, 0.7])
        x, _ = cmaes_maximize(neg_sphere(target), 2, popsize=12, generations=50, seed=0)
        assert np.linalg.norm(x - target) < 1e-3

    def test_non_smooth_objective(self):
        x, _ = cmaes_maximize(
            lambda u: -abs(float(u[0]) - 0.3), 1, popsize=8, generations=40, seed=1
        )
        assert abs(x[0] - 0.3) < 1e-3

    def test_stays_in_unit_box(self):
        seen = []

        def f(u):
            seen.append(u.copy())
            return float(u[0])  # pushes toward the boundary

        cmaes_maximize(f, 2, popsize=6, generations=10, seed=2)
        pts = np.array(seen)
        assert np.all(pts >= 0.0) and np.all(pts <= 1.0)

    def test_deterministic_per_seed(self):
        f = neg_sphere(np.array([0.6]))
        r1 = cmaes_maximize(f, 1, popsize=6, generations=15, seed=5)
        r2 = cmaes_maximize(f, 1, popsize=6, generations=15, seed=5)
        assert np.array_equal(r1[0], r2[0]) and r1[1] == r2[1]

    def test_popsize_guard(self):
        with pytest.raises(ValueError):
            cmaes_maximize(neg_sphere(np.array([0.5])), 1, popsize=3)


class TestCombined:
    def test_branin_global_maximum(self):
        x, v = combined_maximize(branin_unit, 2, MaximizerBudget(400, seed=0))
        assert v == pytest.approx(-0.397887, abs=1e-4)

    def test_at_least_as_good_as_direct_alone(self):
        f = neg_sphere(np.array([0.123, 0.456, 0.789]))
        _, v_d = direct_maximize(f, 3, MaximizerBudget(200))
        _, v_c = combined_maximize(f, 3, MaximizerBudget(200, seed=1))
        assert v_c >= v_d
