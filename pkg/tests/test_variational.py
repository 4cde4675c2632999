# tests/test_variational.py

import numpy as np
import pytest
from sklearn.linear_model import LinearRegression

from errors import ConvergenceError, InfeasibleProblemError
from shared_types import InterpolationProblem, KnotGrid, LinearSpline
from splines.core import canonicalize, evaluate, tv2
from splines.variational import (
    OptimizerConfig,
    connect_the_dots,
    consolidate,
    default_grid,
    regularized_fit,
    secant_lower_bound,
    sobolev_fit,
    sobolev_interpolate,
    sparse_interpolate,
)


def problem(*points):
    return InterpolationProblem.from_points(points)


FOUR_POINTS = problem((0, 0), (1, 1), (2, 1), (3, 0))


def random_problem(rng):
    m = int(rng.integers(3, 11))
    x = np.sort(rng.choice(np.linspace(-5, 5, 201), size=m, replace=False))
    y = rng.standard_normal(m)
    return InterpolationProblem(x, y)


# --------------------------
# Problem construction
# --------------------------

def test_from_points_sorts_and_merges_duplicates():
    p = problem((2, 1), (0, 0), (2, 1), (1, 3))
    assert list(p.x) == [0.0, 1.0, 2.0]
    assert list(p.y) == [0.0, 3.0, 1.0]


def test_from_points_rejects_conflicting_duplicates():
    with pytest.raises(InfeasibleProblemError):
        problem((0, 0), (0, 1), (1, 1))


def test_grid_snaps_data_points():
    grid = KnotGrid(lo=0, hi=1, count=3)
    assert 0.3 in grid.locations(np.array([0.3]))


def test_grid_rejects_inverted_range():
    with pytest.raises(InfeasibleProblemError):
        KnotGrid(lo=1, hi=0, count=5)


# --------------------------
# Secant lower bound
# --------------------------

def test_secant_bound_collinear():
    assert secant_lower_bound(problem((0, 0), (1, 1), (2, 2))) == 0.0


def test_secant_bound_peak():
    assert secant_lower_bound(problem((0, 0), (1, 1), (2, 0))) == 2.0


def test_secant_bound_plateau():
    assert secant_lower_bound(FOUR_POINTS) == 2.0


def test_secant_bound_needs_two_points():
    with pytest.raises(InfeasibleProblemError):
        secant_lower_bound(problem((0, 1)))


# --------------------------
# Sparse interpolation
# --------------------------

def test_sparse_collinear_is_affine():
    s = sparse_interpolate(problem((0, 1), (1, 3), (2, 5)))
    assert s.num_knots == 0
    assert s.b2 == pytest.approx(2.0, abs=1e-9)
    assert tv2(s) == 0.0


def test_sparse_peak_unique_solution():
    s = sparse_interpolate(problem((0, 0), (1, 1), (2, 0)))
    assert s.num_knots == 1
    assert s.knots[0] == pytest.approx(1.0, abs=1e-9)
    assert s.coeffs[0] == pytest.approx(-2.0, abs=1e-9)
    assert tv2(s) == pytest.approx(2.0, abs=1e-9)


def test_sparse_four_points_is_optimal():
    grid = KnotGrid(lo=-0.5, hi=3.5, count=9)   # contains 1, 1.5, 2
    s = sparse_interpolate(FOUR_POINTS, grid)
    assert tv2(s) == pytest.approx(2.0, abs=1e-9)
    assert s.num_knots <= 2
    assert np.allclose(evaluate(s, FOUR_POINTS.x), FOUR_POINTS.y, atol=1e-9)


def test_sparse_keeps_knots_on_unsnapped_grid(capsys):
    grid = KnotGrid(lo=-1, hi=3, count=4, snap_data_points=False)   # 1/3 and 5/3 inside, misses x = 1
    p = problem((0, 0), (1, 1), (2, 0))
    s = sparse_interpolate(p, grid)
    assert s.num_knots >= 1
    assert all(min(abs(t - 1 / 3), abs(t - 5 / 3)) <= 1e-12 for t in s.knots)
    # with knots restricted to {1/3, 5/3} the optimum is a1 + a2 = -6, above the secant bound 2
    assert tv2(s) == pytest.approx(6.0, abs=1e-8)
    assert np.allclose(evaluate(s, p.x), p.y, atol=1e-9)
    assert "LP vertex" not in capsys.readouterr().err


def test_sparse_matches_secant_bound_on_random_problems(rng):
    """LP optimum equals the analytic bound; vertex has at most M − 2 knots."""
    for _ in range(200):
        p = random_problem(rng)
        s = sparse_interpolate(p, default_grid(p))
        bound = secant_lower_bound(p)
        assert abs(tv2(s) - bound) <= 1e-7 * max(bound, 1.0)
        assert s.num_knots <= p.size - 2
        assert np.max(np.abs(evaluate(s, p.x) - p.y)) <= 1e-8


def test_sparse_equals_linear_connect_the_dots_and_beats_constant(rng):
    for _ in range(20):
        p = random_problem(rng)
        s = sparse_interpolate(p)
        linear = connect_the_dots(p, "linear")
        constant = connect_the_dots(p, "constant")
        assert tv2(s) == pytest.approx(tv2(linear), rel=1e-7, abs=1e-9)
        slopes = np.diff(p.y) / np.diff(p.x)
        if slopes[0] != 0 or slopes[-1] != 0:
            assert tv2(s) < tv2(constant)


# --------------------------
# Consolidation
# --------------------------

def test_consolidate_four_point_phenomenon():
    dots = LinearSpline(knots=(1, 2), coeffs=(-1, -1), b2=1)
    assert tv2(dots) == 2.0
    merged = consolidate(dots, FOUR_POINTS, 1e-9)
    assert merged.num_knots == 1
    assert merged.knots[0] == pytest.approx(1.5, abs=1e-9)
    assert merged.coeffs[0] == pytest.approx(-2.0, abs=1e-9)
    assert tv2(merged) == pytest.approx(2.0, abs=1e-9)
    assert merged.knots[0] not in FOUR_POINTS.x
    assert np.allclose(evaluate(merged, FOUR_POINTS.x), FOUR_POINTS.y, atol=1e-9)


def test_consolidate_keeps_opposite_signs():
    p = problem((0, 0), (1, 1), (2, 0), (3, 1))
    s = connect_the_dots(p, "linear")
    assert consolidate(s, p) == s


def test_consolidate_affine_unchanged():
    p = problem((0, 0), (1, 1), (2, 2))
    s = LinearSpline(b2=1.0)
    assert consolidate(s, p) == s


def test_consolidate_never_increases_tv2(rng):
    for _ in range(30):
        p = random_problem(rng)
        s = connect_the_dots(p, "linear")
        c = consolidate(s, p, 1e-9)
        assert tv2(c) <= tv2(s) + 1e-9
        assert c.num_knots <= s.num_knots
        assert np.max(np.abs(evaluate(c, p.x) - p.y)) <= 1e-9


# --------------------------
# Regularized fit
# --------------------------

def noisy_sine(rng, m=40, sd=0.1):
    x = np.linspace(0, 1, m)
    return InterpolationProblem(x, np.sin(2 * np.pi * x) + sd * rng.standard_normal(m))


def test_regularized_fit_zero_lambda_interpolates(rng):
    p = InterpolationProblem(np.linspace(0, 1, 8), rng.standard_normal(8))
    result = regularized_fit(p, 0.0, KnotGrid(lo=-0.1, hi=1.1, count=13))
    assert result.rss <= 1e-8


def test_regularized_fit_huge_lambda_is_least_squares_line(rng):
    p = noisy_sine(rng)
    result = regularized_fit(p, 1e6)
    ols = LinearRegression().fit(p.x[:, None], p.y)
    assert result.spline.num_knots == 0
    assert result.spline.b1 == pytest.approx(ols.intercept_, abs=1e-6)
    assert result.spline.b2 == pytest.approx(ols.coef_[0], abs=1e-6)


def test_regularized_fit_objective_parts(rng):
    p = noisy_sine(rng)
    lam = 0.1
    result = regularized_fit(p, lam, KnotGrid(lo=-0.05, hi=1.05, count=24), OptimizerConfig(accelerate=True))
    residual = p.y - evaluate(result.spline, p.x)
    assert result.rss == pytest.approx(float(residual @ residual), rel=1e-9)
    assert result.objective == pytest.approx(result.rss + lam * tv2(result.spline), rel=1e-9)


def test_regularized_fit_knot_count_trend(rng):
    """Knot count along a λ sweep is nonincreasing for most noise draws."""
    lambdas = np.geomspace(1e-4, 10, 8)
    grid_count = 48
    good = 0
    for _ in range(10):
        p = noisy_sine(rng)
        grid = default_grid(p, count=grid_count)
        counts = [
            canonicalize(regularized_fit(p, lam, grid, OptimizerConfig(accelerate=True)).spline, 1e-6).num_knots
            for lam in lambdas
        ]
        good += all(b <= a for a, b in zip(counts, counts[1:]))
        last = regularized_fit(p, 1e6, grid)
        assert last.spline.num_knots == 0
    assert good >= 8


def test_regularized_fit_strict_raises_with_best_iterate(rng):
    p = noisy_sine(rng)
    with pytest.raises(ConvergenceError) as info:
        regularized_fit(p, 1e-3, opt=OptimizerConfig(max_iter=2, strict=True))
    assert info.value.best.iterations == 2


def test_regularized_fit_rejects_negative_lambda():
    with pytest.raises(ValueError):
        regularized_fit(FOUR_POINTS, -1.0)


# --------------------------
# Sobolev problems
# --------------------------

def test_sobolev_two_points():
    s = sobolev_interpolate(problem((0, 0), (1, 1)))
    assert (s.b1, s.b2, s.knots, s.coeffs) == (0.0, 0.0, (0.0, 1.0), (1.0, -1.0))


def test_sobolev_single_point_is_constant():
    s = sobolev_interpolate(problem((5, 3)))
    assert s == LinearSpline(b1=3.0)


def test_sobolev_collinear_interior_knot_vanishes():
    s = sobolev_interpolate(problem((0, 0), (1, 1), (2, 2)))
    assert s.knots == (0.0, 2.0)


def test_sobolev_properties(rng):
    for _ in range(50):
        p = random_problem(rng)
        s = sobolev_interpolate(p)
        assert np.max(np.abs(evaluate(s, p.x) - p.y)) <= 1e-10
        assert abs(sum(s.coeffs)) <= 1e-12 * max(1.0, float(np.sum(np.abs(s.coeffs))))
        assert s.b2 == 0.0
        inside = np.linspace(p.x[0], p.x[-1], 301)
        dots = connect_the_dots(p, "linear")
        assert np.allclose(evaluate(s, inside), evaluate(dots, inside), atol=1e-10)


def test_sobolev_fit_limits(rng):
    p = random_problem(rng)
    exact = sobolev_fit(p, 0.0)
    assert np.allclose(evaluate(exact, p.x), p.y, atol=1e-12)
    flat = sobolev_fit(p, 1e8)
    assert np.allclose(evaluate(flat, p.x), np.mean(p.y), atol=1e-5)


def test_sobolev_fit_shrinks_energy(rng):
    p = random_problem(rng)
    fitted = sobolev_fit(p, 0.5)
    values = evaluate(fitted, p.x)

    def energy(v):
        return float(np.sum(np.diff(v) ** 2 / np.diff(p.x)))

    assert energy(values) < energy(p.y)
