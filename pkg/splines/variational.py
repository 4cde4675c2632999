# splines/variational.py  ──  1-D interpolation and regression with TV² / Sobolev regularity
#
# sparse_interpolate   min ‖D²f‖  s.t. f(x_m) = y_m     (linear program on a knot grid)
# regularized_fit      min Σ(y_m − f(x_m))² + λ‖a‖₁     (proximal gradient on a knot grid)
# sobolev_interpolate  min ∫|Df|²  s.t. f(x_m) = y_m     (closed form)
# sobolev_fit          min Σ(y_m − f(x_m))² + λ∫|Df|²   (tridiagonal solve)

import sys
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.linalg import solveh_banded
from scipy.optimize import linprog

from config import (
    FEASIBILITY_TOL,
    FIT_MAX_ITER,
    FIT_TOL,
    GRID_PAD_FRACTION,
    GRID_SIZE,
    KNOT_MERGE_TOL,
    LP_FEASIBILITY_TOL,
    LP_METHOD,
    LP_OPTIMALITY_TOL,
    LP_OPTIMUM_RTOL,
    POWER_ITER_MAX,
    POWER_ITER_TOL,
)
from errors import ConvergenceError, InfeasibleProblemError, SplineError
from shared_types import InterpolationProblem, KnotGrid, LinearSpline
from splines.core import canonicalize, evaluate, tv2
from utils.prox import prox_l1
from utils.rng import make_rng


class OptimizerConfig(BaseModel):
    max_iter: int = Field(FIT_MAX_ITER, ge=1)
    tol: float = Field(FIT_TOL, gt=0)
    accelerate: bool = False    # FISTA extrapolation
    strict: bool = False        # raise ConvergenceError instead of returning the best iterate


@dataclass
class FitResult:
    spline: LinearSpline
    objective: float
    rss: float
    iterations: int
    converged: bool


# ── Helpers ───────────────────────────────────────────────────────────────────

def default_grid(p: InterpolationProblem, count: int = GRID_SIZE, pad: float = GRID_PAD_FRACTION) -> KnotGrid:
    span = float(p.x[-1] - p.x[0]) or 1.0
    return KnotGrid(lo=float(p.x[0]) - pad * span, hi=float(p.x[-1]) + pad * span, count=count)


def relu_design(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """M × K matrix of (x_m − τ_k)_+."""
    return np.maximum(np.asarray(x, dtype=float)[:, None] - np.asarray(knots, dtype=float)[None, :], 0.0)


def _interior_candidates(p: InterpolationProblem, grid: KnotGrid) -> np.ndarray:
    # A knot at or left of x_1 acts on the data like an affine term; one at or
    # right of x_M is invisible to the data. Both can only add cost.
    knots = grid.locations(p.x)
    return knots[(knots > p.x[0]) & (knots < p.x[-1])]


def _secant_slopes(p: InterpolationProblem) -> np.ndarray:
    return np.diff(p.y) / np.diff(p.x)


def _require_two_points(p: InterpolationProblem) -> None:
    if p.size < 2:
        raise InfeasibleProblemError(
            f"need at least 2 distinct abscissae to pin down the affine part, got {p.size}"
        )


def _max_residual(s: LinearSpline, p: InterpolationProblem) -> float:
    return float(np.max(np.abs(np.asarray(evaluate(s, p.x)) - p.y)))


def connect_the_dots(p: InterpolationProblem, extrapolation: Literal["linear", "constant"] = "linear") -> LinearSpline:
    """Piecewise-linear interpolant with knots at the data abscissae."""
    if p.size == 1:
        return LinearSpline(b1=float(p.y[0]))
    slopes = _secant_slopes(p)
    if extrapolation == "linear":
        return LinearSpline(
            b1=float(p.y[0] - slopes[0] * p.x[0]),
            b2=float(slopes[0]),
            knots=tuple(p.x[1:-1]),
            coeffs=tuple(np.diff(slopes)),
        )
    if extrapolation == "constant":
        return LinearSpline(
            b1=float(p.y[0]),
            b2=0.0,
            knots=tuple(p.x),
            coeffs=(float(slopes[0]), *np.diff(slopes), float(-slopes[-1])),
        )
    raise SplineError(f"unknown extrapolation '{extrapolation}'")


# ── TV² interpolation ─────────────────────────────────────────────────────────

def secant_lower_bound(p: InterpolationProblem) -> float:
    """Σ|s_{m+1} − s_m| over consecutive secant slopes: the optimal TV² of any interpolant."""
    _require_two_points(p)
    return float(np.sum(np.abs(np.diff(_secant_slopes(p)))))


def sparse_interpolate(p: InterpolationProblem, grid: Optional[KnotGrid] = None) -> LinearSpline:
    """
    Minimum-‖a‖₁ interpolant over the candidate knots of `grid`.

    Posed as a standard-form LP with a = a⁺ − a⁻ and (b1, b2) free, solved by
    dual simplex so the answer is a vertex: at most M − 2 active knots. The
    vertex is then re-solved on its support by least squares to machine
    precision.
    """
    _require_two_points(p)
    grid = grid or default_grid(p)
    candidates = _interior_candidates(p, grid)
    m, k = p.size, candidates.size

    relu = relu_design(p.x, candidates)
    a_eq = np.hstack([np.ones((m, 1)), p.x[:, None], relu, -relu])
    cost = np.concatenate([np.zeros(2), np.ones(2 * k)])
    bounds = [(None, None)] * 2 + [(0, None)] * (2 * k)
    res = linprog(
        cost,
        A_eq=a_eq,
        b_eq=p.y,
        bounds=bounds,
        method=LP_METHOD,
        options={
            "primal_feasibility_tolerance": LP_FEASIBILITY_TOL,
            "dual_feasibility_tolerance": LP_OPTIMALITY_TOL,
        },
    )
    if res.status == 2:
        raise InfeasibleProblemError(f"no interpolant on this knot grid: {res.message}")
    if res.status != 0:
        raise ConvergenceError(f"LP solver stopped with status {res.status}: {res.message}")

    b1, b2 = res.x[0], res.x[1]
    a = res.x[2 : 2 + k] - res.x[2 + k :]
    support = np.abs(a) > KNOT_MERGE_TOL
    b1, b2, a_support = _polish_vertex(p, candidates[support], b1, b2, a[support])

    spline = canonicalize(
        LinearSpline(b1=b1, b2=b2, knots=tuple(candidates[support]), coeffs=tuple(a_support))
    )
    if not np.all(np.isin(p.x[1:-1], candidates)):
        # the secant bound needs knots at the data; off them the LP value is the optimum
        return spline
    bound = secant_lower_bound(p)
    if spline.num_knots > max(m - 2, 0) or tv2(spline) > bound + LP_OPTIMUM_RTOL * max(bound, 1.0):
        print(
            f"⚠️  LP vertex has {spline.num_knots} knots and TV² {tv2(spline):.6g} "
            f"(bound {bound:.6g}); using the connect-the-dots optimum",
            file=sys.stderr,
        )
        spline = canonicalize(connect_the_dots(p, "linear"))
    return spline


def _polish_vertex(p, knots, b1, b2, a):
    """Exact solve on the LP support; keeps the LP values if the refit disagrees."""
    design = np.hstack([np.ones((p.size, 1)), p.x[:, None], relu_design(p.x, knots)])
    theta, *_ = np.linalg.lstsq(design, p.y, rcond=None)
    refit_a = theta[2:]
    if np.max(np.abs(design @ theta - p.y)) <= FEASIBILITY_TOL and np.all(np.sign(refit_a) == np.sign(a)):
        return float(theta[0]), float(theta[1]), refit_a
    return float(b1), float(b2), a


def consolidate(s: LinearSpline, p: InterpolationProblem, tol: float = FEASIBILITY_TOL) -> LinearSpline:
    """
    Greedy knot deletion: two adjacent knots with same-sign coefficients are
    replaced by one knot where the outer segments intersect, as long as the
    data are still interpolated within `tol`. TV² is unchanged by such a merge.
    """
    current = canonicalize(s, 0.0)
    merged = True
    while merged and current.num_knots >= 2:
        merged = False
        for i in range(current.num_knots - 1):
            if current.coeffs[i] * current.coeffs[i + 1] <= 0:
                continue
            candidate = _merge_adjacent(current, i)
            if _max_residual(candidate, p) <= tol and tv2(candidate) <= tv2(current) + tol:
                current = candidate
                merged = True
                break
    return current


def _merge_adjacent(s: LinearSpline, i: int) -> LinearSpline:
    t_left, t_right = s.knots[i], s.knots[i + 1]
    a_left, a_right = s.coeffs[i], s.coeffs[i + 1]
    slope_in = s.b2 + sum(s.coeffs[:i])
    slope_out = slope_in + a_left + a_right
    f_left, f_right = evaluate(s, t_left), evaluate(s, t_right)
    # f_left + slope_in·(t − t_left) = f_right + slope_out·(t − t_right)
    tau = (f_right - f_left + slope_in * t_left - slope_out * t_right) / (slope_in - slope_out)
    knots = (*s.knots[:i], tau, *s.knots[i + 2 :])
    coeffs = (*s.coeffs[:i], a_left + a_right, *s.coeffs[i + 2 :])
    return canonicalize(LinearSpline(b1=s.b1, b2=s.b2, knots=knots, coeffs=coeffs), 0.0)


# ── TV²-regularized least squares ─────────────────────────────────────────────

def _largest_eigenvalue(matrix: np.ndarray) -> float:
    """λ_max(MᵀM) by power iteration."""
    if matrix.size == 0:
        return 0.0
    v = make_rng(0).standard_normal(matrix.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(POWER_ITER_MAX):
        w = matrix.T @ (matrix @ v)
        new_estimate = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(new_estimate - estimate) <= POWER_ITER_TOL * abs(new_estimate):
            return new_estimate
        estimate = new_estimate
    return estimate


def regularized_fit(
    p: InterpolationProblem,
    lam: float,
    grid: Optional[KnotGrid] = None,
    opt: Optional[OptimizerConfig] = None,
) -> FitResult:
    """
    Proximal gradient (ISTA, or FISTA when opt.accelerate) on
        Σ_m (y_m − f(x_m))² + λ‖a‖₁
    over splines with knots on `grid`. The unpenalized (b1, b2) are profiled
    out: the smooth term sees only the component of the data orthogonal to
    affine functions, and (b1, b2) are recovered by least squares at the end.
    """
    if lam < 0:
        raise SplineError(f"lambda must be non-negative, got {lam}")
    _require_two_points(p)
    grid = grid or default_grid(p)
    opt = opt or OptimizerConfig()
    candidates = _interior_candidates(p, grid)

    affine = np.column_stack([np.ones(p.size), p.x])
    q, _ = np.linalg.qr(affine)
    relu = relu_design(p.x, candidates)
    proj_relu = relu - q @ (q.T @ relu)
    proj_y = p.y - q @ (q.T @ p.y)

    lipschitz = 2.0 * _largest_eigenvalue(proj_relu) * (1.0 + POWER_ITER_TOL)
    if candidates.size == 0 or lipschitz == 0.0:
        a = np.zeros(candidates.size)
        iterations, converged = 0, True
    else:
        a, iterations, converged = _proximal_gradient(proj_relu, proj_y, lam, 1.0 / lipschitz, opt)

    theta, *_ = np.linalg.lstsq(affine, p.y - relu @ a, rcond=None)
    spline = canonicalize(
        LinearSpline(b1=float(theta[0]), b2=float(theta[1]), knots=tuple(candidates), coeffs=tuple(a)),
        0.0,
    )
    residual = p.y - np.asarray(evaluate(spline, p.x))
    rss = float(residual @ residual)
    result = FitResult(
        spline=spline,
        objective=rss + lam * float(np.sum(np.abs(a))),
        rss=rss,
        iterations=iterations,
        converged=converged,
    )
    if not converged:
        message = f"proximal gradient did not converge in {opt.max_iter} iterations (λ={lam:g})"
        if opt.strict:
            raise ConvergenceError(message, best=result)
        print(f"⚠️  {message}; returning the last iterate", file=sys.stderr)
    return result


def _proximal_gradient(design, target, lam, step, opt: OptimizerConfig):
    if lam == 0:
        # unpenalized problem: start at its minimum-norm solution
        a, *_ = np.linalg.lstsq(design, target, rcond=None)
    else:
        a = np.zeros(design.shape[1])
    momentum_point, t = a.copy(), 1.0
    for iteration in range(1, opt.max_iter + 1):
        point = momentum_point if opt.accelerate else a
        grad = 2.0 * design.T @ (design @ point - target)
        a_next = prox_l1(point - step * grad, step * lam)
        change = np.linalg.norm(a_next - a)
        if opt.accelerate:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            momentum_point = a_next + ((t - 1.0) / t_next) * (a_next - a)
            t = t_next
        a = a_next
        if change <= opt.tol * max(1.0, np.linalg.norm(a)):
            return a, iteration, True
    return a, opt.max_iter, False


# ── Sobolev (H¹) problems ─────────────────────────────────────────────────────

def sobolev_interpolate(p: InterpolationProblem) -> LinearSpline:
    """The unique H¹-optimal interpolant: connect-the-dots with constant extrapolation."""
    return canonicalize(connect_the_dots(p, "constant"), 0.0)


def sobolev_fit(p: InterpolationProblem, lam: float) -> LinearSpline:
    """min Σ(y_m − f(x_m))² + λ∫|Df|²; the fitted values solve (I + λ·Lap)v = y."""
    if lam < 0:
        raise SplineError(f"lambda must be non-negative, got {lam}")
    if p.size == 1 or lam == 0:
        return sobolev_interpolate(p)
    w = 1.0 / np.diff(p.x)
    diag = np.ones(p.size)
    diag[:-1] += lam * w
    diag[1:] += lam * w
    banded = np.zeros((2, p.size))
    banded[0, 1:] = -lam * w
    banded[1] = diag
    values = solveh_banded(banded, p.y)
    return sobolev_interpolate(InterpolationProblem(p.x, values))
