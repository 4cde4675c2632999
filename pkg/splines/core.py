# splines/core.py  ──  evaluation, calculus and algebra of 1-D linear splines
#
# A LinearSpline is  f(x) = b1 + b2·x + Σ_k a_k·(x − τ_k)_+ .
# Everything here is pure: operations build new splines, never mutate.

import numpy as np

from config import KNOT_MERGE_TOL
from errors import SplineError
from shared_types import LinearSpline


def _arrays(s: LinearSpline) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(s.knots, dtype=float), np.asarray(s.coeffs, dtype=float)


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


# ── Evaluation ────────────────────────────────────────────────────────────────

def evaluate(s: LinearSpline, x):
    """f(x); `x` may be a float or an array of any shape."""
    xa = np.asarray(x, dtype=float)
    out = s.b1 + s.b2 * xa
    if s.knots:
        knots, coeffs = _arrays(s)
        out = out + np.maximum(xa[..., None] - knots, 0.0) @ coeffs
    return _scalar_or_array(out)


def evaluate_derivative(s: LinearSpline, x):
    """f'(x), right-continuous: a knot at τ counts for every x ≥ τ."""
    xa = np.asarray(x, dtype=float)
    out = s.b2 + np.zeros_like(xa)
    if s.knots:
        knots, coeffs = _arrays(s)
        out = out + (xa[..., None] >= knots).astype(float) @ coeffs
    return _scalar_or_array(out)


def lipschitz_constant(s: LinearSpline) -> float:
    return abs(s.b2) + float(np.sum(np.abs(s.coeffs)))


# ── Canonical form and TV² ────────────────────────────────────────────────────

def _merged_location(group: list[tuple[float, float]]) -> float:
    first = group[0][0]
    if all(t == first for t, _ in group):
        return float(first)
    weights = np.abs([a for _, a in group])
    locations = np.array([t for t, _ in group])
    if weights.sum() == 0:
        return float(locations.mean())
    return float(np.clip(weights @ locations / weights.sum(), locations[0], locations[-1]))


def canonicalize(s: LinearSpline, tol: float = KNOT_MERGE_TOL) -> LinearSpline:
    """
    Sort knots, merge knots closer than `tol` (coefficients summed, location
    the |a|-weighted mean of the group) and drop coefficients with |a| ≤ tol.
    With tol=0 only exact duplicates merge and only exact zeros are dropped.
    """
    if tol < 0:
        raise SplineError(f"tolerance must be non-negative, got {tol}")
    if not s.knots:
        return s
    knots, coeffs = _arrays(s)
    order = np.argsort(knots, kind="stable")
    knots, coeffs = knots[order], coeffs[order]

    groups: list[list[tuple[float, float]]] = []
    for t, a in zip(knots, coeffs):
        if groups and t - groups[-1][0][0] <= tol:
            groups[-1].append((t, a))
        else:
            groups.append([(t, a)])

    kept = [(_merged_location(g), float(sum(a for _, a in g))) for g in groups]
    kept = [(t, a) for t, a in kept if abs(a) > tol]
    if tol == 0:
        kept = [(t, a) for t, a in kept if a != 0.0]
    return LinearSpline(
        b1=s.b1,
        b2=s.b2,
        knots=tuple(t for t, _ in kept),
        coeffs=tuple(a for _, a in kept),
    )


def tv2(s: LinearSpline) -> float:
    """Second-order total variation ‖D²f‖ = Σ|a_k| of the canonical form."""
    return float(np.sum(np.abs(canonicalize(s, 0.0).coeffs)))


# ── Input transformations ─────────────────────────────────────────────────────

def rescale_input(s: LinearSpline, c: float) -> LinearSpline:
    """s′(t) = s(c·t) for c > 0."""
    if not (np.isfinite(c) and c > 0):
        raise SplineError(f"rescale factor must be positive and finite, got {c}")
    return LinearSpline(
        b1=s.b1,
        b2=c * s.b2,
        knots=tuple(t / c for t in s.knots),
        coeffs=tuple(c * a for a in s.coeffs),
    )


def shift_input(s: LinearSpline, c: float) -> LinearSpline:
    """s′(t) = s(t + c)."""
    return LinearSpline(
        b1=s.b1 + s.b2 * c,
        b2=s.b2,
        knots=tuple(t - c for t in s.knots),
        coeffs=s.coeffs,
    )


def subtract(s: LinearSpline, t: LinearSpline) -> LinearSpline:
    """s − t, knots concatenated (canonicalize to merge)."""
    return LinearSpline(
        b1=s.b1 - t.b1,
        b2=s.b2 - t.b2,
        knots=s.knots + t.knots,
        coeffs=s.coeffs + tuple(-a for a in t.coeffs),
    )


# ── Constructors ──────────────────────────────────────────────────────────────

def identity() -> LinearSpline:
    return LinearSpline(b1=0.0, b2=1.0)


def from_relu() -> LinearSpline:
    return LinearSpline(b1=0.0, b2=0.0, knots=(0.0,), coeffs=(1.0,))


def from_prelu(negative_slope: float) -> LinearSpline:
    """PReLU: x for x ≥ 0, negative_slope·x otherwise."""
    return LinearSpline(b1=0.0, b2=negative_slope, knots=(0.0,), coeffs=(1.0 - negative_slope,))


def from_maxout_pair(slope1: float, offset1: float, slope2: float, offset2: float) -> LinearSpline:
    """
    max(slope1·x + offset1, slope2·x + offset2) as a one-knot spline.

    The lines are reordered so the shallower one is the left arm; the knot
    sits where they cross. Equal slopes give the dominating line (degenerate).
    """
    if slope1 > slope2:
        slope1, offset1, slope2, offset2 = slope2, offset2, slope1, offset1
    if slope1 == slope2:
        return LinearSpline(b1=max(offset1, offset2), b2=slope1)
    jump = slope2 - slope1
    return LinearSpline(
        b1=offset1,
        b2=slope1,
        knots=((offset1 - offset2) / jump,),
        coeffs=(jump,),
    )


# ── Plot support ──────────────────────────────────────────────────────────────

def breakpoint_table(s: LinearSpline, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """(x, f(x)) at lo, every knot strictly inside (lo, hi), and hi."""
    inner = [t for t in canonicalize(s, 0.0).knots if lo < t < hi]
    xs = np.array([lo, *inner, hi], dtype=float)
    return xs, np.asarray(evaluate(s, xs))
