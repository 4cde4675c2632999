# splines/native_space.py  ──  computable pieces of the BV² native space
#
# With the boundary functionals φ(f) = (f(0), f(1) − f(0)), every CPWL f splits as
#     f = G_φ{D²f} + f(0) + (f(1) − f(0))·x
# where G_φ integrates a measure against the kernel g_φ and lands on the
# functions with φ(f) = 0. All results are exact LinearSplines.

import numpy as np

from shared_types import DiracMeasure, LinearSpline
from splines.core import canonicalize, evaluate, tv2


def _relu(v):
    return np.maximum(v, 0.0)


def g_phi(x, y):
    """g_φ(x, y) = (x − y)_+ − (1 − x)(−y)_+ − x(1 − y)_+ ; vectorized."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = _relu(x - y) - (1.0 - x) * _relu(-y) - x * _relu(1.0 - y)
    return float(out) if out.ndim == 0 else out


def apply_G_phi(w: DiracMeasure) -> LinearSpline:
    """
    x ↦ Σ_k a_k·g_φ(x, τ_k) as a spline. In x each kernel term is the ReLU
    at τ_k plus an affine correction: −(−τ)_+ + x·(−τ)_+ − x·(1 − τ)_+.
    """
    b1 = b2 = 0.0
    for tau, a in w.atoms:
        left = max(-tau, 0.0)
        right = max(1.0 - tau, 0.0)
        b1 -= a * left
        b2 += a * (left - right)
    return LinearSpline(
        b1=b1,
        b2=b2,
        knots=tuple(t for t, _ in w.atoms),
        coeffs=tuple(a for _, a in w.atoms),
    )


def second_derivative(s: LinearSpline) -> DiracMeasure:
    """D²f = Σ a_k δ(· − τ_k) of the canonical form."""
    c = canonicalize(s, 0.0)
    return DiracMeasure(atoms=tuple(zip(c.knots, c.coeffs)))


def boundary_functionals(s: LinearSpline) -> tuple[float, float]:
    f0 = evaluate(s, 0.0)
    return f0, evaluate(s, 1.0) - f0


def bv2_norm(s: LinearSpline) -> float:
    """‖D²f‖ + sqrt(f(0)² + (f(1) − f(0))²)."""
    return tv2(s) + float(np.hypot(*boundary_functionals(s)))


def decompose(s: LinearSpline) -> tuple[LinearSpline, LinearSpline]:
    """(G_φ{D²s}, affine part) with s equal to their sum."""
    f0, slope = boundary_functionals(s)
    return apply_G_phi(second_derivative(s)), LinearSpline(b1=f0, b2=slope)


def sampling_bound(s: LinearSpline, x) -> float:
    """(1 + 2|x|)·‖s‖_BV², an upper bound on |s(x)|."""
    return (1.0 + 2.0 * np.abs(np.asarray(x, dtype=float))) * bv2_norm(s)


def affine_residual(s: LinearSpline, lo: float = -10.0, hi: float = 10.0, n: int = 1001) -> float:
    """Max deviation of s from its least-squares line on n uniform samples of [lo, hi]."""
    xs = np.linspace(lo, hi, n)
    ys = np.asarray(evaluate(s, xs))
    design = np.column_stack([np.ones(n), xs])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(np.max(np.abs(ys - design @ coef)))
