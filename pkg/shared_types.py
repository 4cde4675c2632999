# shared_types.py  ──  the value types every subsystem shares
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from config import FEASIBILITY_TOL
from errors import DataFormatError, InfeasibleProblemError, ShapeError, SplineError


# ── Splines and measures ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class LinearSpline:
    """f(x) = b1 + b2·x + Σ_k coeffs[k]·max(x − knots[k], 0)."""

    b1: float = 0.0
    b2: float = 0.0
    knots: tuple[float, ...] = ()
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        knots = tuple(float(t) for t in self.knots)
        coeffs = tuple(float(a) for a in self.coeffs)
        if len(knots) != len(coeffs):
            raise SplineError(f"{len(knots)} knots but {len(coeffs)} coefficients")
        if not np.all(np.isfinite([self.b1, self.b2, *knots, *coeffs])):
            raise SplineError("spline parameters must be finite")
        object.__setattr__(self, "b1", float(self.b1))
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def num_knots(self) -> int:
        return len(self.knots)

    @property
    def is_affine(self) -> bool:
        return all(a == 0.0 for a in self.coeffs)


@dataclass(frozen=True)
class DiracMeasure:
    """Finite sum of weighted Diracs Σ_k a_k·δ(· − τ_k)."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple((float(t), float(a)) for t, a in self.atoms))

    @property
    def locations(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a for _, a in self.atoms], dtype=float)

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))


# ── 1-D problems ──────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class InterpolationProblem:
    """Distinct, sorted abscissae x with values y. Build with `from_points`."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ShapeError("x and y must be 1-D arrays of equal length")
        if x.size == 0:
            raise InfeasibleProblemError("interpolation problem needs at least one point")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InfeasibleProblemError("data points must be finite")
        if np.any(np.diff(x) <= 0):
            raise InfeasibleProblemError("abscissae must be strictly increasing; use from_points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_points(cls, points: Sequence[tuple[float, float]], tol: float = FEASIBILITY_TOL):
        """Sort, merge repeated abscissae, reject contradicting duplicates."""
        if len(points) == 0:
            raise InfeasibleProblemError("interpolation problem needs at least one point")
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        order = np.argsort(arr[:, 0], kind="stable")
        arr = arr[order]
        xs, ys = [arr[0, 0]], [arr[0, 1]]
        for xv, yv in arr[1:]:
            if xv == xs[-1]:
                if abs(yv - ys[-1]) > tol:
                    raise InfeasibleProblemError(
                        f"x={xv} appears with different values {ys[-1]} and {yv}"
                    )
                continue
            xs.append(xv)
            ys.append(yv)
        return cls(np.array(xs), np.array(ys))

    @property
    def size(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class KnotGrid:
    """Uniform candidate knots on [lo, hi]; data abscissae are added when snapping."""

    lo: float
    hi: float
    count: int
    snap_data_points: bool = True

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InfeasibleProblemError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.count < 2:
            raise InfeasibleProblemError("grid needs at least two points")

    def locations(self, data_x: Optional[np.ndarray] = None) -> np.ndarray:
        grid = np.linspace(self.lo, self.hi, self.count)
        if self.snap_data_points and data_x is not None:
            grid = np.union1d(grid, np.asarray(data_x, dtype=float))
        return grid


# ── Networks ──────────────────────────────────────────────────────────────────

@dataclass(eq=False)
class Layer:
    weights: np.ndarray                     # N_l × N_{l-1}
    activations: tuple[LinearSpline, ...]   # one per row
    normalized: bool = True

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.activations = tuple(self.activations)
        if len(self.activations) != self.weights.shape[0]:
            raise ShapeError(
                f"{self.weights.shape[0]} rows but {len(self.activations)} activations"
            )

    @property
    def fan_in(self) -> int:
        return int(self.weights.shape[1])

    @property
    def width(self) -> int:
        return int(self.weights.shape[0])


@dataclass(eq=False)
class DeepSplineNet:
    layers: list[Layer]

    def __post_init__(self):
        self.layers = list(self.layers)
        if not self.layers:
            raise ShapeError("a network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.fan_in != prev.width:
                raise ShapeError(
                    f"layer expects {nxt.fan_in} inputs but previous layer has {prev.width} outputs"
                )

    @property
    def nodes(self) -> tuple[int, ...]:
        """Node descriptor (N_0, …, N_L)."""
        return (self.layers[0].fan_in, *(layer.width for layer in self.layers))


@dataclass(eq=False)
class ForwardCache:
    """Per layer: the layer input ỹ_{l-1}, pre-activations z and outputs y (rows = samples)."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)


@dataclass(eq=False)
class Gradients:
    weights: list[np.ndarray]
    b1: list[np.ndarray]
    b2: list[np.ndarray]
    coeffs: list[list[np.ndarray]]
    knots: Optional[list[list[np.ndarray]]] = None


# ── Data ──────────────────────────────────────────────────────────────────────

@dataclass(eq=False)
class Dataset:
    inputs: np.ndarray     # M × N_0
    targets: np.ndarray    # M × N_L
    names: Optional[list[str]] = None

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.inputs.ndim == 1:
            self.inputs = self.inputs[:, None]
        if self.targets.ndim == 1:
            self.targets = self.targets[:, None]
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ShapeError(
                f"{self.inputs.shape[0]} inputs but {self.targets.shape[0]} targets"
            )
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise DataFormatError("dataset values must be finite")

    def __len__(self) -> int:
        return int(self.inputs.shape[0])
