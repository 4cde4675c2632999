# network/model.py  ──  deep spline networks: forward, backward, conversions
#
# Layer l computes  z = U_l·y_{l-1}  then  y_n = σ_{n,l}(z_n)  with one
# LinearSpline per neuron. Biases live in the activations (knot positions
# and b1), so a layer has no separate bias vector.

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config import CPWL_AFFINE_TOL, CPWL_SECOND_DIFF_TOL, INIT_PRELU_SLOPE
from errors import ShapeError, SplineError
from shared_types import DeepSplineNet, ForwardCache, Gradients, Layer, LinearSpline
from splines.core import (
    canonicalize,
    evaluate,
    evaluate_derivative,
    identity,
    rescale_input,
    shift_input,
)

_UNIT_ROW_SLACK = 4 * np.finfo(float).eps


# ── Forward / backward ────────────────────────────────────────────────────────

def forward(net: DeepSplineNet, x) -> tuple[np.ndarray, ForwardCache]:
    """
    Evaluate the network on one input vector (shape N_0) or a batch
    (shape M × N_0). The cache always holds 2-D arrays, one row per sample.
    """
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 1
    h = xa[None, :] if single else xa
    if h.ndim != 2 or h.shape[1] != net.nodes[0]:
        raise ShapeError(f"expected inputs of length {net.nodes[0]}, got shape {xa.shape}")

    cache = ForwardCache()
    for layer in net.layers:
        z = h @ layer.weights.T
        y = np.empty_like(z)
        for j, act in enumerate(layer.activations):
            y[:, j] = evaluate(act, z[:, j])
        cache.inputs.append(h)
        cache.pre.append(z)
        cache.post.append(y)
        h = y
    return (h[0] if single else h), cache


def backward(
    net: DeepSplineNet,
    cache: ForwardCache,
    upstream_gradient,
    knot_learning: bool = False,
) -> Gradients:
    """
    Reverse-mode gradients of a scalar loss, given ∂loss/∂output per sample.
    Sums over the batch. At a knot the right derivative is used, matching
    evaluate_derivative.
    """
    if len(cache.pre) != len(net.layers):
        raise ShapeError("cache does not come from this network")
    g = np.asarray(upstream_gradient, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.post[-1].shape:
        raise ShapeError(f"upstream gradient shape {g.shape} != output shape {cache.post[-1].shape}")

    weights, b1, b2, coeffs = [], [], [], []
    knots = [] if knot_learning else None
    for layer, h, z in zip(reversed(net.layers), reversed(cache.inputs), reversed(cache.pre)):
        if z.shape[1] != layer.width or h.shape[1] != layer.fan_in:
            raise ShapeError("stale cache: layer shapes changed since forward")
        g_z = np.empty_like(z)
        layer_b1 = np.empty(layer.width)
        layer_b2 = np.empty(layer.width)
        layer_a, layer_tau = [], []
        for j, act in enumerate(layer.activations):
            gy, zj = g[:, j], z[:, j]
            layer_b1[j] = gy.sum()
            layer_b2[j] = gy @ zj
            tau = np.asarray(act.knots, dtype=float)
            a = np.asarray(act.coeffs, dtype=float)
            layer_a.append(gy @ np.maximum(zj[:, None] - tau, 0.0))
            if knot_learning:
                layer_tau.append(-a * (gy @ (zj[:, None] >= tau).astype(float)))
            g_z[:, j] = gy * evaluate_derivative(act, zj)
        weights.append(g_z.T @ h)
        b1.append(layer_b1)
        b2.append(layer_b2)
        coeffs.append(layer_a)
        if knot_learning:
            knots.append(layer_tau)
        g = g_z @ layer.weights

    return Gradients(
        weights=weights[::-1],
        b1=b1[::-1],
        b2=b2[::-1],
        coeffs=coeffs[::-1],
        knots=knots[::-1] if knot_learning else None,
    )


# ── Classic ReLU networks ─────────────────────────────────────────────────────

def relu_network_forward(weights: Sequence, thresholds: Sequence, x, relu_output: bool = False) -> np.ndarray:
    """Classic net: y ← relu(W·y − z) per hidden layer; the last layer is affine."""
    h = np.atleast_2d(np.asarray(x, dtype=float))
    for i, (w, z) in enumerate(zip(weights, thresholds)):
        pre = h @ np.asarray(w, dtype=float).T - np.asarray(z, dtype=float)
        last = i == len(weights) - 1
        h = pre if (last and not relu_output) else np.maximum(pre, 0.0)
    return h


def from_relu_network(weights: Sequence, thresholds: Sequence) -> DeepSplineNet:
    """
    Exact deep-spline form of a ReLU net, using
        (wᵀx − z)_+ = ‖w‖·(uᵀx − z/‖w‖)_+ ,  u = w/‖w‖.
    The affine output layer becomes  −z + ‖w‖·t  on the normalized row.
    """
    if len(weights) != len(thresholds) or not weights:
        raise ShapeError("need one threshold vector per weight matrix")
    layers = []
    for i, (w, z) in enumerate(zip(weights, thresholds)):
        w = np.atleast_2d(np.asarray(w, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if z.shape != (w.shape[0],):
            raise ShapeError(f"layer {i}: {w.shape[0]} rows but {z.size} thresholds")
        norms = np.linalg.norm(w, axis=1)
        if np.any(norms == 0):
            raise SplineError(f"layer {i} has a zero row; it cannot be normalized")
        last = i == len(weights) - 1
        if last:
            acts = [LinearSpline(b1=-zn, b2=nn) for zn, nn in zip(z, norms)]
        else:
            acts = [LinearSpline(knots=(zn / nn,), coeffs=(nn,)) for zn, nn in zip(z, norms)]
        layers.append(Layer(weights=w / norms[:, None], activations=tuple(acts), normalized=True))
    return DeepSplineNet(layers)


# ── Structural transformations ────────────────────────────────────────────────

def renormalize(net: DeepSplineNet, only_flagged: bool = False) -> DeepSplineNet:
    """
    Scale every row to unit norm and push the scale into that neuron's
    activation. With `only_flagged`, layers marked unnormalized are left as is.
    """
    layers = []
    for i, layer in enumerate(net.layers):
        if only_flagged and not layer.normalized:
            layers.append(layer)
            continue
        norms = np.linalg.norm(layer.weights, axis=1)
        if np.any(norms == 0):
            raise SplineError(f"layer {i} has a zero row; it cannot be normalized")
        w = layer.weights.copy()
        acts = list(layer.activations)
        for j, c in enumerate(norms):
            if abs(c - 1.0) <= _UNIT_ROW_SLACK:
                continue    # already unit: keep bit-identical
            w[j] /= c
            acts[j] = rescale_input(acts[j], float(c))
        layers.append(Layer(weights=w, activations=tuple(acts), normalized=True))
    return DeepSplineNet(layers)


def with_activations(net: DeepSplineNet, activations: Sequence[Sequence[LinearSpline]]) -> DeepSplineNet:
    return DeepSplineNet(
        [
            Layer(weights=layer.weights.copy(), activations=tuple(acts), normalized=layer.normalized)
            for layer, acts in zip(net.layers, activations)
        ]
    )


def count_knots(net: DeepSplineNet) -> list[list[int]]:
    return [[canonicalize(act, 0.0).num_knots for act in layer.activations] for layer in net.layers]


def collapse_affine_layers(net: DeepSplineNet) -> DeepSplineNet:
    """
    Fold every layer whose activations are all affine into the next layer:
        W_{l+1}·(B1 + B2 ⊙ W_l·y) = (W_{l+1}·diag(B2)·W_l)·y + W_{l+1}·B1 .
    The constant is pushed into the next activations by an input shift.
    """
    layers = list(net.layers)
    i = 0
    while i < len(layers) - 1:
        acts = [canonicalize(a, 0.0) for a in layers[i].activations]
        if any(a.num_knots for a in acts):
            i += 1
            continue
        nxt = layers[i + 1]
        b1 = np.array([a.b1 for a in acts])
        b2 = np.array([a.b2 for a in acts])
        merged_w = (nxt.weights * b2[None, :]) @ layers[i].weights
        offsets = nxt.weights @ b1
        merged_acts = tuple(shift_input(a, float(c)) for a, c in zip(nxt.activations, offsets))
        merged = Layer(weights=merged_w, activations=merged_acts, normalized=False)
        if nxt.normalized and np.all(np.linalg.norm(merged_w, axis=1) > 0):
            merged = renormalize(DeepSplineNet([merged])).layers[0]
        layers[i : i + 2] = [merged]
    return DeepSplineNet(layers)


# ── Initialization ────────────────────────────────────────────────────────────

def init_network(
    arch: Sequence[int],
    knots: np.ndarray,
    rng: np.random.Generator,
    normalized: bool = True,
    prelu_slope: float = INIT_PRELU_SLOPE,
) -> DeepSplineNet:
    """
    Rows uniform in ±1/√fan-in (then unit-normalized when `normalized`).
    Hidden activations are PReLU(prelu_slope) written on the knot grid, i.e.
    every grid coefficient is zero except the one at 0. Output activations
    are the identity with no knots.
    """
    if len(arch) < 2 or any(n < 1 for n in arch):
        raise ShapeError(f"architecture needs at least two positive sizes, got {list(arch)}")
    grid = np.union1d(np.asarray(knots, dtype=float), [0.0])
    zero_index = int(np.searchsorted(grid, 0.0))
    hidden_coeffs = np.zeros(grid.size)
    hidden_coeffs[zero_index] = 1.0 - prelu_slope
    hidden = LinearSpline(b1=0.0, b2=prelu_slope, knots=tuple(grid), coeffs=tuple(hidden_coeffs))

    layers = []
    for i, (fan_in, width) in enumerate(zip(arch[:-1], arch[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(width, fan_in))
        if normalized:
            norms = np.linalg.norm(w, axis=1)
            w[norms == 0, 0] = 1.0
            w /= np.linalg.norm(w, axis=1)[:, None]
        act = identity() if i == len(arch) - 2 else hidden
        layers.append(Layer(weights=w, activations=(act,) * width, normalized=normalized))
    return DeepSplineNet(layers)


# ── CPWL verification ─────────────────────────────────────────────────────────

@dataclass
class CpwlReport:
    breakpoints: list[float]
    max_deviation: float
    scale: float
    passed: bool


def cpwl_check(net: DeepSplineNet, interval: tuple[float, float], n_samples: int = 4001) -> CpwlReport:
    """
    Sample a scalar-input network densely, locate breakpoints where second
    differences are non-negligible, and confirm the map is affine on every
    stretch between them.
    """
    if net.nodes[0] != 1:
        raise ShapeError("cpwl_check needs a scalar-input network")
    lo, hi = interval
    xs = np.linspace(lo, hi, n_samples)
    ys, _ = forward(net, xs[:, None])
    scale = max(1.0, float(np.max(np.abs(ys))))

    d2 = ys[2:] - 2.0 * ys[1:-1] + ys[:-2]
    centers = np.nonzero(np.any(np.abs(d2) > CPWL_SECOND_DIFF_TOL * scale, axis=1))[0] + 1

    clusters: list[list[int]] = []
    for c in centers:
        if clusters and c - clusters[-1][-1] <= 1:
            clusters[-1].append(int(c))
        else:
            clusters.append([int(c)])

    breakpoints = [_locate_kink(xs, ys, cl[0], cl[-1]) for cl in clusters]

    edges = [0] + [v for cl in clusters for v in (cl[0] - 1, cl[-1] + 1)] + [n_samples - 1]
    max_dev = 0.0
    for start, stop in zip(edges[::2], edges[1::2]):
        if stop - start < 2:
            continue
        seg_x, seg_y = xs[start : stop + 1], ys[start : stop + 1]
        t = ((seg_x - seg_x[0]) / (seg_x[-1] - seg_x[0]))[:, None]
        line = seg_y[0] + t * (seg_y[-1] - seg_y[0])
        max_dev = max(max_dev, float(np.max(np.abs(seg_y - line))))

    return CpwlReport(
        breakpoints=breakpoints,
        max_deviation=max_dev,
        scale=scale,
        passed=max_dev <= CPWL_AFFINE_TOL * scale,
    )


def _locate_kink(xs, ys, first, last) -> float:
    """Intersect the lines through the two samples on each side of a kink cluster."""
    left, right = first - 1, last + 1
    if left < 1 or right > len(xs) - 2:
        return float(0.5 * (xs[left] + xs[right]))
    col = int(np.argmax(np.abs(ys[right + 1] - ys[right] - (ys[left] - ys[left - 1]))))
    s_left = (ys[left, col] - ys[left - 1, col]) / (xs[left] - xs[left - 1])
    s_right = (ys[right + 1, col] - ys[right, col]) / (xs[right + 1] - xs[right])
    if s_left == s_right:
        return float(0.5 * (xs[left] + xs[right]))
    # ys[left] + s_left·(t − xs[left]) = ys[right] + s_right·(t − xs[right])
    t = (ys[right, col] - ys[left, col] + s_left * xs[left] - s_right * xs[right]) / (s_left - s_right)
    return float(t)
