# network/training.py  ──  proximal training of deep spline networks
#
# Objective:  Σ_m E(y_m, f(x_m)) + μ·Σ_ℓ ‖U_ℓ‖²_F + λ·Σ_{n,ℓ} ‖a_{n,ℓ}‖₁
#
# Each step: gradient of the data term on a shuffled minibatch (rescaled to
# the full dataset), soft-threshold on every spline coefficient a, closed-form
# shrink for μ on unnormalized layers, then periodic renormalization. Each
# epoch ends by pruning knots that sit outside the data's pre-activation range.

import sys
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import (
    BACKTRACK_MAX,
    BACKTRACK_SHRINK,
    DEFAULT_SEED,
    GRADCHECK_KNOT_MARGIN,
    GRADCHECK_PASS_TOL,
    GRADCHECK_REL_FLOOR,
    TRAIN_BATCH_SIZE,
    TRAIN_EPOCHS,
    TRAIN_GRID_COUNT,
    TRAIN_GRID_HI,
    TRAIN_GRID_LO,
    TRAIN_RENORM_EVERY,
    TRAIN_SPARSIFY_TOL,
    TRAIN_STEP_SIZE,
)
from errors import ShapeError, TrainingDivergedError
from network.losses import LossFn
from network.model import backward, count_knots, forward, renormalize, with_activations
from shared_types import Dataset, DeepSplineNet, Gradients, Layer, LinearSpline
from splines.core import canonicalize, tv2
from utils.prox import prox_l1
from utils.rng import make_rng


# ── Configuration ─────────────────────────────────────────────────────────────

class GridSpec(BaseModel):
    lo: float = TRAIN_GRID_LO
    hi: float = TRAIN_GRID_HI
    count: int = Field(TRAIN_GRID_COUNT, ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        return self

    def locations(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


class TrainConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(0.0, ge=0, alias="lambda")
    mu: float = Field(0.0, ge=0)
    step_size: float = Field(TRAIN_STEP_SIZE, gt=0)
    epochs: int = Field(TRAIN_EPOCHS, ge=0)
    batch_size: int = Field(TRAIN_BATCH_SIZE, ge=1)
    seed: int = DEFAULT_SEED
    grid: GridSpec = Field(default_factory=GridSpec)
    sparsify_tol: float = Field(TRAIN_SPARSIFY_TOL, ge=0)
    renorm_every: int = Field(TRAIN_RENORM_EVERY, ge=1)
    knot_learning: bool = False
    loss: Literal["squared", "logistic"] = "squared"
    momentum: float = Field(0.0, ge=0, lt=1)
    line_search: bool = False
    prune_outside_data: bool = True


# ── Parameter layout ──────────────────────────────────────────────────────────

ParamKind = Literal["weight", "b1", "b2", "a", "tau"]


@dataclass(frozen=True)
class ParamBlock:
    kind: ParamKind
    layer: int
    neuron: Optional[int]
    start: int
    stop: int


class ParameterLayout:
    """
    Flat view of every trainable parameter of a network, grouped by class.
    Knot positions are included only when knot learning is on; otherwise
    they are read from the template network on unflatten.
    """

    def __init__(self, net: DeepSplineNet, knot_learning: bool = False):
        self.knot_learning = knot_learning
        self.blocks: list[ParamBlock] = []
        offset = 0

        def add(kind, layer, neuron, length):
            nonlocal offset
            self.blocks.append(ParamBlock(kind, layer, neuron, offset, offset + length))
            offset += length

        for l, layer in enumerate(net.layers):
            add("weight", l, None, layer.weights.size)
            for j, act in enumerate(layer.activations):
                add("b1", l, j, 1)
                add("b2", l, j, 1)
                add("a", l, j, act.num_knots)
                if knot_learning:
                    add("tau", l, j, act.num_knots)
        self.size = offset

    def mask(self, kind: ParamKind, layers: Optional[set[int]] = None) -> np.ndarray:
        out = np.zeros(self.size, dtype=bool)
        for b in self.blocks:
            if b.kind == kind and (layers is None or b.layer in layers):
                out[b.start : b.stop] = True
        return out

    def kinds(self) -> np.ndarray:
        out = np.empty(self.size, dtype=object)
        for b in self.blocks:
            out[b.start : b.stop] = b.kind
        return out

    def flatten(self, net: DeepSplineNet) -> np.ndarray:
        theta = np.empty(self.size)
        for b in self.blocks:
            layer = net.layers[b.layer]
            if b.kind == "weight":
                theta[b.start : b.stop] = layer.weights.ravel()
                continue
            act = layer.activations[b.neuron]
            theta[b.start : b.stop] = {
                "b1": (act.b1,),
                "b2": (act.b2,),
                "a": act.coeffs,
                "tau": act.knots,
            }[b.kind]
        return theta

    def flatten_gradients(self, grads: Gradients) -> np.ndarray:
        flat = np.empty(self.size)
        for b in self.blocks:
            l, j = b.layer, b.neuron
            if b.kind == "weight":
                value = grads.weights[l].ravel()
            elif b.kind == "b1":
                value = grads.b1[l][j]
            elif b.kind == "b2":
                value = grads.b2[l][j]
            elif b.kind == "a":
                value = grads.coeffs[l][j]
            else:
                value = grads.knots[l][j]
            flat[b.start : b.stop] = value
        return flat

    def unflatten(self, template: DeepSplineNet, theta: np.ndarray) -> DeepSplineNet:
        weights = [layer.weights.copy() for layer in template.layers]
        fields = [
            [{"b1": a.b1, "b2": a.b2, "knots": a.knots, "coeffs": a.coeffs} for a in layer.activations]
            for layer in template.layers
        ]
        for b in self.blocks:
            seg = theta[b.start : b.stop]
            if b.kind == "weight":
                weights[b.layer] = seg.reshape(weights[b.layer].shape).copy()
            elif b.kind in ("b1", "b2"):
                fields[b.layer][b.neuron][b.kind] = float(seg[0])
            elif b.kind == "a":
                fields[b.layer][b.neuron]["coeffs"] = tuple(seg)
            else:
                fields[b.layer][b.neuron]["knots"] = tuple(seg)
        return DeepSplineNet(
            [
                Layer(
                    weights=w,
                    activations=tuple(LinearSpline(**f) for f in neurons),
                    normalized=layer.normalized,
                )
                for w, neurons, layer in zip(weights, fields, template.layers)
            ]
        )


# ── Objective ─────────────────────────────────────────────────────────────────

@dataclass
class ObjectiveParts:
    total: float
    data: float
    weight_penalty: float
    tv2_penalty: float


@dataclass
class EpochRecord:
    epoch: int
    data: float
    weight_penalty: float
    tv2_penalty: float
    total: float
    knot_count: int


def _check_shapes(net: DeepSplineNet, dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise ShapeError("dataset is empty")
    if dataset.inputs.shape[1] != net.nodes[0] or dataset.targets.shape[1] != net.nodes[-1]:
        raise ShapeError(
            f"dataset has {dataset.inputs.shape[1]} inputs / {dataset.targets.shape[1]} targets, "
            f"network expects {net.nodes[0]} / {net.nodes[-1]}"
        )


def objective(net: DeepSplineNet, dataset: Dataset, cfg: TrainConfig) -> ObjectiveParts:
    _check_shapes(net, dataset)
    outputs, _ = forward(net, dataset.inputs)
    data = LossFn(cfg.loss).value(dataset.targets, outputs)
    weight_penalty = float(sum(np.sum(layer.weights**2) for layer in net.layers))
    tv2_penalty = float(sum(tv2(act) for layer in net.layers for act in layer.activations))
    return ObjectiveParts(
        total=data + cfg.mu * weight_penalty + cfg.lam * tv2_penalty,
        data=data,
        weight_penalty=weight_penalty,
        tv2_penalty=tv2_penalty,
    )


def _record(epoch: int, net: DeepSplineNet, dataset: Dataset, cfg: TrainConfig) -> EpochRecord:
    parts = objective(net, dataset, cfg)
    if not np.isfinite(parts.total):
        raise TrainingDivergedError(
            f"objective became non-finite at epoch {epoch} "
            f"(data={parts.data}, tv2={parts.tv2_penalty}); lower the step size"
        )
    return EpochRecord(
        epoch=epoch,
        data=parts.data,
        weight_penalty=parts.weight_penalty,
        tv2_penalty=parts.tv2_penalty,
        total=parts.total,
        knot_count=sum(map(sum, count_knots(net))),
    )


# ── Training loop ─────────────────────────────────────────────────────────────

def _tangent_projection(layout: ParameterLayout, net: DeepSplineNet, grad: np.ndarray) -> np.ndarray:
    """Remove the radial component of each normalized row's gradient."""
    grad = grad.copy()
    for b in layout.blocks:
        if b.kind != "weight" or not net.layers[b.layer].normalized:
            continue
        u = net.layers[b.layer].weights
        g = grad[b.start : b.stop].reshape(u.shape)
        g = g - np.sum(g * u, axis=1)[:, None] * u
        grad[b.start : b.stop] = g.ravel()
    return grad


def _backtracking_step(theta, grad, smooth, step, prox):
    """Shrink the step until the smooth part satisfies the quadratic upper bound."""
    f0 = smooth(theta)
    candidate = theta
    for _ in range(BACKTRACK_MAX):
        candidate = prox(theta - step * grad, step)
        d = candidate - theta
        if np.all(np.isfinite(candidate)) and smooth(candidate) <= f0 + grad @ d + (d @ d) / (2.0 * step):
            return candidate, step
        step *= BACKTRACK_SHRINK
    return candidate, step


def _renormalize_parameters(
    layout: ParameterLayout, template: DeepSplineNet, theta: np.ndarray
) -> tuple[DeepSplineNet, np.ndarray]:
    """
    Renormalize the net behind `theta`. Rescaled knots are not part of the
    parameter vector unless knots are learned, so the renormalized net
    becomes the template that later unflattens read them from.
    """
    renormalized = renormalize(layout.unflatten(template, theta), only_flagged=True)
    return renormalized, layout.flatten(renormalized)


def _reparametrize(theta, previous, moved):
    """Carry the momentum term across an output-preserving change of parameters."""
    return moved, previous + (moved - theta)


def train(
    net: DeepSplineNet,
    dataset: Dataset,
    cfg: TrainConfig,
    verbose: bool = False,
) -> tuple[DeepSplineNet, list[EpochRecord]]:
    _check_shapes(net, dataset)
    loss = LossFn(cfg.loss)
    any_normalized = any(layer.normalized for layer in net.layers)
    unnormalized = {l for l, layer in enumerate(net.layers) if not layer.normalized}

    if cfg.mu > 0 and any_normalized:
        print(
            "⚠️  mu has no effect on normalized layers (their Frobenius norm is fixed)",
            file=sys.stderr,
        )
    if any_normalized:
        net = renormalize(net, only_flagged=True)

    layout = ParameterLayout(net, cfg.knot_learning)
    a_mask = layout.mask("a")
    shrink_mask = layout.mask("weight", unnormalized)

    def prox(theta_half, step):
        out = theta_half.copy()
        out[a_mask] = prox_l1(out[a_mask], step * cfg.lam)
        if cfg.mu > 0:
            out[shrink_mask] /= 1.0 + 2.0 * step * cfg.mu
        return out

    rng = make_rng(cfg.seed)
    theta = layout.flatten(net)
    previous = theta.copy()
    step = cfg.step_size
    n = len(dataset)
    steps = 0
    history = [_record(0, net, dataset, cfg)]

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x, t = dataset.inputs[idx], dataset.targets[idx]
            scale = n / idx.size
            current = layout.unflatten(net, theta)
            outputs, cache = forward(current, x)
            grads = backward(current, cache, scale * loss.gradient(t, outputs), cfg.knot_learning)
            grad = _tangent_projection(layout, current, layout.flatten_gradients(grads))

            if cfg.line_search:
                def smooth(th):
                    out, _ = forward(layout.unflatten(net, th), x)
                    return scale * loss.value(t, out)

                theta, step = _backtracking_step(theta, grad, smooth, step, prox)
            else:
                previous, theta = theta, prox(theta - step * grad + cfg.momentum * (theta - previous), step)

            if not np.all(np.isfinite(theta)):
                raise TrainingDivergedError(
                    f"parameters became non-finite at epoch {epoch}, step {steps + 1}; "
                    f"lower the step size (now {step:g})"
                )
            steps += 1
            if any_normalized and steps % cfg.renorm_every == 0:
                net, moved = _renormalize_parameters(layout, net, theta)
                theta, previous = _reparametrize(theta, previous, moved)

        current = layout.unflatten(net, theta)
        if cfg.prune_outside_data:
            current = prune_inactive_knots(current, dataset.inputs)
            theta, previous = _reparametrize(theta, previous, layout.flatten(current))
        record = _record(epoch, current, dataset, cfg)
        history.append(record)
        if verbose:
            print(
                f"📈 epoch {epoch:>4}  total={record.total:.6g}  data={record.data:.6g}  "
                f"tv2={record.tv2_penalty:.6g}  knots={record.knot_count}",
                file=sys.stderr,
            )

    final = layout.unflatten(net, theta)
    if any_normalized:
        final = renormalize(final, only_flagged=True)
    if cfg.prune_outside_data:
        final = prune_inactive_knots(final, dataset.inputs)
    final, _ = sparsify(final, cfg.sparsify_tol)
    return final, history


# ── Knot deletion ─────────────────────────────────────────────────────────────

@dataclass
class SparsifyEntry:
    layer: int
    neuron: int
    knots_before: int
    knots_after: int


def sparsify(net: DeepSplineNet, tol: float) -> tuple[DeepSplineNet, list[SparsifyEntry]]:
    """Canonicalize every activation with merge/drop tolerance `tol`."""
    report: list[SparsifyEntry] = []
    activations = []
    for l, layer in enumerate(net.layers):
        row = []
        for j, act in enumerate(layer.activations):
            slim = canonicalize(act, tol)
            report.append(SparsifyEntry(l, j, act.num_knots, slim.num_knots))
            row.append(slim)
        activations.append(row)
    return with_activations(net, activations), report


def prune_inactive_knots(net: DeepSplineNet, inputs: np.ndarray) -> DeepSplineNet:
    """
    Per neuron, a knot at or below every observed pre-activation acts on the
    data as an affine term and is folded into (b1, b2); a knot at or above all
    of them never fires and is zeroed. Outputs on `inputs` are unchanged and
    ‖a‖₁ can only drop. Knot positions stay put, so parameter layouts survive.
    """
    _, cache = forward(net, inputs)
    activations = []
    for layer, z in zip(net.layers, cache.pre):
        row = []
        for j, act in enumerate(layer.activations):
            lo, hi = float(z[:, j].min()), float(z[:, j].max())
            b1, b2, coeffs = act.b1, act.b2, list(act.coeffs)
            for k, (t, a) in enumerate(zip(act.knots, act.coeffs)):
                if a == 0.0:
                    continue
                if t <= lo:
                    b1 -= a * t
                    b2 += a
                    coeffs[k] = 0.0
                elif t >= hi:
                    coeffs[k] = 0.0
            row.append(LinearSpline(b1=b1, b2=b2, knots=act.knots, coeffs=tuple(coeffs)))
        activations.append(row)
    return with_activations(net, activations)


# ── Finite-difference check ───────────────────────────────────────────────────

@dataclass
class GradientCheckReport:
    max_rel_error: float
    per_class: dict[str, float]
    samples_used: int
    parameters: int
    passed: bool


def _away_from_knots(net: DeepSplineNet, inputs: np.ndarray, margin: float) -> np.ndarray:
    _, cache = forward(net, inputs)
    keep = np.ones(inputs.shape[0], dtype=bool)
    for layer, z in zip(net.layers, cache.pre):
        for j, act in enumerate(layer.activations):
            if act.knots:
                dist = np.min(np.abs(z[:, j, None] - np.asarray(act.knots)), axis=1)
                keep &= dist >= margin
    return keep


def gradient_check(
    net: DeepSplineNet,
    dataset: Dataset,
    h: float = 1e-6,
    loss: Literal["squared", "logistic"] = "squared",
    knot_learning: bool = True,
    margin: float = GRADCHECK_KNOT_MARGIN,
) -> GradientCheckReport:
    """
    Central differences of the data term against `backward`, per parameter.
    Samples whose pre-activations sit within `margin` of a knot are skipped.
    """
    _check_shapes(net, dataset)
    loss_fn = LossFn(loss)
    keep = _away_from_knots(net, dataset.inputs, margin)
    layout = ParameterLayout(net, knot_learning)
    if not keep.any():
        return GradientCheckReport(float("inf"), {}, 0, layout.size, False)
    x, t = dataset.inputs[keep], dataset.targets[keep]

    def data_term(theta):
        out, _ = forward(layout.unflatten(net, theta), x)
        return loss_fn.value(t, out)

    outputs, cache = forward(net, x)
    analytic = layout.flatten_gradients(backward(net, cache, loss_fn.gradient(t, outputs), knot_learning))
    theta0 = layout.flatten(net)
    floor = GRADCHECK_REL_FLOOR * max(1.0, abs(data_term(theta0)))

    per_class: dict[str, float] = {}
    for i, kind in enumerate(layout.kinds()):
        plus, minus = theta0.copy(), theta0.copy()
        plus[i] += h
        minus[i] -= h
        numeric = (data_term(plus) - data_term(minus)) / (2.0 * h)
        rel = abs(analytic[i] - numeric) / max(abs(analytic[i]), abs(numeric), floor)
        per_class[kind] = max(per_class.get(kind, 0.0), rel)

    worst = max(per_class.values(), default=0.0)
    return GradientCheckReport(
        max_rel_error=worst,
        per_class=per_class,
        samples_used=int(keep.sum()),
        parameters=layout.size,
        passed=worst <= GRADCHECK_PASS_TOL,
    )
