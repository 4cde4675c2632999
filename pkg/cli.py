# cli.py  ──  batch front end: python cli.py <subcommand> [flags]
#
# Artifacts go to files, one-line status messages go to stderr, numeric
# summaries go to stdout. Exit codes: 0 ok, 2 bad input/config,
# 3 training diverged, 4 ReLU conversion failed verification.

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from config import (
    CONVERT_PROBES,
    CONVERT_VERIFY_TOL,
    DEFAULT_SEED,
    GRID_SIZE,
    NATIVE_BOUNDARY_TOL,
    NATIVE_ROUNDTRIP_TOL,
    TRAIN_BATCH_SIZE,
    TRAIN_EPOCHS,
    TRAIN_GRID_COUNT,
    TRAIN_GRID_HI,
    TRAIN_GRID_LO,
    TRAIN_STEP_SIZE,
)
from data.datasets import load_csv, load_problem
from data.model_file import TrainingMetadata, load_model, save_model
from data.writers import write_breakpoints, write_fit_path, write_history, write_report
from errors import ConversionMismatchError, DeepSplineError, ModelFileError
from network.losses import LossFn
from network.model import count_knots, forward, from_relu_network, init_network, relu_network_forward
from network.training import GridSpec, TrainConfig, train
from shared_types import DiracMeasure, LinearSpline
from splines.core import canonicalize, evaluate, subtract, tv2
from splines.native_space import (
    affine_residual,
    apply_G_phi,
    bv2_norm,
    g_phi,
    sampling_bound,
    second_derivative,
)
from splines.variational import (
    OptimizerConfig,
    consolidate,
    default_grid,
    regularized_fit,
    secant_lower_bound,
    sobolev_interpolate,
    sparse_interpolate,
)
from utils.rng import make_rng


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _artifact_base(out: str) -> Path:
    path = Path(out)
    return path.with_suffix("") if path.suffix in (".csv", ".json") else path


def parse_lambdas(text: str) -> list[float]:
    """'0.1', '0,0.1,1' or a logarithmic sweep 'a:b:k' (k values from a to b)."""
    try:
        if ":" in text:
            lo, hi, k = text.split(":")
            lo, hi, k = float(lo), float(hi), int(k)
            if lo <= 0 or hi <= 0 or k < 1:
                raise ValueError
            return [float(v) for v in np.geomspace(lo, hi, k)]
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid lambda {text!r}: use a value, a comma list or a:b:k with a, b > 0"
        ) from None
    if any(v < 0 or not np.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"lambda values must be finite and non-negative: {text!r}")
    return values


def parse_arch(text: str) -> list[int]:
    try:
        arch = [int(v) for v in text.split("-")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid architecture {text!r}; expected e.g. 1-8-1") from None
    if len(arch) < 2 or any(n < 1 for n in arch):
        raise argparse.ArgumentTypeError(f"architecture needs at least two positive sizes: {text!r}")
    return arch


# ── 1-D solvers ───────────────────────────────────────────────────────────────

def cmd_interp1d(args) -> int:
    p = load_problem(args.data)
    grid = default_grid(p, count=args.grid)
    spline = sparse_interpolate(p, grid)
    if args.consolidate:
        spline = consolidate(spline, p)

    base = _artifact_base(args.out)
    write_breakpoints(spline, grid.lo, grid.hi, f"{base}.csv")
    report = {
        "M": p.size,
        "tv2": tv2(spline),
        "secant_lower_bound": secant_lower_bound(p),
        "knot_count": spline.num_knots,
        "knots": list(spline.knots),
    }
    if args.sobolev:
        sob = sobolev_interpolate(p)
        write_breakpoints(sob, grid.lo, grid.hi, f"{base}.sobolev.csv")
        report["sobolev_tv2"] = tv2(sob)
    write_report(report, f"{base}.json")
    _log(f"✅ {report['knot_count']} knots, TV² {report['tv2']:.6g} → {base}.csv, {base}.json")
    return 0


def cmd_fit1d(args) -> int:
    p = load_problem(args.data)
    grid = default_grid(p, count=args.grid)
    opt = OptimizerConfig(accelerate=args.accelerate)
    rows = []
    for lam in args.lam:
        result = regularized_fit(p, lam, grid, opt)
        rows.append({
            "lambda": lam,
            "rss": result.rss,
            "tv2": tv2(result.spline),
            "knots": result.spline.num_knots,
        })
    write_fit_path(rows, args.out)
    _log(f"✅ {len(rows)} fit(s) → {args.out}")
    return 0


# ── Networks ──────────────────────────────────────────────────────────────────

def cmd_train(args) -> int:
    cfg = TrainConfig(
        lam=args.lam,
        mu=args.mu,
        epochs=args.epochs,
        seed=args.seed,
        step_size=args.step_size,
        batch_size=args.batch_size,
        grid=GridSpec(lo=args.grid_lo, hi=args.grid_hi, count=args.grid_count),
        knot_learning=args.knot_learning,
        loss=args.loss,
        momentum=args.momentum,
        line_search=args.line_search,
        prune_outside_data=not args.no_prune,
    )
    dataset = load_csv(args.data, args.arch[0], args.arch[-1])
    net = init_network(args.arch, cfg.grid.locations(), make_rng(cfg.seed), normalized=not args.unnormalized)
    _log(f"🔧 training {'-'.join(map(str, args.arch))} on {len(dataset)} samples for {cfg.epochs} epochs")
    trained, history = train(net, dataset, cfg, verbose=args.verbose)

    save_model(
        trained,
        args.out,
        TrainingMetadata(lam=cfg.lam, mu=cfg.mu, seed=cfg.seed, epochs=cfg.epochs, source=str(args.data)),
    )
    history_path = args.history or f"{_artifact_base(args.out)}.history.csv"
    write_history(history, history_path)
    last = history[-1]
    _log(f"✅ data={last.data:.6g} knots={last.knot_count} → {args.out}, {history_path}")
    return 0


def cmd_eval(args) -> int:
    net = load_model(args.model)
    dataset = load_csv(args.data, net.nodes[0], net.nodes[-1])
    outputs, _ = forward(net, dataset.inputs)
    loss = LossFn(args.loss).value(dataset.targets, outputs) / len(dataset)
    print(f"loss={loss!r}")
    for i, counts in enumerate(count_knots(net), start=1):
        print(f"layer {i}: knots={sum(counts)} per_neuron={counts}")
    return 0


def _read_relu_weights(path: str) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """{"weights": [...], "thresholds": [...]} for relu(W·y − z), or "biases" for relu(W·y + b)."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        weights = [np.asarray(w, dtype=float) for w in raw["weights"]]
        if "thresholds" in raw:
            thresholds = [np.asarray(z, dtype=float) for z in raw["thresholds"]]
        else:
            thresholds = [-np.asarray(b, dtype=float) for b in raw["biases"]]
    except OSError as e:
        raise ModelFileError(f"cannot read {path}: {e.strerror}") from e
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ModelFileError(f"{path} is not a ReLU weight file: {e}") from e
    return weights, thresholds


def cmd_convert(args) -> int:
    weights, thresholds = _read_relu_weights(args.relu_weights)
    net = from_relu_network(weights, thresholds)

    probes = make_rng(args.seed).standard_normal((CONVERT_PROBES, net.nodes[0]))
    expected = relu_network_forward(weights, thresholds, probes)
    got, _ = forward(net, probes)
    scale = max(1.0, float(np.max(np.abs(expected))))
    mismatch = float(np.max(np.abs(got - expected)))
    if mismatch > CONVERT_VERIFY_TOL * scale:
        raise ConversionMismatchError(
            f"converted network disagrees with the ReLU network by {mismatch:.3g} "
            f"on {CONVERT_PROBES} probes (tolerance {CONVERT_VERIFY_TOL:g} × {scale:.3g})"
        )
    save_model(net, args.out, TrainingMetadata(seed=args.seed, source=str(args.relu_weights)))
    _log(f"✅ converted {'-'.join(map(str, net.nodes))}, max probe error {mismatch:.3g} → {args.out}")
    return 0


# ── Native-space identities ───────────────────────────────────────────────────

def _random_measure(rng, atoms: int) -> DiracMeasure:
    return DiracMeasure(atoms=tuple(zip(rng.uniform(-3, 3, atoms), rng.standard_normal(atoms))))


def _random_spline(rng) -> LinearSpline:
    k = int(rng.integers(0, 6))
    return LinearSpline(
        b1=rng.standard_normal(),
        b2=rng.standard_normal(),
        knots=tuple(rng.uniform(-3, 3, k)),
        coeffs=tuple(rng.standard_normal(k)),
    )


def cmd_diagnose(args) -> int:
    rng = make_rng(args.seed)
    n = args.trials

    xs, ys = rng.uniform(-5, 5, n), rng.uniform(-5, 5, n)
    g = g_phi(xs, ys)
    outside = (ys < np.minimum(xs, 0.0)) | (ys > np.maximum(xs, 1.0))
    boundary, roundtrip, sampling = 0.0, 0.0, True
    for _ in range(args.splines):
        f = apply_G_phi(_random_measure(rng, 5))
        boundary = max(boundary, abs(evaluate(f, 0.0)), abs(evaluate(f, 1.0)))
        s = canonicalize(_random_spline(rng), 0.0)
        roundtrip = max(roundtrip, affine_residual(subtract(s, apply_G_phi(second_derivative(s)))))
        x = rng.uniform(-10, 10)
        sampling &= abs(evaluate(s, x)) <= sampling_bound(s, x) * (1 + NATIVE_BOUNDARY_TOL)

    checks = {
        "kernel |g(x,y)| <= |x|": bool(np.all(np.abs(g) <= np.abs(xs) + NATIVE_BOUNDARY_TOL)),
        "kernel compact support": bool(np.all(g[outside] == 0.0)),
        "G_phi boundary conditions": boundary <= NATIVE_BOUNDARY_TOL,
        "right-inverse round trip": roundtrip <= NATIVE_ROUNDTRIP_TOL,
        "sampling bound": bool(sampling),
        "bv2_norm(relu) == 2": bv2_norm(LinearSpline(knots=(0.0,), coeffs=(1.0,))) == 2.0,
    }
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if all(checks.values()):
        _log("✅ native-space identities hold")
        return 0
    _log("❌ native-space identities failed")
    return 1


# ── Entry point ───────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepspline", description="Deep spline networks and 1-D TV² solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("interp1d", help="minimum-TV² interpolation of x,y data")
    p.add_argument("--data", required=True)
    p.add_argument("--grid", type=int, default=GRID_SIZE)
    p.add_argument("--consolidate", action="store_true")
    p.add_argument("--sobolev", action="store_true", help="also write the H¹ interpolant")
    p.add_argument("--out", required=True, help="artifact prefix (<out>.csv, <out>.json)")
    p.set_defaults(func=cmd_interp1d)

    p = sub.add_parser("fit1d", help="TV²-regularized fits along a lambda path")
    p.add_argument("--data", required=True)
    p.add_argument("--lambda", dest="lam", type=parse_lambdas, required=True)
    p.add_argument("--grid", type=int, default=GRID_SIZE)
    p.add_argument("--accelerate", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit1d)

    p = sub.add_parser("train", help="train a deep spline network")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", type=parse_arch, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=TRAIN_EPOCHS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--step-size", type=float, default=TRAIN_STEP_SIZE)
    p.add_argument("--batch-size", type=int, default=TRAIN_BATCH_SIZE)
    p.add_argument("--grid-lo", type=float, default=TRAIN_GRID_LO)
    p.add_argument("--grid-hi", type=float, default=TRAIN_GRID_HI)
    p.add_argument("--grid-count", type=int, default=TRAIN_GRID_COUNT)
    p.add_argument("--loss", choices=["squared", "logistic"], default="squared")
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--line-search", action="store_true")
    p.add_argument("--knot-learning", action="store_true")
    p.add_argument("--no-prune", action="store_true", help="keep knots outside the observed pre-activation range")
    p.add_argument("--unnormalized", action="store_true")
    p.add_argument("--history", help="history CSV (default <out>.history.csv)")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="loss and knot counts of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--loss", choices=["squared", "logistic"], default="squared")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convert", help="ReLU network → deep spline model")
    p.add_argument("--relu-weights", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("diagnose", help="check native-space identities on random inputs")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--splines", type=int, default=1000)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except DeepSplineError as e:
        _log(f"❌ {e}")
        return e.exit_code
    except ValidationError as e:
        _log(f"❌ invalid configuration: {e.errors()[0]['loc']} {e.errors()[0]['msg']}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
