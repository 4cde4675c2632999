# data/datasets.py  ──  CSV ingestion and seeded synthetic tasks
import csv
from pathlib import Path
from typing import Literal

import numpy as np

from errors import DataFormatError
from shared_types import Dataset, InterpolationProblem
from utils.rng import make_rng

SynthKind = Literal["sine", "step", "spiral2d", "hinge"]


# ── CSV ───────────────────────────────────────────────────────────────────────

def _parse_row(row: list[str], line: int) -> list[float]:
    values = []
    for cell in row:
        try:
            v = float(cell)
        except ValueError:
            raise DataFormatError(f"cannot parse {cell.strip()!r} as a number", line) from None
        if not np.isfinite(v):
            raise DataFormatError(f"non-finite value {cell.strip()!r}", line)
        values.append(v)
    return values


def _is_header(row: list[str]) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return True
    return False


def read_rows(path: str | Path, width: int) -> tuple[np.ndarray, list[str] | None]:
    """Numeric rows of exactly `width` columns; an optional header row is detected and returned."""
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = [(i, r) for i, r in enumerate(csv.reader(f), start=1) if r and any(c.strip() for c in r)]
    except OSError as e:
        raise DataFormatError(f"cannot read {path}: {e.strerror}") from e

    names = None
    if rows and _is_header(rows[0][1]):
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise DataFormatError(f"{path} has no data rows")

    parsed = []
    for line, row in rows:
        if len(row) != width:
            raise DataFormatError(f"expected {width} columns, found {len(row)}", line)
        parsed.append(_parse_row(row, line))
    return np.array(parsed, dtype=float), names


def load_csv(path: str | Path, n_inputs: int, n_targets: int) -> Dataset:
    table, names = read_rows(path, n_inputs + n_targets)
    return Dataset(inputs=table[:, :n_inputs], targets=table[:, n_inputs:], names=names)


def load_problem(path: str | Path) -> InterpolationProblem:
    """Two-column x,y file as a 1-D problem (duplicates merged when consistent)."""
    table, _ = read_rows(path, 2)
    return InterpolationProblem.from_points(table)


# ── Synthetic tasks ───────────────────────────────────────────────────────────

def synth(kind: SynthKind, n: int, noise_sd: float = 0.0, seed: int = 0) -> Dataset:
    """
    sine     y = sin(2πx) on a uniform grid over [0, 1]
    step     y = 1[x > 0.5] on [0, 1]
    hinge    y = max(x, 2 − x) on [−1, 3]
    spiral2d two interleaved spirals, labels ±1

    Noise is added to the regression targets only.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    rng = make_rng(seed)

    if kind == "sine":
        x = np.linspace(0.0, 1.0, n)
        y = np.sin(2.0 * np.pi * x)
    elif kind == "step":
        x = np.linspace(0.0, 1.0, n)
        y = (x > 0.5).astype(float)
    elif kind == "hinge":
        x = np.linspace(-1.0, 3.0, n)
        y = np.maximum(x, 2.0 - x)
    elif kind == "spiral2d":
        labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        t = rng.uniform(0.25, 1.0, n) * 3.0 * np.pi
        phase = np.where(labels > 0, 0.0, np.pi)
        inputs = np.column_stack([t * np.cos(t + phase), t * np.sin(t + phase)]) / (3.0 * np.pi)
        inputs += noise_sd * rng.standard_normal(inputs.shape)
        return Dataset(inputs=inputs, targets=labels, names=["x1", "x2", "label"])
    else:
        raise ValueError(f"unknown synthetic kind {kind!r}")

    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    return Dataset(inputs=x, targets=y, names=["x", "y"])
