# data/writers.py  ──  plot-ready CSV and JSON artifacts
import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

from shared_types import LinearSpline
from splines.core import breakpoint_table

HISTORY_COLUMNS = ["epoch", "data", "weight_penalty", "tv2_penalty", "total", "knot_count"]
FIT_PATH_COLUMNS = ["lambda", "rss", "tv2", "knots"]


def _write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_history(history, path: str | Path) -> None:
    """One row per EpochRecord."""
    _write_csv(path, HISTORY_COLUMNS, ([asdict(r)[c] for c in HISTORY_COLUMNS] for r in history))


def write_breakpoints(s: LinearSpline, lo: float, hi: float, path: str | Path) -> None:
    xs, ys = breakpoint_table(s, lo, hi)
    _write_csv(path, ["x", "f"], zip(map(float, xs), map(float, ys)))


def write_fit_path(rows: Iterable[dict], path: str | Path) -> None:
    _write_csv(path, FIT_PATH_COLUMNS, ([r[c] for c in FIT_PATH_COLUMNS] for r in rows))


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
