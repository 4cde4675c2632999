# network/losses.py  ──  convex data-fidelity terms E(y, f(x))
#
# Both losses are summed over samples and outputs. `gradient` returns
# ∂E/∂outputs with the same shape as the outputs.

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import expit

LossKind = Literal["squared", "logistic"]


@dataclass(frozen=True)
class LossFn:
    kind: LossKind = "squared"

    def __post_init__(self):
        if self.kind not in ("squared", "logistic"):
            raise ValueError(f"unknown loss kind {self.kind!r}")

    def value(self, targets, outputs) -> float:
        y = np.asarray(targets, dtype=float)
        f = np.asarray(outputs, dtype=float)
        if self.kind == "squared":
            return float(np.sum((y - f) ** 2))
        # log(1 + exp(−y·f)) on ±1 labels
        return float(np.sum(np.logaddexp(0.0, -y * f)))

    def gradient(self, targets, outputs) -> np.ndarray:
        y = np.asarray(targets, dtype=float)
        f = np.asarray(outputs, dtype=float)
        if self.kind == "squared":
            return 2.0 * (f - y)
        return -y * expit(-y * f)
