# utils/prox.py  ──  proximal operators shared by the 1-D fitter and network training
import numpy as np


def prox_l1(value, threshold):
    """Soft threshold sign(v)·max(|v| − t, 0), the minimizer of ½(u − v)² + t|u|."""
    if np.any(np.asarray(threshold) < 0):
        raise ValueError(f"threshold must be non-negative, got {threshold}")
    v = np.asarray(value, dtype=float)
    out = np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)
    return float(out) if out.ndim == 0 else out
