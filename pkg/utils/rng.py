# utils/rng.py  ──  the one place random generators are created
# Every run is reproducible from its integer seed; the algorithm name is
# recorded next to the seed in model files.
import numpy as np

from config import DEFAULT_SEED, RNG_ALGORITHM


def make_rng(seed: int | None = None) -> np.random.Generator:
    seed = DEFAULT_SEED if seed is None else int(seed)
    return np.random.Generator(getattr(np.random, RNG_ALGORITHM)(seed))

