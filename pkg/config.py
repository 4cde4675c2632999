# config.py  ──  every tolerance, default and budget lives here
# No numeric literals for tunables anywhere else in the package.
# Each value can be overridden with a DEEPSPLINE_* environment variable.

import os

# ── Spline representation ─────────────────────────────────────────────────────
KNOT_MERGE_TOL: float = float(os.getenv("DEEPSPLINE_KNOT_MERGE_TOL", "1e-9"))

# ── 1-D variational solvers ───────────────────────────────────────────────────
FEASIBILITY_TOL: float = float(os.getenv("DEEPSPLINE_FEASIBILITY_TOL", "1e-9"))
GRID_SIZE: int = int(os.getenv("DEEPSPLINE_GRID_SIZE", "512"))
GRID_PAD_FRACTION: float = float(os.getenv("DEEPSPLINE_GRID_PAD", "0.05"))

LP_METHOD: str = os.getenv("DEEPSPLINE_LP_METHOD", "highs-ds")   # dual simplex → vertex solutions
LP_FEASIBILITY_TOL: float = 1e-10
LP_OPTIMALITY_TOL: float = 1e-10
LP_OPTIMUM_RTOL: float = 1e-7     # accepted gap between the LP value and the secant bound

POWER_ITER_TOL: float = 1e-6
POWER_ITER_MAX: int = 1000

FIT_MAX_ITER: int = int(os.getenv("DEEPSPLINE_FIT_MAX_ITER", "20000"))
FIT_TOL: float = float(os.getenv("DEEPSPLINE_FIT_TOL", "1e-10"))   # relative iterate change

# ── Training defaults ─────────────────────────────────────────────────────────
TRAIN_GRID_LO: float = -3.0
TRAIN_GRID_HI: float = 3.0
TRAIN_GRID_COUNT: int = 31
TRAIN_STEP_SIZE: float = float(os.getenv("DEEPSPLINE_STEP_SIZE", "1e-3"))
TRAIN_EPOCHS: int = int(os.getenv("DEEPSPLINE_EPOCHS", "200"))
TRAIN_BATCH_SIZE: int = 32
TRAIN_RENORM_EVERY: int = 1
TRAIN_SPARSIFY_TOL: float = 1e-6
INIT_PRELU_SLOPE: float = 0.25
BACKTRACK_SHRINK: float = 0.5
BACKTRACK_MAX: int = 50

# ── Verification harnesses ────────────────────────────────────────────────────
CPWL_SECOND_DIFF_TOL: float = 1e-9     # relative to output scale
CPWL_AFFINE_TOL: float = 1e-8          # relative to output scale
GRADCHECK_KNOT_MARGIN: float = 1e-3    # samples closer than this to a knot are skipped
GRADCHECK_PASS_TOL: float = 1e-4
GRADCHECK_REL_FLOOR: float = 1e-3      # × max(1, |loss|), denominator floor for tiny gradients
NATIVE_BOUNDARY_TOL: float = 1e-12     # G_φ boundary conditions, kernel bound slack
NATIVE_ROUNDTRIP_TOL: float = 1e-10    # affine residual of s − G_φ{D²s}

# ── Model files / conversion ──────────────────────────────────────────────────
MODEL_SCHEMA_VERSION: int = 1
CONVERT_VERIFY_TOL: float = 1e-9
CONVERT_PROBES: int = 1000

# ── Randomness ────────────────────────────────────────────────────────────────
RNG_ALGORITHM: str = "PCG64"
DEFAULT_SEED: int = int(os.getenv("DEEPSPLINE_SEED", "0"))
