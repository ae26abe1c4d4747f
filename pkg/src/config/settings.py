"""
Toolkit settings
================

Numerical constants and environment-driven defaults. A local ``.env`` file
may override the ``HRQ_*`` variables during development.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value.strip() == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {value!r}")


# Run defaults
DEFAULT_SEED = _env_int("HRQ_SEED", 20170101)
DEFAULT_SAMPLES = _env_int("HRQ_SAMPLES", 1_000_000)
DEFAULT_N_JOBS = _env_int("HRQ_N_JOBS", 1)
LOG_LEVEL = os.getenv("HRQ_LOG_LEVEL", "WARNING").upper()

# Cell enumeration
MASS_TOLERANCE = 1e-12
TAIL_SPAN_MASS = 1e-16
INTEGER_PART_MAX_CELLS = 10_000_000

# Quadrature
QUAD_ABS_TOL = 1e-8
QUAD_TAIL_SCALES = 40.0
GAUSS_NODES = 24
TV_GAUSS_NODES = 64

# Calibration
CALIBRATION_RTOL = 1e-6
CALIBRATION_MAX_ITER = 200

# Monte Carlo
STREAM_BLOCK = 65_536
MIN_MOMENT_SAMPLES = 10_000
MC_ENTROPY_SAMPLES_PER_CELL = 100

# Output
CSV_FLOAT_FORMAT = "%.12g"
