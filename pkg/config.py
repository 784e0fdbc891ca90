import os
from dotenv import load_dotenv

load_dotenv()


def _env_float(name, default):
    value = os.getenv(name)
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.getenv(name)
    return int(value) if value not in (None, '') else default


class Config:
    # Logging
    LOG_LEVEL = os.getenv('PHASELENS_LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('PHASELENS_LOG_FILE')

    # Quadrature
    GRID_NODES = _env_int('PHASELENS_GRID_NODES', 20)  # per panel
    GRID_PANELS = _env_int('PHASELENS_GRID_PANELS', 40)

    # Fixed-point solver
    TOL = _env_float('PHASELENS_TOL', 1e-8)
    MAX_ITER = _env_int('PHASELENS_MAX_ITER', 500)
    NEWTON_SWITCH = _env_float('PHASELENS_NEWTON_SWITCH', 1e-3)
    DAMPING_MIN = _env_float('PHASELENS_DAMPING_MIN', 0.05)
    DAMPING_MAX = 1.0
    DAMPING_GROWTH = 1.2
    FD_STEP = 1e-6

    # Spectral / bifurcation thresholds
    ROOT_TOL = _env_float('PHASELENS_ROOT_TOL', 1e-12)
    MULTIPLICITY_TOL = _env_float('PHASELENS_MULTIPLICITY_TOL', 1e-5)
    RANK_TOL = _env_float('PHASELENS_RANK_TOL', 1e-8)
    SIGN_DEADBAND = _env_float('PHASELENS_SIGN_DEADBAND', 1e-12)
    INVERTIBLE_MARGIN = _env_float('PHASELENS_INVERTIBLE_MARGIN', 1e-6)
    MAX_CONDITION = 1e12

    # Particles
    SEED = _env_int('PHASELENS_SEED', 20240601)
    MIN_BATCHES = 20
    ESCAPE_FACTOR = 10.0
    STABILITY_LIMIT = 0.5

    # Output
    FLOAT_DIGITS = _env_int('PHASELENS_FLOAT_DIGITS', 17)
