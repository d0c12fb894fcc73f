import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env
load_dotenv()


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)))
    except ValueError:
        return default


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except ValueError:
        return default


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


class Config:
    """Central configuration for tumordde with environment overrides."""

    # ========================
    # CERTIFICATION TOLERANCES
    # ========================
    RESIDUAL_TOL = _env_float("TUMORDDE_RESIDUAL_TOL", 1e-9)
    TRANSVERSALITY_TOL = _env_float("TUMORDDE_TRANSVERSALITY_TOL", 1e-3)
    DEGENERACY_TOL = _env_float("TUMORDDE_DEGENERACY_TOL", 1e-12)
    K_MAX = _env_int("TUMORDDE_K_MAX", 64)

    # ========================
    # ROOT FINDING
    # ========================
    NEWTON_MAX_ITER = _env_int("TUMORDDE_NEWTON_MAX_ITER", 100)
    NEWTON_STEP_TOL = _env_float("TUMORDDE_NEWTON_STEP_TOL", 1e-12)

    # ========================
    # INTEGRATION
    # ========================
    DT = _env_float("TUMORDDE_DT", 1e-3)
    T_END = _env_float("TUMORDDE_T_END", 500.0)
    BLOW_UP = _env_float("TUMORDDE_BLOW_UP", 1e12)
    CONVERGENCE_TOL = _env_float("TUMORDDE_CONVERGENCE_TOL", 1e-4)

    # ========================
    # OUTPUT / LOGGING
    # ========================
    OUTPUT_DIR = Path(os.getenv("TUMORDDE_OUTPUT_DIR", "./output"))
    LOG_LEVEL = os.getenv("TUMORDDE_LOG_LEVEL", "INFO").upper()
    LOG_JSON = _env_flag("TUMORDDE_LOG_JSON", "false")

    # ========================
    # METHODS
    # ========================
    @classmethod
    def reload(cls, verbose: bool = False):
        """Reload config values from environment variables."""
        cls.RESIDUAL_TOL = _env_float("TUMORDDE_RESIDUAL_TOL", 1e-9)
        cls.TRANSVERSALITY_TOL = _env_float("TUMORDDE_TRANSVERSALITY_TOL", 1e-3)
        cls.DEGENERACY_TOL = _env_float("TUMORDDE_DEGENERACY_TOL", 1e-12)
        cls.K_MAX = _env_int("TUMORDDE_K_MAX", 64)
        cls.NEWTON_MAX_ITER = _env_int("TUMORDDE_NEWTON_MAX_ITER", 100)
        cls.NEWTON_STEP_TOL = _env_float("TUMORDDE_NEWTON_STEP_TOL", 1e-12)
        cls.DT = _env_float("TUMORDDE_DT", 1e-3)
        cls.T_END = _env_float("TUMORDDE_T_END", 500.0)
        cls.BLOW_UP = _env_float("TUMORDDE_BLOW_UP", 1e12)
        cls.CONVERGENCE_TOL = _env_float("TUMORDDE_CONVERGENCE_TOL", 1e-4)
        cls.OUTPUT_DIR = Path(os.getenv("TUMORDDE_OUTPUT_DIR", "./output"))
        cls.LOG_LEVEL = os.getenv("TUMORDDE_LOG_LEVEL", "INFO").upper()
        cls.LOG_JSON = _env_flag("TUMORDDE_LOG_JSON", "false")

        cls.validate()
        if verbose:
            print(cls.summary())

    @classmethod
    def validate(cls):
        """Ensure tolerances and integration defaults are usable."""
        positive = {
            "TUMORDDE_RESIDUAL_TOL": cls.RESIDUAL_TOL,
            "TUMORDDE_TRANSVERSALITY_TOL": cls.TRANSVERSALITY_TOL,
            "TUMORDDE_DEGENERACY_TOL": cls.DEGENERACY_TOL,
            "TUMORDDE_NEWTON_STEP_TOL": cls.NEWTON_STEP_TOL,
            "TUMORDDE_DT": cls.DT,
            "TUMORDDE_T_END": cls.T_END,
            "TUMORDDE_BLOW_UP": cls.BLOW_UP,
            "TUMORDDE_CONVERGENCE_TOL": cls.CONVERGENCE_TOL,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ValueError(f"{key} must be positive, got {value}")

        if cls.K_MAX < 1:
            raise ValueError(f"TUMORDDE_K_MAX must be at least 1, got {cls.K_MAX}")
        if cls.NEWTON_MAX_ITER < 1:
            raise ValueError(f"TUMORDDE_NEWTON_MAX_ITER must be at least 1, got {cls.NEWTON_MAX_ITER}")
        if cls.LOG_LEVEL not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unsupported TUMORDDE_LOG_LEVEL: {cls.LOG_LEVEL}")

        return True

    @classmethod
    def summary(cls):
        """Display configuration summary."""
        return f"""
tumordde Configuration
----------------------
Residual tol       : {cls.RESIDUAL_TOL:g}
Transversality tol : {cls.TRANSVERSALITY_TOL:g}
Degeneracy tol     : {cls.DEGENERACY_TOL:g}
Branch search k_max: {cls.K_MAX}

Newton iterations  : {cls.NEWTON_MAX_ITER}
Newton step tol    : {cls.NEWTON_STEP_TOL:g}

Step size dt       : {cls.DT:g}
Horizon t_end      : {cls.T_END:g}
Blow-up threshold  : {cls.BLOW_UP:g}
Convergence tol    : {cls.CONVERGENCE_TOL:g}

Output Dir         : {cls.OUTPUT_DIR}
Log level          : {cls.LOG_LEVEL}
JSON logs          : {'Enabled' if cls.LOG_JSON else 'Disabled'}
"""


# ========================
# Self-test
# ========================
if __name__ == "__main__":
    print(Config.summary())
    Config.validate()
    print("Configuration validated successfully.")
