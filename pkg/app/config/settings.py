"""Centralized configuration with environment-variable overrides."""
from dataclasses import dataclass
import os

from dotenv import load_dotenv

def _env(key: str, default: str) -> str:
    """Read an environment variable with a fallback."""
    return os.getenv(key, default)

def _env_int(key: str, default: int) -> int:
    """Read an integer env var with fallback."""
    try:
        return int(os.getenv(key, str(default)))
    except Exception:
        return default

def _env_float(key: str, default: float) -> float:
    """Read a float env var with fallback."""
    try:
        return float(os.getenv(key, str(default)))
    except Exception:
        return default

@dataclass(frozen=True)
class Settings:
    """Application settings (override via env vars or a .env file)."""
    app_name: str
    log_level: str
    output_dir: str

    default_seed: int
    anneal_sweeps: int
    anneal_restarts: int
    chain_weight: int

    pwr_current_ua: float
    loop_current_range_ua: float

    fidelity_trials: int
    use_color: bool

    @staticmethod
    def from_env() -> "Settings":
        """Build settings from environment variables."""
        load_dotenv()
        return Settings(
            app_name=_env("APP_NAME", "chimera-control-sim"),
            log_level=_env("LOG_LEVEL", "INFO").upper(),
            output_dir=_env("OUTPUT_DIR", "./output"),

            default_seed=_env_int("DEFAULT_SEED", 1),
            anneal_sweeps=_env_int("ANNEAL_SWEEPS", 1000),
            anneal_restarts=_env_int("ANNEAL_RESTARTS", 16),
            chain_weight=_env_int("CHAIN_WEIGHT", -8),

            pwr_current_ua=_env_float("PWR_CURRENT_UA", 45.0),
            loop_current_range_ua=_env_float("LOOP_CURRENT_RANGE_UA", 27.5),

            fidelity_trials=_env_int("FIDELITY_TRIALS", 100),
            use_color=_env_int("USE_COLOR", 1) != 0,
        )
