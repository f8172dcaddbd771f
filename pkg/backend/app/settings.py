"""Environment-driven settings for the symmetric tensor toolkit."""
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# Pick up a .env next to the working directory before reading anything
load_dotenv()


class Settings(BaseModel):
    """Numerical defaults shared by every module.

    Values come from environment variables (optionally via a .env file):
    - SSHOPM_DENSIFY_BUDGET: Max number of dense entries to materialize (default: 10^7)
    - SSHOPM_UNIT_TOL: Unit-norm tolerance on Rayleigh quotient inputs (default: 1e-8)
    - SSHOPM_RESIDUAL_GATE: Residual a converged eigenpair must meet (default: 1e-6)
    - SSHOPM_STABILITY_MARGIN: Margin below 1 for a stable fixed point (default: 1e-9)
    - SSHOPM_LOG_LEVEL: Log level used by the CLI (default: WARNING)
    - SSHOPM_WORKERS: Thread pool size for sweeps (default: 1)
    """
    model_config = ConfigDict(frozen=True)

    densify_budget: int = Field(10_000_000, ge=1)
    unit_tol: float = Field(1e-8, gt=0)
    residual_gate: float = Field(1e-6, gt=0)
    stability_margin: float = Field(1e-9, ge=0)
    log_level: str = "WARNING"
    workers: int = Field(1, ge=1)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Build the settings from the current environment (cached)."""
    return Settings(
        densify_budget=int(os.environ.get("SSHOPM_DENSIFY_BUDGET", "10000000")),
        unit_tol=float(os.environ.get("SSHOPM_UNIT_TOL", "1e-8")),
        residual_gate=float(os.environ.get("SSHOPM_RESIDUAL_GATE", "1e-6")),
        stability_margin=float(os.environ.get("SSHOPM_STABILITY_MARGIN", "1e-9")),
        log_level=os.environ.get("SSHOPM_LOG_LEVEL", "WARNING").upper(),
        workers=int(os.environ.get("SSHOPM_WORKERS", "1")),
    )


def reset_settings() -> None:
    """Drop the cached settings so the next call re-reads the environment."""
    get_settings.cache_clear()
