"""Runtime configuration read from the environment (``.env`` supported)."""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

load_dotenv()

ROOT = Path(__file__).resolve().parents[2]
DATA_DIR = Path(os.getenv("BELAVKIN_DATA_DIR", str(ROOT / "data")))
ENSEMBLE_DIR = DATA_DIR / "ensembles"
REPORT_DIR = DATA_DIR / "reports"

LOG_LEVEL = os.getenv("BELAVKIN_LOG_LEVEL", "WARNING")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "")
    if not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be a number, got {raw!r}") from exc


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    if not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from exc


class Tolerances(BaseModel):
    """Numerical tolerances shared by every component."""

    herm: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_HERM", 1e-10), description="max |H - H^dagger|")
    psd: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_PSD", 1e-9), description="eigenvalue floor")
    recon: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_RECON", 1e-9))
    rank: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_RANK", 1e-10), description="relative support cutoff")
    cert: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_CERT", 1e-8))
    state_norm: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_STATE_NORM", 1e-12))
    renormalize: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_RENORMALIZE", 1e-6))
    orthonormal: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_ORTHONORMAL", 1e-10))

    model_config = ConfigDict(frozen=True, validate_default=True)

    @field_validator("*")
    @classmethod
    def positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tolerances must be positive")
        return value


class IterationSettings(BaseModel):
    """Settings for the optimal-weight fixed-point iteration."""

    tol_fix: float = Field(default_factory=lambda: _env_float("BELAVKIN_TOL_FIX", 1e-11), gt=0)
    max_iter: int = Field(default_factory=lambda: _env_int("BELAVKIN_MAX_ITER", 10_000), ge=1)
    damping: float = Field(
        default_factory=lambda: _env_float("BELAVKIN_DAMPING", 1.0),
        gt=0,
        le=1,
        description="exponent applied to the multiplicative update; 1.0 is undamped",
    )
    auto_damping: bool = True
    freeze_ratio: Optional[float] = Field(default=None, gt=0, description="defaults to Tolerances.rank")
    prune_ratio: float = Field(
        default=1e-2,
        gt=0,
        lt=1,
        description="weights below this fraction of the largest are candidates for an exact zero",
    )
    prune_every: int = Field(default=25, ge=1, description="iterations between pruning attempts")

    model_config = ConfigDict(frozen=True, validate_default=True)


class SupremumSearch(BaseModel):
    grid: int = Field(default=512, ge=2)
    step_floor: float = Field(default=1e-10, gt=0)

    model_config = ConfigDict(frozen=True, validate_default=True)


DEFAULT_TOLERANCES = Tolerances()

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once; output goes to stderr so stdout stays machine-readable."""
    global _configured
    if _configured:
        logging.getLogger().setLevel((level or LOG_LEVEL).upper())
        return
    logging.basicConfig(level=(level or LOG_LEVEL).upper(), format=LOG_FORMAT, stream=sys.stderr)
    _configured = True
