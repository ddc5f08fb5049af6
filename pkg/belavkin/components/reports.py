"""Discrimination reports, the ensemble digest and deterministic JSON/CSV output."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Literal, Optional

import pandas as pd
from pydantic import BaseModel, Field, model_validator

from belavkin import __version__
from belavkin.components.ensemble import PureStateEnsemble, ensemble_to_dict
from belavkin.components.optimality import BoundReport, Certificate
from belavkin.components.settings import DEFAULT_TOLERANCES, REPORT_DIR

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 10
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def ensemble_hash(e: PureStateEnsemble) -> str:
    """SHA-256 of the canonical JSON serialization of the ensemble."""
    return sha256_bytes(canonical_json(ensemble_to_dict(e)).encode("utf-8"))


class ReportMetadata(BaseModel):
    command: str
    ensemble_hash: Optional[str] = None
    tolerances: Dict[str, float] = Field(default_factory=lambda: DEFAULT_TOLERANCES.model_dump())
    seed: Optional[int] = None
    version: str = __version__


class DiscriminationReport(BaseModel):
    status: Literal["ok", "uncertified"] = "ok"
    failure_rates: Dict[str, Optional[float]] = Field(default_factory=dict)
    certificates: Dict[str, Certificate] = Field(default_factory=dict)
    bounds: Optional[BoundReport] = None
    ensemble: Optional[Dict[str, Any]] = None
    extras: Dict[str, Any] = Field(default_factory=dict)
    metadata: ReportMetadata

    @model_validator(mode="after")
    def check_rates(self) -> "DiscriminationReport":
        slack = DEFAULT_TOLERANCES.recon
        for name, rate in self.failure_rates.items():
            if rate is None:
                continue
            if rate < -slack or rate > 1.0 + slack:
                raise ValueError(f"failure rate {name}={rate} is outside [0, 1]")
            self.failure_rates[name] = min(max(rate, 0.0), 1.0)
        opt = self.certificates.get("opt")
        if "opt" in self.failure_rates and opt is None:
            raise ValueError("an optimal failure rate needs its certificate")
        if opt is not None and not opt.passed and self.status != "uncertified":
            raise ValueError("an optimum without a passing certificate must be reported as uncertified")
        return self


def round_floats(value: Any, digits: int = SIGNIFICANT_DIGITS) -> Any:
    """Round every float to ``digits`` significant digits; NaN and infinities become None."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {key: round_floats(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(item, digits) for item in value]
    return value


def to_json(payload: Any) -> str:
    return json.dumps(round_floats(payload), sort_keys=True, indent=2) + "\n"


def report_to_json(report: DiscriminationReport) -> str:
    return to_json(report.model_dump(mode="json"))


def frame_to_csv(frame: pd.DataFrame) -> str:
    """Comma-separated, '.' decimals, Unix newlines, empty fields for NaN."""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="")


def archive_report(report: DiscriminationReport, dest_dir: Path = REPORT_DIR) -> Path:
    """Write ``<command>_<hash12>.json``; the hash is the ensemble digest when there is one."""
    text = report_to_json(report)
    digest = report.metadata.ensemble_hash or sha256_bytes(text.encode("utf-8"))
    dest_dir.mkdir(parents=True, exist_ok=True)
    outfile = dest_dir / f"{report.metadata.command}_{digest[:12]}.json"
    outfile.write_text(text, encoding="utf-8")
    logger.info("archived %s report to %s", report.metadata.command, outfile)
    return outfile
