"""Command implementations behind ``scripts/belavkin_cli.py``.

Each ``cmd_*`` returns a DiscriminationReport or a pandas DataFrame; writing
them out is left to the caller.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from belavkin.components.binary import (
    HALF_PI,
    asymptotic_ratio_limit,
    empirical_ratio,
    grid_axes,
    ratio_grid,
    supremum_ratio,
)
from belavkin.components.bwsrm import NAMED_POWERS, build_bwsrm, gram_failure_rate, power_failure_rate, weighting_from_label
from belavkin.components.ensemble import (
    PureStateEnsemble,
    WeightVector,
    counterexample_ensemble,
    counterexample_povm,
    detection_probabilities,
    embed,
    ensemble_from_dict,
    ensemble_to_dict,
    failure_rate,
    haar_random_ensemble,
    load_ensemble,
    perturb,
)
from belavkin.components.errors import CertificateInapplicableError, DimensionMismatchError
from belavkin.components.optimality import (
    Certificate,
    belavkin_certificate,
    check_bounds,
    lagrange_certificate,
    optimal_weights,
    pgm_condition,
    weighted_sufficient_certificate,
)
from belavkin.components.reports import DiscriminationReport, ReportMetadata, ensemble_hash
from belavkin.components.settings import IterationSettings, SupremumSearch
from belavkin.components.solver import solve

logger = logging.getLogger(__name__)

Command = Literal["discriminate", "counterexample", "figure-data", "asymptotic-sweep", "random-experiment", "verify"]
Figure = Literal["fig1", "fig2a", "fig2b"]

FIGURES: Dict[str, Sequence[str]] = {
    "fig1": ("pgm", "holevo"),
    "fig2a": ("holevo",),
    "fig2b": ("cubic",),
}
ALL_METHODS = ("pgm", "holevo", "cubic", "opt")
# Holevo counts as beating the PGM when it is no worse up to round-off.
_BEATS_SLACK = 1e-12


class RunConfig(BaseModel):
    command: Command
    input: Optional[Path] = None
    ensemble: Optional[Dict[str, Any]] = Field(default=None, description="inline ensemble in the file format")
    method: str = "all"
    weights: Optional[List[float]] = None
    format: Literal["json", "csv"] = "json"
    seed: Optional[int] = None
    resolution: int = Field(default=101, ge=2)
    trials: int = Field(default=100, ge=1)
    out: Optional[Path] = None

    @field_validator("method")
    @classmethod
    def known_methods(cls, value: str) -> str:
        for name in _split_methods(value):
            if name in ("all", "opt", "custom"):
                continue
            weighting_from_label(name)
        return value

    @model_validator(mode="after")
    def one_source(self) -> "RunConfig":
        if self.input is not None and self.ensemble is not None:
            raise ValueError("give either an input path or an inline ensemble, not both")
        if "custom" in _split_methods(self.method) and not self.weights:
            raise ValueError("method 'custom' needs --weights")
        return self


def _split_methods(value: str) -> List[str]:
    return [name.strip().lower() for name in value.split(",") if name.strip()]


def load_run_ensemble(config: RunConfig) -> PureStateEnsemble:
    if config.input is not None:
        return load_ensemble(config.input)
    if config.ensemble is not None:
        return ensemble_from_dict(config.ensemble)
    raise ValueError(f"{config.command} needs an ensemble (--input PATH)")


def _metadata(command: str, e: Optional[PureStateEnsemble] = None, seed: Optional[int] = None) -> ReportMetadata:
    return ReportMetadata(command=command, ensemble_hash=ensemble_hash(e) if e is not None else None, seed=seed)


def _custom_weights(weights: Sequence[float], e: PureStateEnsemble) -> WeightVector:
    w = WeightVector.create(weights)
    if len(w) != e.m:
        raise DimensionMismatchError(f"{len(w)} weights for {e.m} states")
    return w


def _try_certificate(fn, *args) -> tuple[Optional[Certificate], Optional[str]]:
    try:
        return fn(*args), None
    except CertificateInapplicableError as exc:
        return None, str(exc)


# ---------- discriminate ----------
def cmd_discriminate(config: RunConfig, settings: Optional[IterationSettings] = None) -> DiscriminationReport:
    """Failure rates for the requested methods, their certificates and, with a certified optimum, the bound suite."""
    e = load_run_ensemble(config)
    methods = _split_methods(config.method)
    if "all" in methods:
        methods = list(ALL_METHODS) + (["custom"] if config.weights else [])
    logger.info("discriminate: %d states in dimension %d, methods %s", e.m, e.dim, ",".join(methods))

    rates: Dict[str, Optional[float]] = {}
    certificates: Dict[str, Certificate] = {}
    extras: Dict[str, Any] = {}
    for name in methods:
        if name == "opt":
            continue
        if name == "custom":
            w = _custom_weights(config.weights or [], e)
            rates["custom"] = gram_failure_rate(e, w)
            cert, reason = _try_certificate(belavkin_certificate, e, w)
            if cert is not None:
                certificates["custom"] = cert
            else:
                extras.setdefault("inapplicable", {})["custom"] = reason
            continue
        weighting = weighting_from_label(name)
        rates[weighting.label] = power_failure_rate(e, weighting)
    if "pgm" in rates:
        certificates["pgm"] = pgm_condition(e)

    status: Literal["ok", "uncertified"] = "ok"
    bounds = None
    if "opt" in methods:
        result = solve(e, settings)
        rates["opt"] = result.failure_rate
        certificates["opt"] = result.certificate
        extras["opt"] = {
            "converged": result.converged,
            "iterations": result.iterations,
            "increases": result.increases,
            "damping": result.damping,
            "weights": result.weights.weights.tolist(),
        }
        if result.converged:
            bounds = check_bounds(e, result.failure_rate, result.certificate)
        else:
            status = "uncertified"

    return DiscriminationReport(
        status=status,
        failure_rates=rates,
        certificates=certificates,
        bounds=bounds,
        ensemble=ensemble_to_dict(e),
        extras=extras,
        metadata=_metadata("discriminate", e, config.seed),
    )


# ---------- counterexample ----------
def cmd_counterexample(seed: Optional[int] = None, scale: float = 1e-4) -> DiscriminationReport:
    """Three qubit states where the most probable one is never detected by the optimal measurement.

    Also checks that Holevo's weighting stays worse than the PGM after
    embedding in three dimensions and perturbing the states by ``scale``.
    """
    e = counterexample_ensemble()
    povm = counterexample_povm()
    opt_fail = failure_rate(e, povm)
    lagrange = lagrange_certificate(e, povm)
    detected = e.priors * detection_probabilities(e, povm)
    most_likely = int(np.argmax(e.priors))

    rates: Dict[str, Optional[float]] = {name: power_failure_rate(e, name) for name in ("pgm", "holevo", "cubic")}
    rates["opt"] = opt_fail

    moved = perturb(embed(e, 3), scale, seed=0 if seed is None else seed)
    moved_rates = {name: power_failure_rate(moved, name) for name in ("pgm", "holevo")}

    extras = {
        "priors": e.priors.tolist(),
        "detected": detected.tolist(),
        "most_likely": most_likely + 1,
        "most_likely_never_detected": bool(detected[most_likely] <= lagrange.tolerance),
        "holevo_worse_than_pgm": rates["holevo"] > rates["pgm"],
        "perturbed": {
            "scale": scale,
            "failure_rates": moved_rates,
            "holevo_worse_than_pgm": moved_rates["holevo"] > moved_rates["pgm"],
        },
    }
    logger.info("counterexample: holevo %.6f, pgm %.6f, opt %.6f", rates["holevo"], rates["pgm"], opt_fail)
    return DiscriminationReport(
        status="ok" if lagrange.passed else "uncertified",
        failure_rates=rates,
        certificates={"opt": lagrange, "opt-weights": belavkin_certificate(e, optimal_weights(e, povm))},
        bounds=check_bounds(e, opt_fail, lagrange) if lagrange.passed else None,
        ensemble=ensemble_to_dict(e, label="counterexample"),
        extras=extras,
        metadata=_metadata("counterexample", e, seed),
    )


# ---------- figure data ----------
def cmd_figure_data(figure: Figure, resolution: int) -> pd.DataFrame:
    """Ratio grid P_fail^method / P_fail^opt with columns p, theta, ratio.

    ``fig1`` stacks the PGM and Holevo grids and adds a ``method`` column.
    """
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    p_samples, theta_samples = grid_axes(resolution)
    methods = FIGURES[figure]
    frames = []
    for method in methods:
        frame = ratio_grid(method, p_samples, theta_samples).to_frame()
        if len(methods) > 1:
            frame["method"] = method
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def cmd_supremum(methods: Sequence[str], search: Optional[SupremumSearch] = None) -> DiscriminationReport:
    suprema = {}
    for method in methods:
        found = supremum_ratio(method, search)
        suprema[found.method] = {"grid_ratio": found.grid_ratio, "ratio": found.ratio, "p": found.p, "theta": found.theta}
    return DiscriminationReport(extras={"suprema": suprema}, metadata=_metadata("figure-data"))


# ---------- asymptotic sweep ----------
def default_theta_schedule() -> List[float]:
    return [HALF_PI - 10.0 ** (-k) for k in range(1, 7)]


def cmd_asymptotic_sweep(
    c: Sequence[float], p1: float = 0.5, theta_schedule: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """Ratios for W_k = c_k p_k^2 as theta approaches pi/2, against the analytic limit."""
    if len(c) != 2:
        raise DimensionMismatchError(f"the sweep takes two c values, got {len(c)}")
    c1, c2 = float(c[0]), float(c[1])
    limit = asymptotic_ratio_limit(p1, c1, c2)
    rows = []
    for theta in theta_schedule or default_theta_schedule():
        ratio = empirical_ratio(p1, c1, c2, theta)
        rows.append({"theta": theta, "ratio": ratio, "limit": limit, "abs_error": abs(ratio - limit)})
    return pd.DataFrame(rows, columns=["theta", "ratio", "limit", "abs_error"])


def pgm_sweep_constants(p1: float) -> List[float]:
    """c_k = 1 / p_k turns W_k = c_k p_k^2 into the PGM weighting."""
    return [1.0 / p1, 1.0 / (1.0 - p1)]


# ---------- random experiment ----------
def cmd_random_experiment(
    dim: int,
    m: int,
    priors: Optional[Sequence[float]],
    trials: int,
    seed: int,
    center: Optional[PureStateEnsemble] = None,
    scale: float = 1e-4,
    settings: Optional[IterationSettings] = None,
) -> DiscriminationReport:
    """PGM, Holevo, cubic and optimal failure rates over random ensembles.

    States are Haar-random, or perturbations of ``center`` by ``scale`` when
    a center is given. Everything draws from one generator seeded with ``seed``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    records = []
    for trial in range(trials):
        if center is not None:
            e = perturb(center, scale, rng=rng)
        else:
            e = haar_random_ensemble(dim, m, priors, rng=rng)
        result = solve(e, settings)
        row = {name: power_failure_rate(e, name) for name in NAMED_POWERS}
        row.update(trial=trial, opt=result.failure_rate, converged=result.converged)
        records.append(row)
    frame = pd.DataFrame(records, columns=["trial", "pgm", "holevo", "cubic", "opt", "converged"])
    beats = frame["holevo"] <= frame["pgm"] + _BEATS_SLACK
    unconverged = int((~frame["converged"]).sum())
    if unconverged:
        logger.warning("%d of %d trials ended without a certified optimum", unconverged, trials)
    summary = {
        "trials": trials,
        "holevo_beats_pgm_fraction": float(beats.mean()),
        "unconverged": unconverged,
    }
    return DiscriminationReport(
        failure_rates={f"mean_{name}": float(frame[name].mean()) for name in ("pgm", "holevo", "cubic", "opt")},
        extras={
            "summary": summary,
            "dim": center.dim if center is not None else dim,
            "m": center.m if center is not None else m,
            "trials": records,
        },
        metadata=_metadata("random-experiment", center, seed),
    )


# ---------- verify ----------
def cmd_verify(config: RunConfig) -> DiscriminationReport:
    """Certificate suite for the BWSRM of an ensemble and explicit (or power) weights."""
    e = load_run_ensemble(config)
    if config.weights:
        w = _custom_weights(config.weights, e)
    else:
        w = weighting_from_label(config.method if config.method not in ("all", "opt") else "holevo").weights(e.priors)
    povm = build_bwsrm(e, w)
    certificates: Dict[str, Certificate] = {"lagrange": lagrange_certificate(e, povm)}
    inapplicable: Dict[str, str] = {}
    for name, fn in (("belavkin", belavkin_certificate), ("weighted-sufficient", weighted_sufficient_certificate)):
        cert, reason = _try_certificate(fn, e, w)
        if cert is not None:
            certificates[name] = cert
        else:
            inapplicable[name] = reason or ""
    passed = certificates["lagrange"].passed
    logger.info("verify: lagrange %s", "passed" if passed else "failed")
    return DiscriminationReport(
        status="ok" if passed else "uncertified",
        failure_rates={"bwsrm": gram_failure_rate(e, w)},
        certificates=certificates,
        ensemble=ensemble_to_dict(e),
        extras={"weights": w.weights.tolist(), "inapplicable": inapplicable},
        metadata=_metadata("verify", e, config.seed),
    )
