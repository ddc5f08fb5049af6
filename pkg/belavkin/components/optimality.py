"""Optimality certificates and failure-rate bounds for pure-state measurements."""

from __future__ import annotations

import logging
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from belavkin.components.bwsrm import (
    gram_detection_probabilities,
    gram_failure_rate,
    pgm_gram_diagonal,
    weighted_frame_operator,
)
from belavkin.components.ensemble import (
    Povm,
    PureStateEnsemble,
    WeightVector,
    detection_probabilities,
)
from belavkin.components.errors import (
    CertificateInapplicableError,
    DimensionMismatchError,
    UncertifiedOptimumError,
)
from belavkin.components.operators import eig, frac_power, is_psd, support_mask
from belavkin.components.settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

CertificateKind = Literal["belavkin", "lagrange", "weighted-sufficient", "pgm-sufficient"]


class Certificate(BaseModel):
    kind: CertificateKind
    passed: bool
    worst_margin: float
    tolerance: float
    diagnostics: List[float] = Field(default_factory=list, description="per-outcome values")
    detail: Optional[str] = None

    @model_validator(mode="after")
    def consistent(self) -> "Certificate":
        if self.passed != (self.worst_margin >= -self.tolerance):
            raise ValueError("passed must agree with worst_margin >= -tolerance")
        return self


class BoundReport(BaseModel):
    optimal_failure: float
    pgm_failure: float
    barnum_knill_upper: float = Field(..., description="P_opt (1 + P_succ_opt)")
    hayden_upper: float = Field(..., description="sum_{i != j} p_i |<psi_i, psi_j>|^2")
    slacks: Dict[str, float]
    holds: bool
    violations: List[str] = Field(default_factory=list)


def _certificate(kind: CertificateKind, margins: np.ndarray, tolerance: float, diagnostics: np.ndarray, detail: Optional[str] = None) -> Certificate:
    worst = float(np.min(margins)) if margins.size else 0.0
    return Certificate(
        kind=kind,
        passed=worst >= -tolerance,
        worst_margin=worst,
        tolerance=tolerance,
        diagnostics=[float(v) for v in diagnostics],
        detail=detail,
    )


def _rank(matrix: np.ndarray, tol: Tolerances) -> int:
    return int(support_mask(eig(matrix, tol), tol).sum())


# ---------- Certificates ----------
def belavkin_certificate(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> Certificate:
    """Test p_k <psi_k|Lambda^{-1}|psi_k> <= 1, with equality where W_k > 0.

    Lambda = S^{1/2} for S = sum W_l |psi_l><psi_l|. Weights matter only up to an
    overall scale, so the values are first rescaled to have mean 1 over the
    positively weighted outcomes.
    """
    tol = tol or DEFAULT_TOLERANCES
    frame = weighted_frame_operator(e, w, tol)
    present = e.priors > 0
    span = (e.states[:, present] @ e.states[:, present].conj().T)
    frame_rank, span_rank = _rank(frame.matrix, tol), _rank(span, tol)
    if frame_rank < span_rank:
        raise CertificateInapplicableError(
            f"Lambda has rank {frame_rank} but the ensemble spans {span_rank} dimensions; it is not invertible on the span"
        )
    lam_inv = frac_power(frame, -0.5, tol).matrix
    raw = e.priors * np.real(np.einsum("ik,ij,jk->k", e.states.conj(), lam_inv, e.states))
    pos = w.positive
    values = raw / float(np.mean(raw[pos]))
    margins = np.where(pos, -np.abs(values - 1.0), 1.0 - values)
    cert = _certificate("belavkin", margins, tol.cert, values)
    logger.debug("belavkin certificate: passed=%s worst=%.3e", cert.passed, cert.worst_margin)
    return cert


def lagrange_operator(e: PureStateEnsemble, m: Povm) -> np.ndarray:
    """L = sum_k p_k M_k |psi_k><psi_k|."""
    if m.dim != e.dim or m.m != e.m:
        raise DimensionMismatchError(f"POVM ({m.m} outcomes on dim {m.dim}) does not match ensemble ({e.m} states in dim {e.dim})")
    psi = e.states
    applied = np.einsum("kij,jk->ik", m.elements, psi)
    return (applied * e.priors) @ psi.conj().T


def lagrange_certificate(e: PureStateEnsemble, m: Povm, tol: Optional[Tolerances] = None) -> Certificate:
    """(L + L^dagger)/2 - p_k |psi_k><psi_k| >= 0 for every k."""
    tol = tol or DEFAULT_TOLERANCES
    lag = lagrange_operator(e, m)
    sym = 0.5 * (lag + lag.conj().T)
    margins = np.array([is_psd(sym - e.priors[k] * e.projector(k), tol).margin for k in range(e.m)])
    return _certificate("lagrange", margins, tol.psd, margins)


def weighted_sufficient_certificate(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> Certificate:
    """p_k^2 <psi_k|M_k|psi_k> = c W_k for all k (strictly positive weights only)."""
    tol = tol or DEFAULT_TOLERANCES
    if len(w) != e.m:
        raise DimensionMismatchError(f"{len(w)} weights for {e.m} states")
    if not np.all(w.positive):
        raise CertificateInapplicableError("the sufficient condition needs every weight strictly positive")
    q = e.priors**2 * gram_detection_probabilities(e, w, tol) / w.weights
    spread = float(q.max() / q.min()) if q.min() > 0 else np.inf
    return _certificate("weighted-sufficient", np.array([1.0 - spread]), tol.cert, q)


def pgm_condition(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> Certificate:
    """Sufficient PGM optimality: p_k <psi_k|M_k|psi_k> constant, i.e. a constant diagonal of sqrt(P)."""
    tol = tol or DEFAULT_TOLERANCES
    success = pgm_gram_diagonal(e, tol) ** 2
    spread = float(success.max() / success.min()) if success.min() > 0 else np.inf
    return _certificate("pgm-sufficient", np.array([1.0 - spread]), tol.cert, success)


def optimal_weights(e: PureStateEnsemble, m: Povm) -> WeightVector:
    """W_k = p_k^2 <psi_k|M_k|psi_k>; rebuilds an optimal POVM as a BWSRM."""
    return WeightVector.create(e.priors**2 * np.clip(detection_probabilities(e, m), 0.0, None))


# ---------- Bounds ----------
def hayden_bound(e: PureStateEnsemble) -> float:
    overlaps = np.abs(e.overlaps()) ** 2
    np.fill_diagonal(overlaps, 0.0)
    return float(np.dot(e.priors, overlaps.sum(axis=1)))


def check_bounds(
    e: PureStateEnsemble,
    p_fail_opt: float,
    certificate: Optional[Certificate],
    tol: Optional[Tolerances] = None,
) -> BoundReport:
    """Barnum-Knill chain and Hayden bound for the PGM against a certified optimum."""
    tol = tol or DEFAULT_TOLERANCES
    if certificate is None or certificate.kind != "lagrange" or not certificate.passed:
        raise UncertifiedOptimumError("check_bounds needs an optimum carrying a passing Lagrange certificate")
    pgm = gram_failure_rate(e, WeightVector.create(e.priors), tol)
    upper = p_fail_opt * (2.0 - p_fail_opt)
    hayden = hayden_bound(e)
    slacks = {
        "optimal<=pgm": pgm - p_fail_opt,
        "pgm<=barnum_knill": upper - pgm,
        "barnum_knill<=twice_optimal": 2.0 * p_fail_opt - upper,
        "pgm<=hayden": hayden - pgm,
    }
    violations = [name for name, slack in slacks.items() if slack < -tol.psd]
    if violations:
        logger.warning("bound violations: %s", ", ".join(violations))
    return BoundReport(
        optimal_failure=p_fail_opt,
        pgm_failure=pgm,
        barnum_knill_upper=upper,
        hayden_upper=hayden,
        slacks=slacks,
        holds=not violations,
        violations=violations,
    )
