"""Belavkin weighted square-root measurements (BWSRMs).

For weights W_k >= 0 and S = sum_l W_l |psi_l><psi_l| the measurement is

    M_k = S^{-1/2} W_k |psi_k><psi_k| S^{-1/2}

on the span of the weighted states. Success rates are evaluated by default in
the m x m Gram form sum_k (p_k / W_k) ((A^dagger A)^{1/2})_kk^2, which avoids
building the dim x dim operators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import svd

from belavkin.components.ensemble import (
    Povm,
    PureStateEnsemble,
    WeightVector,
    clip_probability,
    weighted_gram,
)
from belavkin.components.errors import DimensionMismatchError, InvalidWeightsError
from belavkin.components.operators import HermitianOperator, frac_power
from belavkin.components.settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

NAMED_POWERS = {"pgm": 1.0, "holevo": 2.0, "cubic": 3.0}


@dataclass(frozen=True)
class PowerWeighting:
    """W_k = p_k ** r."""

    r: float

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise InvalidWeightsError(f"power must be positive, got {self.r}")

    def weights(self, priors: np.ndarray) -> WeightVector:
        return WeightVector.create(np.power(priors, self.r))

    @property
    def label(self) -> str:
        for name, r in NAMED_POWERS.items():
            if r == self.r:
                return name
        return f"power-{self.r:g}"


def weighting_from_label(label: Union[str, float, PowerWeighting]) -> PowerWeighting:
    if isinstance(label, PowerWeighting):
        return label
    if isinstance(label, (int, float)):
        return PowerWeighting(float(label))
    key = label.strip().lower()
    if key in NAMED_POWERS:
        return PowerWeighting(NAMED_POWERS[key])
    if key.startswith("r="):
        key = key[2:]
    try:
        return PowerWeighting(float(key))
    except ValueError as exc:
        raise ValueError(f"unknown weighting {label!r}; use pgm, holevo, cubic or a positive power") from exc


def _check_lengths(e: PureStateEnsemble, w: WeightVector) -> None:
    if len(w) != e.m:
        raise DimensionMismatchError(f"{len(w)} weights for {e.m} states")


def weighted_frame_operator(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> HermitianOperator:
    """S = sum_l W_l |psi_l><psi_l|."""
    _check_lengths(e, w)
    psi = e.states
    return HermitianOperator.from_matrix((psi * w.weights) @ psi.conj().T, tol)


def _polar_frame(e: PureStateEnsemble, w: WeightVector, tol: Tolerances) -> Tuple[np.ndarray, np.ndarray]:
    """Frame vectors and the support projector from the thin SVD A = U s V^dagger of A = [sqrt(W_k) psi_k].

    S^{-1/2} A is the polar factor U V^dagger over the singular values the
    support cutoff keeps (s_i^2 > rank * s_max^2), so the elements sum to the
    projector U U^dagger however ill-conditioned S is.
    """
    _check_lengths(e, w)
    u, s, vh = svd(e.states * np.sqrt(w.weights), full_matrices=False)
    keep = s**2 > tol.rank * s[0] ** 2
    u, vh = u[:, keep], vh[keep]
    return u @ vh, u @ u.conj().T


def bwsrm_vectors(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Columns e_k = S^{-1/2} sqrt(W_k) psi_k, so that M_k = |e_k><e_k|."""
    return _polar_frame(e, w, tol or DEFAULT_TOLERANCES)[0]


def build_bwsrm(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> Povm:
    tol = tol or DEFAULT_TOLERANCES
    vectors, support = _polar_frame(e, w, tol)
    elements = np.einsum("ik,jk->kij", vectors, vectors.conj())
    # Zero-weight outcomes keep an exact zero element so indices stay aligned with states.
    elements[~w.positive] = 0.0
    return Povm.create(elements, support, tol)


def build_power_bwsrm(e: PureStateEnsemble, r: Union[PowerWeighting, float], tol: Optional[Tolerances] = None) -> Povm:
    weighting = weighting_from_label(r)
    return build_bwsrm(e, weighting.weights(e.priors), tol)


def pgm(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> Povm:
    return build_power_bwsrm(e, PowerWeighting(1.0), tol)


def holevo(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> Povm:
    return build_power_bwsrm(e, PowerWeighting(2.0), tol)


def cubic(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> Povm:
    return build_power_bwsrm(e, PowerWeighting(3.0), tol)


def gram_root_diagonal(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Diagonal of (A^dagger A)^{1/2}; real and nonnegative."""
    root = frac_power(weighted_gram(e, w, tol), 0.5, tol).matrix
    return np.clip(np.real(np.diag(root)), 0.0, None)


def gram_detection_probabilities(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> np.ndarray:
    """<psi_k|M_k|psi_k> for the BWSRM, computed in the Gram form; zero where W_k = 0."""
    diag = gram_root_diagonal(e, w, tol)
    out = np.zeros(e.m)
    pos = w.positive
    out[pos] = diag[pos] ** 2 / w.weights[pos]
    return out


def gram_success_rate(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> float:
    tol = tol or DEFAULT_TOLERANCES
    value = float(np.dot(e.priors, gram_detection_probabilities(e, w, tol)))
    return clip_probability(value, tol, "success rate")


def gram_failure_rate(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> float:
    return 1.0 - gram_success_rate(e, w, tol)


def power_failure_rate(e: PureStateEnsemble, r: Union[PowerWeighting, float, str], tol: Optional[Tolerances] = None) -> float:
    return gram_failure_rate(e, weighting_from_label(r).weights(e.priors), tol)


def pgm_gram_diagonal(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Diagonal of sqrt(P), P_ij = sqrt(p_i p_j)<psi_i, psi_j>; constant iff the PGM condition holds."""
    return gram_root_diagonal(e, WeightVector.create(e.priors), tol)
