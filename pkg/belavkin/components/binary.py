"""Two-state closed forms, failure-ratio landscapes and the asymptotic limit.

A binary ensemble is parametrized by the prior ``p`` of the first state and an
angle ``theta`` in [0, pi/2] with cos(theta) = |<psi_1, psi_2>|. Phases play no
role in any quantity here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from belavkin.components.bwsrm import PowerWeighting, bwsrm_vectors, weighting_from_label
from belavkin.components.ensemble import PureStateEnsemble, WeightVector
from belavkin.components.errors import DimensionMismatchError, NonOrthonormalError
from belavkin.components.settings import DEFAULT_TOLERANCES, SupremumSearch, Tolerances

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2
# cos(HALF_PI) is 6e-17 in floating point, not 0.
ORTHOGONAL_COS = 1e-15


@dataclass(frozen=True)
class BinaryEnsembleParams:
    p: float
    theta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.theta <= HALF_PI + 1e-15:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")

    @property
    def overlap(self) -> float:
        return math.cos(self.theta)


# ---------- Closed forms (vectorized over numpy arrays) ----------
def overlap_squared(theta: npt.ArrayLike) -> np.ndarray:
    """cos^2 theta, exactly zero within a few ulps of pi/2."""
    c = np.cos(np.asarray(theta, dtype=np.float64))
    return np.where(np.abs(c) < ORTHOGONAL_COS, 0.0, c * c)


def optimal_failure(p: npt.ArrayLike, theta: npt.ArrayLike) -> np.ndarray:
    """Helstrom failure rate 1/2 - sqrt(1/4 - p(1-p)cos^2 theta).

    Evaluated as x / (1/2 + sqrt(1/4 - x)) to avoid cancellation near orthogonality.
    """
    p = np.asarray(p, dtype=np.float64)
    x = p * (1.0 - p) * overlap_squared(theta)
    return x / (0.5 + np.sqrt(np.clip(0.25 - x, 0.0, None)))


def weighted_failure(
    p: npt.ArrayLike, theta: npt.ArrayLike, w1: npt.ArrayLike, w2: npt.ArrayLike
) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    numer = (p * w2 + (1.0 - p) * w1) * overlap_squared(theta)
    denom = w1 + w2 + 2.0 * np.sqrt(w1 * w2) * np.abs(np.sin(theta))
    return numer / denom


def power_failure(p: npt.ArrayLike, theta: npt.ArrayLike, r: float) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return weighted_failure(p, theta, p**r, (1.0 - p) ** r)


def failure_ratio(p: npt.ArrayLike, theta: npt.ArrayLike, r: float) -> np.ndarray:
    """P_fail(BWSRM-r) / P_fail(optimal); NaN where the optimum is exactly zero."""
    opt = optimal_failure(p, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = power_failure(p, theta, r) / opt
    return np.where(opt > 0.0, ratio, np.nan)


def optimal_binary_failure(b: BinaryEnsembleParams) -> float:
    return float(optimal_failure(b.p, b.theta))


def weighted_binary_failure(b: BinaryEnsembleParams, w1: float, w2: float) -> float:
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise ValueError("weights must be nonnegative and not both zero")
    return float(weighted_failure(b.p, b.theta, w1, w2))


def pgm_minus_holevo(p: npt.ArrayLike, theta: npt.ArrayLike) -> np.ndarray:
    """P_fail^PGM - P_fail^Holevo; nonnegative on every binary ensemble."""
    return power_failure(p, theta, 1.0) - power_failure(p, theta, 2.0)


# ---------- Ratio landscapes ----------
@dataclass(frozen=True)
class RatioGrid:
    """Ratios indexed as ``ratios[i, j]`` for ``p_samples[i]`` and ``theta_samples[j]``."""

    method: str
    p_samples: np.ndarray
    theta_samples: np.ndarray
    ratios: np.ndarray = field(repr=False)

    def argmax(self) -> Tuple[float, float, float]:
        if np.all(np.isnan(self.ratios)):
            raise ValueError("grid has no defined cells")
        i, j = np.unravel_index(np.nanargmax(self.ratios), self.ratios.shape)
        return float(self.ratios[i, j]), float(self.p_samples[i]), float(self.theta_samples[j])

    def to_frame(self) -> pd.DataFrame:
        pp, tt = np.meshgrid(self.p_samples, self.theta_samples, indexing="ij")
        return pd.DataFrame({"p": pp.ravel(), "theta": tt.ravel(), "ratio": self.ratios.ravel()})


def grid_axes(resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    return np.linspace(0.0, 1.0, resolution), np.linspace(0.0, HALF_PI, resolution)


def ratio_grid(
    method: Union[PowerWeighting, str, float],
    p_samples: npt.ArrayLike,
    theta_samples: npt.ArrayLike,
) -> RatioGrid:
    weighting = weighting_from_label(method)
    p = np.asarray(p_samples, dtype=np.float64)
    theta = np.asarray(theta_samples, dtype=np.float64)
    if np.any((p < 0) | (p > 1)) or np.any((theta < 0) | (theta > HALF_PI + 1e-15)):
        raise ValueError("grid samples must lie in p in [0, 1], theta in [0, pi/2]")
    pp, tt = np.meshgrid(p, theta, indexing="ij")
    ratios = failure_ratio(pp, tt, weighting.r)
    logger.debug("ratio grid %s: %d x %d, %d undefined cells", weighting.label, p.size, theta.size, int(np.isnan(ratios).sum()))
    return RatioGrid(weighting.label, p, theta, ratios)


@dataclass(frozen=True)
class Supremum:
    method: str
    ratio: float
    p: float
    theta: float
    grid_ratio: float


def supremum_ratio(method: Union[PowerWeighting, str, float], search: Optional[SupremumSearch] = None) -> Supremum:
    """Maximize the failure ratio: dense grid scan, then coordinate ascent with step halving.

    Suprema approached on the boundary (p -> 0, say) are reported at the
    closest interior point the ascent reaches. The ratio is unchanged by
    swapping the two states, so the reported point has p >= 1/2.
    """
    search = search or SupremumSearch()
    weighting = weighting_from_label(method)
    grid = ratio_grid(weighting, *grid_axes(search.grid))
    best, p, theta = grid.argmax()
    grid_best = best

    def value(pc: float, tc: float) -> float:
        if not (0.0 < pc < 1.0 and 0.0 <= tc < HALF_PI):
            return -math.inf
        return float(failure_ratio(pc, tc, weighting.r))

    step_p = 1.0 / (search.grid - 1)
    step_t = HALF_PI / (search.grid - 1)
    while step_p > search.step_floor or step_t > search.step_floor:
        moved = False
        for dp, dt in ((step_p, 0.0), (-step_p, 0.0), (0.0, step_t), (0.0, -step_t)):
            candidate = value(p + dp, theta + dt)
            if candidate > best:
                best, p, theta = candidate, p + dp, theta + dt
                moved = True
                break
        if not moved:
            step_p *= 0.5
            step_t *= 0.5
    if p < 0.5:
        p = 1.0 - p
    logger.info("supremum %s: ratio %.10g at p=%.10g theta=%.10g", weighting.label, best, p, theta)
    return Supremum(weighting.label, best, p, theta, grid_best)


# ---------- Asymptotic optimality ----------
def asymptotic_ratio_limit(p1: float, c1: float, c2: float) -> float:
    """Limit of P_fail^W / P_fail^opt as theta -> pi/2 for W_k = c_k p_k^2."""
    if not 0.0 < p1 < 1.0:
        raise ValueError("p1 must lie strictly between 0 and 1")
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    p2 = 1.0 - p1
    return (c1 * p1 + c2 * p2) / (math.sqrt(c1) * p1 + math.sqrt(c2) * p2) ** 2


def empirical_ratio(p1: float, c1: float, c2: float, theta: float) -> float:
    p2 = 1.0 - p1
    w1, w2 = c1 * p1**2, c2 * p2**2
    return float(weighted_failure(p1, theta, w1, w2) / optimal_failure(p1, theta))


# ---------- Holevo cost ----------
def holevo_cost(e: PureStateEnsemble, orthonormal_set: npt.ArrayLike, w: WeightVector, tol: Optional[Tolerances] = None) -> float:
    """sum_k W_k ||psi_k - e_k||^2 over an orthonormal set given as columns."""
    tol = tol or DEFAULT_TOLERANCES
    frame = np.asarray(orthonormal_set, dtype=np.complex128)
    if frame.shape != e.states.shape:
        raise DimensionMismatchError(f"orthonormal set has shape {frame.shape}, states have {e.states.shape}")
    if len(w) != e.m:
        raise DimensionMismatchError(f"{len(w)} weights for {e.m} states")
    gram_gap = float(np.max(np.abs(frame.conj().T @ frame - np.eye(e.m))))
    if gram_gap > tol.orthonormal:
        raise NonOrthonormalError(f"set is not orthonormal (max Gram deviation {gram_gap:.3e})")
    return float(np.dot(w.weights, np.linalg.norm(e.states - frame, axis=0) ** 2))


def minimizing_frame(e: PureStateEnsemble, cost_weights: WeightVector, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Minimizer of sum_k a_k ||psi_k - e_k||^2: the BWSRM vectors for weights a_k^2."""
    return bwsrm_vectors(e, WeightVector.create(cost_weights.weights**2), tol)
