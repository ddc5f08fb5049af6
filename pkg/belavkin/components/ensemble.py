"""Pure-state ensembles, weight vectors, POVMs and exact success rates."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.stats import unitary_group

from belavkin.components.errors import (
    DimensionMismatchError,
    EnsembleParseError,
    InvalidWeightsError,
    NotPSDError,
)
from belavkin.components.operators import HermitianOperator, is_psd
from belavkin.components.settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _normalized_priors(priors: npt.ArrayLike, tol: Tolerances) -> np.ndarray:
    p = np.asarray(priors, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("priors must not be empty")
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise ValueError(f"priors must be finite and nonnegative, got {p.tolist()}")
    total = float(p.sum())
    if abs(total - 1.0) > tol.state_norm:
        if abs(total - 1.0) > tol.renormalize:
            raise ValueError(f"priors must sum to 1, got {total:.12g}")
        logger.warning("rescaling priors summing to %.15g", total)
        p = p / total
    return p


# ---------- Domain values ----------
@dataclass(frozen=True)
class PureStateEnsemble:
    """States as the columns of a ``dim x m`` matrix, with prior probabilities."""

    states: np.ndarray
    priors: np.ndarray

    @classmethod
    def create(
        cls,
        states: npt.ArrayLike,
        priors: npt.ArrayLike,
        tol: Optional[Tolerances] = None,
    ) -> "PureStateEnsemble":
        """Validate and build an ensemble; ``states`` holds one state per column.

        States whose norm is off by less than ``tol.renormalize`` are silently
        renormalized, anything worse is rejected.
        """
        tol = tol or DEFAULT_TOLERANCES
        psi = np.array(states, dtype=np.complex128)
        if psi.ndim == 1:
            psi = psi[:, None]
        if psi.ndim != 2:
            raise DimensionMismatchError(f"states must form a dim x m matrix, got shape {psi.shape}")
        p = _normalized_priors(priors, tol)
        if p.size != psi.shape[1]:
            raise DimensionMismatchError(f"{psi.shape[1]} states but {p.size} priors")
        norms = np.linalg.norm(psi, axis=0)
        off = np.abs(norms - 1.0)
        bad = np.flatnonzero(off > tol.renormalize)
        if bad.size:
            k = int(bad[0])
            raise ValueError(f"state {k} has norm {norms[k]:.9g}; states must be unit vectors")
        if np.any(off > tol.state_norm):
            logger.debug("renormalizing states with max norm deviation %.3e", float(off.max()))
        psi = psi / norms
        return cls(_frozen(psi), _frozen(p))

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def m(self) -> int:
        return self.states.shape[1]

    def state(self, k: int) -> np.ndarray:
        return self.states[:, k]

    def projector(self, k: int) -> np.ndarray:
        psi = self.states[:, k]
        return np.outer(psi, psi.conj())

    def overlaps(self) -> np.ndarray:
        """Gram matrix of inner products <psi_i, psi_j>."""
        return self.states.conj().T @ self.states


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights W_k, at least one strictly positive."""

    weights: np.ndarray

    @classmethod
    def create(cls, weights: npt.ArrayLike) -> "WeightVector":
        w = np.array(weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise InvalidWeightsError("weights must not be empty")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InvalidWeightsError(f"weights must be finite and nonnegative, got {w.tolist()}")
        if not np.any(w > 0):
            raise InvalidWeightsError("at least one weight must be positive")
        return cls(_frozen(w))

    def __len__(self) -> int:
        return self.weights.size

    @property
    def positive(self) -> np.ndarray:
        return self.weights > 0

    def scaled(self, factor: float) -> "WeightVector":
        if not factor > 0:
            raise InvalidWeightsError("scale factor must be positive")
        return WeightVector.create(self.weights * factor)


@dataclass(frozen=True)
class Povm:
    """Measurement elements ``M_k`` (shape ``m x dim x dim``) complete on ``support``."""

    elements: np.ndarray
    support: np.ndarray

    @classmethod
    def create(
        cls,
        elements: Sequence[npt.ArrayLike] | np.ndarray,
        support: Optional[npt.ArrayLike] = None,
        tol: Optional[Tolerances] = None,
    ) -> "Povm":
        tol = tol or DEFAULT_TOLERANCES
        ops = [HermitianOperator.from_matrix(el, tol).matrix for el in elements]
        if not ops:
            raise DimensionMismatchError("a POVM needs at least one element")
        dim = ops[0].shape[0]
        if any(op.shape != (dim, dim) for op in ops):
            raise DimensionMismatchError("POVM elements must share one dimension")
        proj = np.eye(dim, dtype=np.complex128) if support is None else HermitianOperator.from_matrix(support, tol).matrix
        if proj.shape != (dim, dim):
            raise DimensionMismatchError(f"support has shape {proj.shape}, elements are {dim}x{dim}")
        for k, op in enumerate(ops):
            check = is_psd(op, tol)
            if not check.passed:
                logger.debug("POVM element %d fails PSD check", k)
                raise NotPSDError(check.margin, tol.psd)
        total = np.sum(ops, axis=0)
        gap = float(np.max(np.abs(total - proj)))
        if gap > tol.recon:
            raise ValueError(f"POVM elements do not sum to the support projector (max deviation {gap:.3e})")
        return cls(_frozen(np.array(ops)), _frozen(np.array(proj)))

    @property
    def m(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]


# ---------- Success rates ----------
def clip_probability(value: float, tol: Tolerances, label: str) -> float:
    if value < -tol.recon or value > 1.0 + tol.recon:
        raise ValueError(f"{label} {value:.12g} is outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def detection_probabilities(e: PureStateEnsemble, m: Povm) -> np.ndarray:
    """<psi_k|M_k|psi_k> for every k."""
    if m.dim != e.dim:
        raise DimensionMismatchError(f"POVM acts on dimension {m.dim}, ensemble lives in {e.dim}")
    if m.m != e.m:
        raise DimensionMismatchError(f"POVM has {m.m} outcomes for {e.m} states")
    psi = e.states
    return np.real(np.einsum("ik,kij,jk->k", psi.conj(), m.elements, psi))


def success_rate(e: PureStateEnsemble, m: Povm, tol: Optional[Tolerances] = None) -> float:
    tol = tol or DEFAULT_TOLERANCES
    value = float(np.dot(e.priors, detection_probabilities(e, m)))
    return clip_probability(value, tol, "success rate")


def failure_rate(e: PureStateEnsemble, m: Povm, tol: Optional[Tolerances] = None) -> float:
    return 1.0 - success_rate(e, m, tol)


def weighted_gram(e: PureStateEnsemble, w: WeightVector, tol: Optional[Tolerances] = None) -> HermitianOperator:
    """A^dagger A for A = sum_k sqrt(W_k)|psi_k><k|, i.e. entries sqrt(W_i W_j)<psi_i, psi_j>."""
    if len(w) != e.m:
        raise DimensionMismatchError(f"{len(w)} weights for {e.m} states")
    root = np.sqrt(w.weights)
    return HermitianOperator.from_matrix(root[:, None] * e.overlaps() * root[None, :], tol)


# ---------- Construction helpers ----------
def haar_random_ensemble(
    dim: int,
    m: int,
    priors: Optional[npt.ArrayLike] = None,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> PureStateEnsemble:
    """Independent Haar-random states: normalized standard complex Gaussian vectors.

    ``priors`` defaults to the uniform distribution.
    """
    if dim < 1 or m < 1:
        raise ValueError("dim and m must be at least 1")
    p = np.full(m, 1.0 / m) if priors is None else _normalized_priors(priors, DEFAULT_TOLERANCES)
    if p.size != m:
        raise DimensionMismatchError(f"{p.size} priors for {m} states")
    rng = rng if rng is not None else np.random.default_rng(seed)
    z = (rng.standard_normal((dim, m)) + 1j * rng.standard_normal((dim, m))) / np.sqrt(2)
    return PureStateEnsemble.create(z / np.linalg.norm(z, axis=0), p)


def haar_random_unitary(n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    if n == 1:
        phase = (rng or np.random.default_rng()).uniform(0, 2 * np.pi)
        return np.array([[np.exp(1j * phase)]])
    return unitary_group.rvs(n, random_state=rng)


def binary_ensemble(p: float, theta: float) -> PureStateEnsemble:
    """Real two-state realization with |<psi_1, psi_2>| = cos(theta)."""
    states = np.array([[1.0, math.cos(theta)], [0.0, math.sin(theta)]])
    return PureStateEnsemble.create(states, [p, 1.0 - p])


def counterexample_ensemble(theta: float = math.pi / 6) -> PureStateEnsemble:
    """Three linearly dependent qubit states whose most probable member is never detected optimally."""
    c, s = math.cos(theta), math.sin(theta)
    p1 = 1.0 / (2.0 + (c + s) * c)
    states = np.array([[c, c, 1.0], [s, -s, 0.0]])
    return PureStateEnsemble.create(states, [p1, p1, 1.0 - 2.0 * p1])


def counterexample_povm() -> Povm:
    plus = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]])
    minus = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return Povm.create([plus, minus, np.zeros((2, 2))])


def embed(e: PureStateEnsemble, dim: int) -> PureStateEnsemble:
    if dim < e.dim:
        raise DimensionMismatchError(f"cannot embed dimension {e.dim} into {dim}")
    states = np.zeros((dim, e.m), dtype=np.complex128)
    states[: e.dim] = e.states
    return PureStateEnsemble.create(states, e.priors)


def perturb(
    e: PureStateEnsemble,
    scale: float,
    seed: Optional[int] = None,
    direction: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> PureStateEnsemble:
    """Add ``scale * direction`` to the states and renormalize.

    ``direction`` defaults to a seeded complex Gaussian matrix with unit-norm columns.
    """
    if direction is None:
        rng = rng if rng is not None else np.random.default_rng(seed)
        direction = rng.standard_normal(e.states.shape) + 1j * rng.standard_normal(e.states.shape)
        direction = direction / np.linalg.norm(direction, axis=0)
    moved = e.states + scale * direction
    return PureStateEnsemble.create(moved / np.linalg.norm(moved, axis=0), e.priors)


def direct_sum(first: PureStateEnsemble, second: PureStateEnsemble, mix: float) -> PureStateEnsemble:
    """Block-diagonal direct sum with priors ``mix * p`` and ``(1 - mix) * q``."""
    if not 0.0 < mix < 1.0:
        raise ValueError("mix must lie strictly between 0 and 1")
    states = np.zeros((first.dim + second.dim, first.m + second.m), dtype=np.complex128)
    states[: first.dim, : first.m] = first.states
    states[first.dim :, first.m :] = second.states
    priors = np.concatenate([mix * first.priors, (1.0 - mix) * second.priors])
    return PureStateEnsemble.create(states, priors)


# ---------- JSON format ----------
class EnsembleFile(BaseModel):
    """On-disk ensemble: complex amplitudes as [re, im] pairs."""

    dim: int = Field(..., ge=1)
    states: List[List[Tuple[float, float]]]
    priors: List[float]
    label: Optional[str] = None

    @field_validator("priors")
    @classmethod
    def validate_priors(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("priors must not be empty")
        if any(p < 0 for p in value):
            raise ValueError("priors must be nonnegative")
        total = sum(value)
        if abs(total - 1.0) > DEFAULT_TOLERANCES.renormalize:
            raise ValueError(f"priors must sum to 1, got {total:.12g}")
        return value

    @model_validator(mode="after")
    def check_shapes(self) -> "EnsembleFile":
        if len(self.states) != len(self.priors):
            raise ValueError(f"{len(self.states)} states but {len(self.priors)} priors")
        for k, state in enumerate(self.states):
            if len(state) != self.dim:
                raise ValueError(f"state {k} has {len(state)} amplitudes, expected dim={self.dim}")
            norm = math.sqrt(sum(re * re + im * im for re, im in state))
            if abs(norm - 1.0) > DEFAULT_TOLERANCES.renormalize:
                raise ValueError(f"state {k} has norm {norm:.9g}; states must be unit vectors")
        return self

    def to_ensemble(self) -> PureStateEnsemble:
        columns = np.array([[complex(re, im) for re, im in state] for state in self.states]).T
        return PureStateEnsemble.create(columns.reshape(self.dim, len(self.states)), self.priors)


def ensemble_to_dict(e: PureStateEnsemble, label: Optional[str] = None) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "dim": e.dim,
        "states": [[[float(z.real), float(z.imag)] for z in e.states[:, k]] for k in range(e.m)],
        "priors": [float(p) for p in e.priors],
    }
    if label:
        payload["label"] = label
    return payload


def ensemble_from_dict(data: Dict[str, Any]) -> PureStateEnsemble:
    return EnsembleFile.model_validate(data).to_ensemble()


def parse_ensemble_json(text: str, source: str = "<input>") -> EnsembleFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1].strip() if 0 < exc.lineno <= len(lines) else ""
        raise EnsembleParseError(
            f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}" + (f" near {context!r}" if context else "")
        ) from exc
    return EnsembleFile.model_validate(data)


def load_ensemble(path: Path) -> PureStateEnsemble:
    path = Path(path)
    return parse_ensemble_json(path.read_text(encoding="utf-8"), source=str(path)).to_ensemble()
