"""Dense complex Hermitian linear algebra.

Everything here works on small dense matrices (dimensions up to a few dozen).
Fractional powers are spectral: the negative power is taken on the support of
the operator only, eigenvalues at or below ``rank * lambda_max`` being treated
as exact zeros.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
import numpy.typing as npt
from scipy.linalg import eigh, ishermitian

from belavkin.components.errors import DimensionMismatchError, NotHermitianError, NotPSDError
from belavkin.components.settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
OperatorLike = Union["HermitianOperator", npt.ArrayLike]


@dataclass(frozen=True)
class HermitianOperator:
    """A square complex matrix equal to its conjugate transpose within ``Tolerances.herm``."""

    matrix: ComplexMatrix

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {self.matrix.shape}")

    @classmethod
    def from_matrix(cls, matrix: npt.ArrayLike, tol: Optional[Tolerances] = None) -> "HermitianOperator":
        tol = tol or DEFAULT_TOLERANCES
        arr = np.array(matrix, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {arr.shape}")
        if not ishermitian(arr, atol=tol.herm):
            asymmetry = float(np.max(np.abs(arr - arr.conj().T)))
            raise NotHermitianError(asymmetry, tol.herm)
        # Exact symmetrization keeps eigh from seeing round-off asymmetry.
        sym = 0.5 * (arr + arr.conj().T)
        sym.setflags(write=False)
        return cls(sym)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending real eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        vecs = self.eigenvectors
        return (vecs * self.eigenvalues) @ vecs.conj().T

    def apply(self, fn, keep: Optional[npt.NDArray[np.bool_]] = None) -> ComplexMatrix:
        """Return sum f(lambda_k)|phi_k><phi_k| over the eigenpairs selected by ``keep``."""
        vals, vecs = self.eigenvalues, self.eigenvectors
        if keep is not None:
            vals, vecs = vals[keep], vecs[:, keep]
        return (vecs * fn(vals)) @ vecs.conj().T


class PsdCheck(NamedTuple):
    passed: bool
    margin: float


def as_hermitian(h: OperatorLike, tol: Optional[Tolerances] = None) -> HermitianOperator:
    if isinstance(h, HermitianOperator):
        return h
    return HermitianOperator.from_matrix(h, tol)


def eig(h: OperatorLike, tol: Optional[Tolerances] = None) -> EigenDecomposition:
    op = as_hermitian(h, tol)
    eigenvalues, eigenvectors = eigh(op.matrix)
    return EigenDecomposition(eigenvalues.astype(np.float64), eigenvectors)


def support_mask(decomp: EigenDecomposition, tol: Optional[Tolerances] = None) -> npt.NDArray[np.bool_]:
    tol = tol or DEFAULT_TOLERANCES
    vals = decomp.eigenvalues
    lam_max = float(vals[-1]) if vals.size else 0.0
    if lam_max <= 0.0:
        return np.zeros(vals.shape, dtype=bool)
    return vals > tol.rank * lam_max


def _check_psd(decomp: EigenDecomposition, tol: Tolerances) -> None:
    lam_min = float(decomp.eigenvalues[0]) if decomp.eigenvalues.size else 0.0
    if lam_min < -tol.psd:
        raise NotPSDError(lam_min, tol.psd)


def frac_power(h: OperatorLike, exponent: float, tol: Optional[Tolerances] = None) -> HermitianOperator:
    """Spectral power ``h**exponent`` for exponent +1/2 or -1/2.

    Both powers are taken on the support of ``h``; eigenvalues under the
    cutoff are exact zeros, so ``h^{-1/2} h h^{-1/2}`` is the support projector
    and round-off in the null space never reaches the square root.
    """
    tol = tol or DEFAULT_TOLERANCES
    if exponent not in (0.5, -0.5):
        raise ValueError(f"exponent must be +1/2 or -1/2, got {exponent}")
    decomp = eig(h, tol)
    _check_psd(decomp, tol)
    keep = support_mask(decomp, tol)
    logger.debug("power %+.1f keeps %d of %d eigenvalues", exponent, int(keep.sum()), keep.size)
    if exponent > 0:
        result = decomp.apply(np.sqrt, keep)
    else:
        result = decomp.apply(lambda lam: 1.0 / np.sqrt(lam), keep)
    return HermitianOperator.from_matrix(result, tol)


def support_projector(h: OperatorLike, tol: Optional[Tolerances] = None) -> HermitianOperator:
    tol = tol or DEFAULT_TOLERANCES
    decomp = eig(h, tol)
    keep = support_mask(decomp, tol)
    return HermitianOperator.from_matrix(decomp.apply(np.ones_like, keep), tol)


def is_psd(h: OperatorLike, tol: Optional[Tolerances] = None) -> PsdCheck:
    tol = tol or DEFAULT_TOLERANCES
    decomp = eig(h, tol)
    margin = float(decomp.eigenvalues[0]) if decomp.eigenvalues.size else 0.0
    return PsdCheck(margin >= -tol.psd, margin)
