"""Certified optimal measurements.

The optimal measurement for a pure-state ensemble is itself a BWSRM, with
weights W_k = p_k^2 <psi_k|M_k|psi_k>. Iterating that map from the Holevo
weighting W_k = p_k^2 usually lands on it; the Lagrange certificate decides
whether it did. Two-state ensembles are solved exactly instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from belavkin.components.binary import BinaryEnsembleParams, optimal_binary_failure
from belavkin.components.bwsrm import build_bwsrm, gram_detection_probabilities
from belavkin.components.ensemble import (
    Povm,
    PureStateEnsemble,
    WeightVector,
    binary_ensemble,
    failure_rate,
)
from belavkin.components.errors import DimensionMismatchError
from belavkin.components.operators import eig
from belavkin.components.optimality import Certificate, lagrange_certificate, optimal_weights
from belavkin.components.settings import DEFAULT_TOLERANCES, IterationSettings, Tolerances

logger = logging.getLogger(__name__)

# Failure-rate rises within the accuracy of the Gram square root are not increases.
_INCREASE_SLACK = 1e-12


@dataclass(frozen=True)
class SolveResult:
    povm: Povm
    weights: WeightVector
    failure_rate: float
    iterations: int
    certificate: Certificate
    converged: bool
    history: List[float] = field(default_factory=list)
    increases: int = 0
    damping: float = 1.0

    def __post_init__(self) -> None:
        if self.converged and not self.certificate.passed:
            raise ValueError("a converged result must carry a passing certificate")


def _update(weights: np.ndarray, target: np.ndarray, damping: float) -> np.ndarray:
    """W_k (target_k / W_k)^damping on the positive weights, scaled to max 1."""
    updated = np.zeros_like(weights)
    pos = weights > 0
    updated[pos] = weights[pos] * np.power(target[pos] / weights[pos], damping)
    return updated / updated.max()


def _fixed_point_residual(weights: np.ndarray, target: np.ndarray) -> float:
    """max |target/max(target) - W| over the positive weights, independent of the damping."""
    pos = weights > 0
    scaled = target / target.max()
    return float(np.max(np.abs(scaled[pos] - weights[pos])))


def fixed_point_step(
    e: PureStateEnsemble, w: WeightVector, damping: float = 1.0, tol: Optional[Tolerances] = None
) -> WeightVector:
    """One application of W -> p^2 <psi|M(W)|psi>, scaled so the largest weight is 1."""
    detect = gram_detection_probabilities(e, w, tol)
    return WeightVector.create(_update(w.weights, e.priors**2 * detect, damping))


def _certify(e: PureStateEnsemble, weights: np.ndarray, tol: Tolerances) -> tuple[Povm, Certificate]:
    povm = build_bwsrm(e, WeightVector.create(weights), tol)
    return povm, lagrange_certificate(e, povm, tol)


def _pruned(weights: np.ndarray, ratio: float) -> Optional[np.ndarray]:
    small = (weights > 0) & (weights < ratio * weights.max())
    if not small.any():
        return None
    candidate = weights.copy()
    candidate[small] = 0.0
    return candidate


def iterate_optimal(
    e: PureStateEnsemble,
    settings: Optional[IterationSettings] = None,
    tol: Optional[Tolerances] = None,
) -> SolveResult:
    """Fixed-point iteration of the optimal-weight map starting at W = p^2.

    Weights falling under ``freeze_ratio`` of the largest are set to zero for
    good. The iteration stops once the undamped map leaves the weights fixed
    to within ``tol_fix``, whatever the damping. Every ``prune_every``
    iterations the weights under ``prune_ratio`` are tentatively zeroed; the
    pruned weights are kept only if their BWSRM passes the Lagrange
    certificate. The result is converged only when the final POVM passes that
    certificate.
    """
    settings = settings or IterationSettings()
    tol = tol or DEFAULT_TOLERANCES
    freeze = settings.freeze_ratio or tol.rank
    p2 = e.priors**2
    weights = p2 / p2.max()
    damping = settings.damping
    history: List[float] = []
    increases = streak = 0
    iterations = 0

    for iterations in range(1, settings.max_iter + 1):
        detect = gram_detection_probabilities(e, WeightVector.create(weights), tol)
        history.append(1.0 - float(np.dot(e.priors, detect)))
        if len(history) > 1 and history[-1] > history[-2] + _INCREASE_SLACK:
            increases += 1
            streak += 1
            logger.warning("failure rate rose to %.12g at iteration %d", history[-1], iterations)
            if settings.auto_damping and streak >= 2:
                damping *= 0.5
                streak = 0
                logger.warning("two successive increases; damping exponent now %.4g", damping)
        else:
            streak = 0

        target = p2 * detect
        residual = _fixed_point_residual(weights, target)
        logger.debug("iteration %d: failure %.15g, fixed-point residual %.3e", iterations, history[-1], residual)
        if residual < settings.tol_fix:
            break

        updated = _update(weights, target, damping)
        updated[updated < freeze] = 0.0
        weights = updated

        if iterations % settings.prune_every == 0:
            candidate = _pruned(weights, settings.prune_ratio)
            if candidate is not None and _certify(e, candidate, tol)[1].passed:
                logger.info("iteration %d: pruned %d vanishing weights", iterations, int((candidate != weights).sum()))
                weights = candidate

    povm, certificate = _certify(e, weights, tol)
    if not certificate.passed:
        candidate = _pruned(weights, settings.prune_ratio)
        if candidate is not None:
            pruned_povm, pruned_cert = _certify(e, candidate, tol)
            if pruned_cert.passed:
                weights, povm, certificate = candidate, pruned_povm, pruned_cert

    if certificate.passed:
        logger.info("certified optimum after %d iterations", iterations)
    else:
        logger.warning(
            "iteration stopped after %d iterations without a certificate (worst margin %.3e)",
            iterations,
            certificate.worst_margin,
        )
    return SolveResult(
        povm=povm,
        weights=WeightVector.create(weights),
        failure_rate=failure_rate(e, povm, tol),
        iterations=iterations,
        certificate=certificate,
        converged=certificate.passed,
        history=history,
        increases=increases,
        damping=damping,
    )


def helstrom_povm(e: PureStateEnsemble, tol: Optional[Tolerances] = None) -> Povm:
    """M_1 projects onto the positive eigenspace of p_1|psi_1><psi_1| - p_2|psi_2><psi_2|, M_2 = I - M_1."""
    if e.m != 2:
        raise DimensionMismatchError(f"the exact solution needs two states, got {e.m}")
    decomp = eig(e.priors[0] * e.projector(0) - e.priors[1] * e.projector(1), tol)
    first = decomp.apply(np.ones_like, decomp.eigenvalues > 0)
    return Povm.create([first, np.eye(e.dim) - first], tol=tol)


def _exact(e: PureStateEnsemble, tol: Optional[Tolerances]) -> SolveResult:
    tol = tol or DEFAULT_TOLERANCES
    povm = helstrom_povm(e, tol)
    certificate = lagrange_certificate(e, povm, tol)
    fail = failure_rate(e, povm, tol)
    return SolveResult(
        povm=povm,
        weights=optimal_weights(e, povm),
        failure_rate=fail,
        iterations=0,
        certificate=certificate,
        converged=certificate.passed,
        history=[fail],
    )


def solve_binary_exact(b: BinaryEnsembleParams, tol: Optional[Tolerances] = None) -> SolveResult:
    """Optimal projective measurement for psi_1 = (1, 0), psi_2 = (cos theta, sin theta)."""
    result = _exact(binary_ensemble(b.p, b.theta), tol)
    logger.debug("exact binary solve: %.15g (closed form %.15g)", result.failure_rate, optimal_binary_failure(b))
    return result


def solve(
    e: PureStateEnsemble,
    settings: Optional[IterationSettings] = None,
    tol: Optional[Tolerances] = None,
) -> SolveResult:
    """Exact solution for two states, fixed-point iteration otherwise."""
    if e.m == 2:
        return _exact(e, tol)
    return iterate_optimal(e, settings, tol)
