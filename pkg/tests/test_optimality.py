import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from belavkin.components.bwsrm import PowerWeighting, build_bwsrm, holevo, pgm
from belavkin.components.ensemble import (
    Povm,
    PureStateEnsemble,
    WeightVector,
    counterexample_povm,
    failure_rate,
    haar_random_ensemble,
    load_ensemble,
)
from belavkin.components.errors import CertificateInapplicableError, UncertifiedOptimumError
from belavkin.components.optimality import (
    Certificate,
    belavkin_certificate,
    check_bounds,
    hayden_bound,
    lagrange_certificate,
    lagrange_operator,
    optimal_weights,
    pgm_condition,
    weighted_sufficient_certificate,
)
from belavkin.components.solver import solve


def test_known_optimum_passes_lagrange(counterexample):
    cert = lagrange_certificate(counterexample, counterexample_povm())
    assert cert.kind == "lagrange"
    assert cert.passed
    assert min(cert.diagnostics) >= -1e-9


def test_pgm_is_not_optimal_for_the_counterexample(counterexample):
    assert not lagrange_certificate(counterexample, pgm(counterexample)).passed


def test_lagrange_operator_trace_is_success_rate(counterexample):
    povm = holevo(counterexample)
    trace = np.real(np.trace(lagrange_operator(counterexample, povm)))
    assert trace == pytest.approx(1.0 - failure_rate(counterexample, povm))


def test_optimal_weights_of_the_counterexample(counterexample):
    w = optimal_weights(counterexample, counterexample_povm())
    assert w.weights[2] == 0.0
    assert w.weights[0] == pytest.approx(w.weights[1])


def test_belavkin_certificate_at_the_optimum(counterexample):
    cert = belavkin_certificate(counterexample, optimal_weights(counterexample, counterexample_povm()))
    assert cert.passed
    # the suppressed outcome sits exactly on the boundary
    assert cert.diagnostics[2] == pytest.approx(1.0, abs=1e-9)


def test_belavkin_certificate_rejects_holevo_weights(counterexample):
    assert not belavkin_certificate(counterexample, PowerWeighting(2.0).weights(counterexample.priors)).passed


def test_belavkin_certificate_needs_full_support(orthonormal3):
    with pytest.raises(CertificateInapplicableError):
        belavkin_certificate(orthonormal3, WeightVector.create([1.0, 1.0, 0.0]))


def test_belavkin_certificate_is_scale_free(counterexample):
    w = optimal_weights(counterexample, counterexample_povm())
    assert_allclose(
        belavkin_certificate(counterexample, w.scaled(50.0)).diagnostics,
        belavkin_certificate(counterexample, w).diagnostics,
        atol=1e-12,
    )


def test_weighted_sufficient_condition(orthonormal3):
    holevo_weights = WeightVector.create(orthonormal3.priors**2)
    assert weighted_sufficient_certificate(orthonormal3, holevo_weights).passed
    # the PGM is optimal here, yet the sufficient condition fails for its weights
    assert not weighted_sufficient_certificate(orthonormal3, WeightVector.create(orthonormal3.priors)).passed
    with pytest.raises(CertificateInapplicableError):
        weighted_sufficient_certificate(orthonormal3, WeightVector.create([1.0, 0.0, 1.0]))


def test_pgm_condition_holds_for_symmetric_states(trine):
    cert = pgm_condition(trine)
    assert cert.kind == "pgm-sufficient"
    assert cert.passed


def tetrahedral_states():
    """Qubit states whose Bloch vectors are the vertices of a regular tetrahedron."""
    pauli = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
    states = []
    for bloch in np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3):
        rho = 0.5 * (np.eye(2) + sum(n * s for n, s in zip(bloch, pauli)))
        states.append(np.linalg.eigh(rho)[1][:, -1])
    return np.column_stack(states)


def test_pgm_condition_implies_an_optimal_pgm(trine):
    ensembles = [
        trine,
        PureStateEnsemble.create(np.eye(3), np.full(3, 1 / 3)),
        PureStateEnsemble.create(tetrahedral_states(), np.full(4, 0.25)),
    ]
    for e in ensembles:
        assert pgm_condition(e).passed
        assert lagrange_certificate(e, pgm(e)).passed


def test_tetrahedral_pgm_fails_half_the_time():
    e = PureStateEnsemble.create(tetrahedral_states(), np.full(4, 0.25))
    assert failure_rate(e, pgm(e)) == pytest.approx(0.5, abs=1e-12)


def test_certificates_agree_on_arbitrary_weights(rng):
    agreements = 0
    for _ in range(30):
        dim = int(rng.integers(2, 5))
        m = int(rng.integers(2, dim + 1))
        e = haar_random_ensemble(dim, m, rng.dirichlet(np.ones(m)), rng=rng)
        candidates = [WeightVector.create(rng.uniform(0.05, 1.0, m))]
        optimum = solve(e)
        if optimum.converged and np.all(optimum.weights.positive):
            candidates.append(optimum.weights)
        for w in candidates:
            lagrange = lagrange_certificate(e, build_bwsrm(e, w)).passed
            assert belavkin_certificate(e, w).passed == lagrange
            agreements += lagrange
    assert agreements > 0


def test_pgm_condition_is_not_necessary(ensemble_dir):
    e = load_ensemble(ensemble_dir / "direct_sum.json")
    assert not pgm_condition(e).passed
    assert lagrange_certificate(e, pgm(e)).passed


def test_certificate_consistency_is_enforced():
    with pytest.raises(ValidationError):
        Certificate(kind="lagrange", passed=True, worst_margin=-1.0, tolerance=1e-9)
    with pytest.raises(ValidationError):
        Certificate(kind="sdp", passed=True, worst_margin=0.0, tolerance=1e-9)


def test_bounds_need_a_certified_optimum(counterexample):
    with pytest.raises(UncertifiedOptimumError):
        check_bounds(counterexample, 0.41, None)
    failing = lagrange_certificate(counterexample, pgm(counterexample))
    with pytest.raises(UncertifiedOptimumError):
        check_bounds(counterexample, 0.41, failing)


def test_bound_chain_on_the_counterexample(counterexample):
    povm = counterexample_povm()
    opt = failure_rate(counterexample, povm)
    report = check_bounds(counterexample, opt, lagrange_certificate(counterexample, povm))
    assert report.holds
    assert report.violations == []
    assert report.optimal_failure <= report.pgm_failure <= report.barnum_knill_upper <= 2 * opt
    assert report.pgm_failure <= report.hayden_upper
    assert all(slack >= 0 for slack in report.slacks.values())


def test_barnum_knill_is_nearly_tight_for_a_rare_state(binary_ensemble):
    e = binary_ensemble(1e-4, 0.3)
    result = solve(e)
    report = check_bounds(e, result.failure_rate, result.certificate)
    assert report.pgm_failure >= 0.99 * report.barnum_knill_upper


def test_hayden_bound_vanishes_for_orthogonal_states(orthonormal3):
    assert hayden_bound(orthonormal3) == 0.0


def test_lagrange_rejects_mismatched_povm(counterexample):
    with pytest.raises(ValueError):
        lagrange_certificate(counterexample, Povm.create([np.eye(2)]))


def test_zero_prior_states_do_not_break_certificates():
    e = PureStateEnsemble.create(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]), [0.6, 0.4, 0.0])
    povm = Povm.create([np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.zeros((2, 2))])
    assert lagrange_certificate(e, povm).passed
