import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from belavkin.components.binary import BinaryEnsembleParams, optimal_binary_failure, power_failure
from belavkin.components.ensemble import PureStateEnsemble, binary_ensemble, haar_random_ensemble
from belavkin.components.optimality import belavkin_certificate
from belavkin.components.settings import IterationSettings
from belavkin.components.solver import (
    SolveResult,
    fixed_point_step,
    helstrom_povm,
    iterate_optimal,
    solve,
    solve_binary_exact,
)


def test_orthonormal_states_converge_at_once(orthonormal3):
    result = iterate_optimal(orthonormal3)
    assert result.converged
    assert result.iterations == 1
    assert result.failure_rate == pytest.approx(0.0, abs=1e-12)
    for k in range(3):
        assert_allclose(result.povm.elements[k], orthonormal3.projector(k), atol=1e-12)


def test_iteration_matches_helstrom(binary_ensemble):
    result = iterate_optimal(binary_ensemble(0.3, 1.0))
    assert result.converged
    assert result.failure_rate == pytest.approx(optimal_binary_failure(BinaryEnsembleParams(0.3, 1.0)), abs=1e-9)
    assert len(result.history) == result.iterations


def test_counterexample_suppresses_the_likeliest_state(counterexample):
    result = iterate_optimal(counterexample)
    assert result.converged
    assert round(result.failure_rate, 4) == 0.4138
    assert result.weights.weights[2] == 0.0
    detected = counterexample.priors[2] * np.real(
        counterexample.state(2).conj() @ result.povm.elements[2] @ counterexample.state(2)
    )
    assert detected < 1e-9
    assert belavkin_certificate(counterexample, result.weights).passed


def test_converged_weights_are_a_fixed_point(binary_ensemble):
    e = binary_ensemble(0.6, 0.5)
    result = iterate_optimal(e)
    step = fixed_point_step(e, result.weights)
    assert np.max(np.abs(step.weights - result.weights.weights)) < 1e-8
    assert belavkin_certificate(e, result.weights).passed


def test_damped_iteration_reaches_the_same_optimum(binary_ensemble):
    e = binary_ensemble(0.3, 1.0)
    damped = iterate_optimal(e, IterationSettings(damping=0.5))
    assert damped.converged
    assert damped.failure_rate == pytest.approx(iterate_optimal(e).failure_rate, abs=1e-9)
    assert damped.iterations > 1


def test_heavy_damping_still_stops_at_the_fixed_point(binary_ensemble):
    e = binary_ensemble(0.6, 0.5)
    result = iterate_optimal(e, IterationSettings(damping=0.05))
    assert result.converged
    undamped = fixed_point_step(e, result.weights)
    assert np.max(np.abs(undamped.weights - result.weights.weights)) < 1e-10
    assert belavkin_certificate(e, result.weights).passed


def test_non_convergence_is_reported(counterexample):
    result = iterate_optimal(counterexample, IterationSettings(max_iter=1))
    assert not result.converged
    assert not result.certificate.passed
    assert result.iterations == 1


def test_converged_result_needs_a_passing_certificate(counterexample):
    failed = iterate_optimal(counterexample, IterationSettings(max_iter=1))
    with pytest.raises(ValueError):
        SolveResult(
            povm=failed.povm,
            weights=failed.weights,
            failure_rate=failed.failure_rate,
            iterations=1,
            certificate=failed.certificate,
            converged=True,
        )


def test_iteration_settings_are_validated():
    with pytest.raises(ValidationError):
        IterationSettings(damping=1.5)
    with pytest.raises(ValidationError):
        IterationSettings(max_iter=0)


@pytest.mark.parametrize("p, theta", [(0.3, 1.0), (0.5, 0.2), (0.95, 0.05), (0.0, 0.7), (0.5, 0.0)])
def test_exact_binary_solution(p, theta):
    b = BinaryEnsembleParams(p, theta)
    result = solve_binary_exact(b)
    assert result.converged
    assert result.failure_rate == pytest.approx(optimal_binary_failure(b), abs=1e-12)


def test_exact_solution_for_orthogonal_states():
    result = solve_binary_exact(BinaryEnsembleParams(0.4, math.pi / 2))
    assert_allclose(result.povm.elements[0], np.diag([1.0, 0.0]), atol=1e-12)
    assert_allclose(result.povm.elements[1], np.diag([0.0, 1.0]), atol=1e-12)


def test_equal_priors_give_a_symmetric_basis():
    theta = 0.8
    result = solve_binary_exact(BinaryEnsembleParams(0.5, theta))
    u = np.array([math.cos(theta / 2), math.sin(theta / 2)])
    reflection = 2 * np.outer(u, u) - np.eye(2)
    first, second = result.povm.elements
    assert_allclose(reflection @ first @ reflection, second, atol=1e-12)


def test_holevo_ratio_near_its_supremum():
    p, theta = math.sqrt(2) / 2, 0.01
    exact = solve_binary_exact(BinaryEnsembleParams(p, theta)).failure_rate
    assert float(power_failure(p, theta, 2.0)) / exact == pytest.approx(1.207, abs=1e-2)


def test_dispatcher_uses_the_exact_solution_for_two_states(counterexample):
    e = binary_ensemble(0.3, 1.0)
    assert solve(e).iterations == 0
    assert solve(counterexample).iterations > 0


def test_helstrom_povm_in_higher_dimension():
    states = np.zeros((3, 2), dtype=complex)
    states[:2, 0] = [1.0, 0.0]
    states[:2, 1] = [math.cos(0.7), math.sin(0.7)]
    e = PureStateEnsemble.create(states, [0.35, 0.65])
    povm = helstrom_povm(e)
    assert_allclose(povm.elements.sum(axis=0), np.eye(3), atol=1e-12)
    assert solve(e).failure_rate == pytest.approx(optimal_binary_failure(BinaryEnsembleParams(0.35, 0.7)), abs=1e-12)


@pytest.mark.slow
def test_iteration_agrees_with_exact_solution_on_random_pairs(rng):
    for _ in range(100):
        b = BinaryEnsembleParams(float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.2, 1.5)))
        iterated = iterate_optimal(binary_ensemble(b.p, b.theta))
        assert iterated.failure_rate == pytest.approx(solve_binary_exact(b).failure_rate, abs=1e-8)


@pytest.mark.slow
def test_round_off_does_not_trigger_auto_damping():
    rng = np.random.default_rng(7)
    for _ in range(200):
        dim = int(rng.integers(2, 5))
        m = int(rng.integers(2, 6))
        e = haar_random_ensemble(dim, m, rng.dirichlet(np.ones(m)), rng=rng)
        result = iterate_optimal(e)
        if result.converged:
            assert result.damping == 1.0
            assert belavkin_certificate(e, result.weights).passed
