import numpy as np
import pytest
from numpy.testing import assert_allclose

from belavkin.components.binary import BinaryEnsembleParams, optimal_binary_failure, power_failure
from belavkin.components.bwsrm import (
    PowerWeighting,
    build_bwsrm,
    build_power_bwsrm,
    bwsrm_vectors,
    cubic,
    gram_success_rate,
    holevo,
    pgm,
    pgm_gram_diagonal,
    power_failure_rate,
    weighted_frame_operator,
    weighting_from_label,
)
from belavkin.components.ensemble import (
    PureStateEnsemble,
    WeightVector,
    failure_rate,
    binary_ensemble,
    haar_random_ensemble,
    haar_random_unitary,
    load_ensemble,
    success_rate,
)
from belavkin.components.errors import DimensionMismatchError, InvalidWeightsError
from belavkin.components.operators import support_projector


def random_priors(rng, m):
    return rng.dirichlet(np.ones(m))


@pytest.mark.parametrize("dim, m", [(2, 3), (3, 3), (4, 3), (3, 5)])
def test_elements_sum_to_the_support(rng, dim, m):
    e = haar_random_ensemble(dim, m, random_priors(rng, m), rng=rng)
    w = WeightVector.create(rng.uniform(0.1, 1.0, m))
    povm = build_bwsrm(e, w)
    total = povm.elements.sum(axis=0)
    assert_allclose(total, support_projector(weighted_frame_operator(e, w)).matrix, atol=1e-9)
    for element in povm.elements:
        assert np.linalg.eigvalsh(element).min() > -1e-9


@pytest.mark.parametrize("r", [1.0, 2.0, 3.0, 0.5])
def test_gram_form_matches_operator_form(rng, r):
    for _ in range(10):
        m = int(rng.integers(2, 6))
        e = haar_random_ensemble(int(rng.integers(2, 5)), m, random_priors(rng, m), rng=rng)
        w = PowerWeighting(r).weights(e.priors)
        assert gram_success_rate(e, w) == pytest.approx(success_rate(e, build_bwsrm(e, w)), abs=1e-10)


def test_orthonormal_states_are_identified(orthonormal3):
    for build in (pgm, holevo, cubic):
        assert failure_rate(orthonormal3, build(orthonormal3)) == pytest.approx(0.0, abs=1e-12)


def test_equal_priors_make_power_weightings_coincide(ensemble_dir):
    e = load_ensemble(ensemble_dir / "equiprobable.json")
    reference = pgm(e).elements
    assert_allclose(holevo(e).elements, reference, atol=1e-12)
    assert_allclose(cubic(e).elements, reference, atol=1e-12)


def test_weights_matter_only_up_to_scale(counterexample):
    w = WeightVector.create([0.2, 0.5, 0.3])
    assert_allclose(build_bwsrm(counterexample, w.scaled(3.7)).elements, build_bwsrm(counterexample, w).elements, atol=1e-12)


def test_zero_weight_gives_zero_element(counterexample):
    povm = build_bwsrm(counterexample, WeightVector.create([1.0, 1.0, 0.0]))
    assert np.all(povm.elements[2] == 0.0)
    plus = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]])
    assert_allclose(povm.elements[0], plus, atol=1e-12)


def test_counterexample_failure_rates(counterexample):
    assert round(power_failure_rate(counterexample, "holevo"), 4) == 0.4245
    assert round(power_failure_rate(counterexample, "pgm"), 4) == 0.4224


def test_frame_vectors_are_orthonormal_for_independent_states(rng):
    e = haar_random_ensemble(4, 3, random_priors(rng, 3), rng=rng)
    vectors = bwsrm_vectors(e, PowerWeighting(2.0).weights(e.priors))
    assert_allclose(vectors.conj().T @ vectors, np.eye(3), atol=1e-10)


def test_weight_count_must_match(counterexample):
    with pytest.raises(DimensionMismatchError):
        build_bwsrm(counterexample, WeightVector.create([1.0, 1.0]))


def test_weighting_labels():
    assert weighting_from_label("PGM").r == 1.0
    assert weighting_from_label("holevo").label == "holevo"
    assert weighting_from_label("r=2.5").label == "power-2.5"
    assert weighting_from_label(3).label == "cubic"
    with pytest.raises(ValueError):
        weighting_from_label("sqrt")
    with pytest.raises(InvalidWeightsError):
        PowerWeighting(0.0)


def test_power_bwsrm_accepts_a_float(counterexample):
    assert_allclose(build_power_bwsrm(counterexample, 2.0).elements, holevo(counterexample).elements)


def test_pgm_diagonal_is_constant_for_symmetric_states(trine):
    diag = pgm_gram_diagonal(trine)
    assert_allclose(diag, diag[0], atol=1e-12)


def test_zero_prior_state_is_ignored():
    e = PureStateEnsemble.create(np.eye(2), [1.0, 0.0])
    assert failure_rate(e, pgm(e)) == pytest.approx(0.0, abs=1e-12)


def test_nearly_parallel_pair_gives_a_complete_measurement():
    theta = 3e-5
    e = binary_ensemble(0.5, theta)
    povm = build_bwsrm(e, WeightVector.create([1.0, 1.0]))
    assert_allclose(povm.elements.sum(axis=0), np.eye(2), atol=1e-12)
    # equal weights on two states give the Helstrom measurement for equal priors
    expected = optimal_binary_failure(BinaryEnsembleParams(0.5, theta))
    assert failure_rate(e, povm) == pytest.approx(expected, abs=1e-9)


@pytest.mark.slow
def test_cubic_weighting_builds_on_ill_conditioned_ensembles(rng):
    for _ in range(2000):
        dim, m = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        e = haar_random_ensemble(dim, m, random_priors(rng, m), rng=rng)
        povm = build_power_bwsrm(e, 3.0)
        assert 0.0 <= failure_rate(e, povm) <= 1.0


def test_success_rate_is_unitarily_invariant(rng):
    for dim, m in [(2, 3), (3, 3), (4, 5)]:
        e = haar_random_ensemble(dim, m, random_priors(rng, m), rng=rng)
        rotated = PureStateEnsemble.create(haar_random_unitary(dim, rng) @ e.states, e.priors)
        w = WeightVector.create(rng.uniform(0.1, 1.0, m))
        assert success_rate(rotated, build_bwsrm(rotated, w)) == pytest.approx(success_rate(e, build_bwsrm(e, w)), abs=1e-10)


def test_gram_rate_for_identical_states_matches_closed_form():
    p = 11 / 49
    e = binary_ensemble(p, 0.0)
    for r in (1.0, 2.0, 3.0):
        assert power_failure_rate(e, r) == pytest.approx(float(power_failure(p, 0.0, r)), abs=1e-13)
