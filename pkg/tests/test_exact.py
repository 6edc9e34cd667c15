import math
import unittest

import numpy as np
from parameterized import parameterized

from constrained_inversion.constraints import ConstraintSet, ConstraintTerm, synthetic_log_equality
from constrained_inversion.exact import *
from constrained_inversion.exceptions import *
from constrained_inversion.model import SyntheticModel, ObservationOperator, synthetic_operator
from constrained_inversion.stats import substream


def _constant_residuals(values):
    values = np.asarray(values, dtype=float)
    return lambda states: values[:len(states)]


class _Scalar:
    """
    Identity forward model on R^1, for hand-checkable objectives.
    """
    param_dim = 1
    state_dim = 1

    def evaluate(self, theta):
        return np.atleast_1d(np.asarray(theta, dtype=float)).copy()

    def evaluate_many(self, thetas):
        return np.atleast_2d(np.asarray(thetas, dtype=float)).copy()


class TestSpecs(unittest.TestCase):
    def test_prior(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
        np.testing.assert_array_equal(prior.cov, 3 * np.eye(2))

    def test_data_must_be_positive_definite(self) -> None:
        self.assertRaises(NotPositiveDefinite, DataSpec, np.array([-1.0]), np.array([[0.0]]))

    def test_data_dimension(self) -> None:
        self.assertRaises(DimensionMismatch, DataSpec, np.array([-1.0, 0.0]), np.array([[0.01]]))


class TestDrawPriorSamples(unittest.TestCase):
    def test_degenerate_prior(self) -> None:
        prior = PriorSpec.from_moments([1.0, 1.0], np.zeros((2, 2)))
        params, states = draw_prior_samples(prior, SyntheticModel(), 1, np.random.default_rng(0))
        np.testing.assert_array_equal(params, [[1.0, 1.0]])
        np.testing.assert_allclose(states, [[math.exp(-8), 1.0]])

    def test_prior_mean(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
        params, states = draw_prior_samples(prior, SyntheticModel(), 5000, substream(2020, 'prior-samples'))
        self.assertEqual((5000, 2), states.shape)
        self.assertTrue(np.all(np.abs(params.mean(axis=0)) < 0.1))

    def test_deterministic(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], np.eye(2))
        a, _ = draw_prior_samples(prior, SyntheticModel(), 100, substream(1, 'prior-samples'))
        b, _ = draw_prior_samples(prior, SyntheticModel(), 100, substream(1, 'prior-samples'), workers=3)
        np.testing.assert_array_equal(a, b)

    def test_dimension(self) -> None:
        prior = PriorSpec.from_moments([0.0], [[1.0]])
        self.assertRaises(DimensionMismatch, draw_prior_samples, prior, SyntheticModel(), 3, np.random.default_rng(0))


class TestPosteriorWeights(unittest.TestCase):
    PARAMS = np.zeros((2, 2))
    STATES = np.full((2, 2), 0.5)
    DATA = DataSpec(np.array([-1.0]), np.array([[0.01]]))

    def test_no_constraint_equal_data(self) -> None:
        samples = compute_posterior_weights(self.PARAMS, self.STATES, self.DATA, synthetic_operator(), ConstraintSet())
        np.testing.assert_allclose(samples.weights, [0.5, 0.5])
        self.assertAlmostEqual(2.0, samples.ess)

    def test_constraint_ratio(self) -> None:
        term = ConstraintTerm.equality(_constant_residuals([0.0, -2.0]), 0.5, vectorized=True)
        samples = compute_posterior_weights(
            self.PARAMS, self.STATES, self.DATA, synthetic_operator(), ConstraintSet([term]),
        )
        np.testing.assert_allclose(samples.weights, [1 / (1 + math.exp(-4)), math.exp(-4) / (1 + math.exp(-4))])
        self.assertAlmostEqual(0.9820, samples.weights[0], places=4)

    def test_undefined_states_get_zero_weight(self) -> None:
        states = np.array([[0.5, 0.5], [-0.1, 0.5]])
        samples = compute_posterior_weights(
            self.PARAMS, states, self.DATA, synthetic_operator(), ConstraintSet([synthetic_log_equality(0.5)]),
        )
        self.assertEqual(1, samples.undefined)
        np.testing.assert_array_equal(samples.weights, [1.0, 0.0])

    def test_all_weights_zero(self) -> None:
        states = np.array([[-0.5, 0.5], [-0.1, 0.5]])
        with self.assertRaises(AllWeightsZero):
            compute_posterior_weights(
                self.PARAMS, states, self.DATA, synthetic_operator(), ConstraintSet([synthetic_log_equality(0.5)]),
            )

    def test_empty(self) -> None:
        self.assertRaises(ValueError, compute_posterior_weights, np.zeros((0, 2)), np.zeros((0, 2)),
                          self.DATA, synthetic_operator(), ConstraintSet())

    def test_sample_state_count(self) -> None:
        self.assertRaises(DimensionMismatch, compute_posterior_weights, np.zeros((3, 2)), np.zeros((2, 2)),
                          self.DATA, synthetic_operator(), ConstraintSet())

    def test_normalised_at_scale(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
        params, states = draw_prior_samples(prior, SyntheticModel(), 5000, np.random.default_rng(12))
        samples = compute_posterior_weights(
            params, states, self.DATA, synthetic_operator(), ConstraintSet([synthetic_log_equality(0.5)]), prior,
        )
        self.assertTrue(np.all(samples.weights >= 0))
        self.assertAlmostEqual(1.0, float(np.sum(samples.weights)), delta=1e-12)

    def test_inert_constraint_matches_unconstrained(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
        params, states = draw_prior_samples(prior, SyntheticModel(), 2000, np.random.default_rng(13))
        free = compute_posterior_weights(params, states, self.DATA, synthetic_operator(), ConstraintSet())
        inert = compute_posterior_weights(
            params, states, self.DATA, synthetic_operator(), ConstraintSet([synthetic_log_equality(1e8)]),
        )
        self.assertLess(0.5 * float(np.sum(np.abs(free.weights - inert.weights))), 1e-6)

    def test_without_data_the_constraint_pulls_the_mean(self) -> None:
        prior = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
        params, states = draw_prior_samples(prior, SyntheticModel(), 5000, np.random.default_rng(14))
        samples = compute_posterior_weights(
            params, states, None, synthetic_operator(), ConstraintSet([synthetic_log_equality(0.5)]),
        )
        theta = estimate(samples, SyntheticModel(), synthetic_operator()).theta_expectation
        self.assertLess(abs(theta[0] + theta[1] - 2.0), 2.0)

    def test_degenerate_prior_log_prior_is_zero(self) -> None:
        prior = PriorSpec.from_moments([1.0, 1.0], np.zeros((2, 2)))
        samples = compute_posterior_weights(
            np.ones((1, 2)), SyntheticModel().evaluate_many(np.ones((1, 2))), self.DATA,
            synthetic_operator(), ConstraintSet(), prior,
        )
        np.testing.assert_array_equal(samples.log_prior, [0.0])


class TestEstimate(unittest.TestCase):
    def _samples(self, params, log_weights):
        params = np.asarray(params, dtype=float)
        states = SyntheticModel().evaluate_many(params)
        zeros = np.zeros(len(params))
        log_weights = np.asarray(log_weights, dtype=float)
        weights = np.exp(log_weights - log_weights.max())
        return WeightedSamples(params, states, zeros, log_weights, zeros, weights / weights.sum())

    def test_single_sample(self) -> None:
        result = estimate(self._samples([[0.3, -0.2]], [0.0]), SyntheticModel(), synthetic_operator())
        np.testing.assert_allclose(result.theta_expectation, [0.3, -0.2])
        np.testing.assert_array_equal(result.theta_map, [0.3, -0.2])
        self.assertEqual(0, result.map_index)

    def test_expectation_and_map(self) -> None:
        samples = self._samples([[0.0, 0.0], [4.0, 4.0]], [math.log(0.75), math.log(0.25)])
        result = estimate(samples, SyntheticModel(), synthetic_operator())
        np.testing.assert_allclose(result.theta_expectation, [1.0, 1.0])
        np.testing.assert_array_equal(result.theta_map, [0.0, 0.0])
        np.testing.assert_allclose(result.output_map, [-2.5 * math.exp(-2)])
        np.testing.assert_allclose(result.state_expectation, [math.exp(-8), 1.0])

    def test_ties_pick_lowest_index(self) -> None:
        samples = self._samples([[2.0, 0.0], [1.0, 0.0], [3.0, 0.0]], [-1.0, 0.0, 0.0])
        self.assertEqual(1, estimate(samples, SyntheticModel(), synthetic_operator()).map_index)


class TestMapObjective(unittest.TestCase):
    def test_zero_at_perfect_fit(self) -> None:
        model = _Scalar()
        h = ObservationOperator([[1.0]])
        prior = PriorSpec.from_moments([2.0], [[1.0]])
        data = DataSpec(np.array([2.0]), np.array([[1.0]]))
        term = ConstraintTerm.equality(lambda x: x[0] - 2.0, 1.0)
        self.assertAlmostEqual(0.0, map_optimization_objective(np.array([2.0]), prior, data, h, ConstraintSet([term]), model))

    def test_scalar_sum_of_squares(self) -> None:
        model = _Scalar()
        h = ObservationOperator([[1.0]])
        prior = PriorSpec.from_moments([-1.0], [[1.0]])
        data = DataSpec(np.array([2.0]), np.array([[1.0]]))
        term = ConstraintTerm.equality(lambda x: x[0] + 3.0, 1.0)
        value = map_optimization_objective(np.array([0.0]), prior, data, h, ConstraintSet([term]), model)
        self.assertAlmostEqual(14.0, value, places=10)

    @parameterized.expand([(seed,) for seed in range(20)])
    def test_argmax_posterior_equals_argmin_objective(self, seed) -> None:
        rng = np.random.default_rng(seed)
        model, h = SyntheticModel(), synthetic_operator()
        a = rng.normal(size=(2, 2))
        prior = PriorSpec.from_moments(rng.normal(size=2) * 0.5, a @ a.T + rng.uniform(0.2, 3.0) * np.eye(2))
        data = DataSpec(np.array([-1.0]), np.array([[rng.uniform(0.005, 0.5)]]))
        constraint_set = ConstraintSet([synthetic_log_equality(rng.uniform(0.1, 5.0))])

        params, states = draw_prior_samples(prior, model, 1000, rng)
        samples = compute_posterior_weights(params, states, data, h, constraint_set, prior)
        map_index = estimate(samples, model, h).map_index
        objective = [map_optimization_objective(theta, prior, data, h, constraint_set, model) for theta in params]
        self.assertEqual(map_index, int(np.argmin(objective)))


class TestRun(unittest.TestCase):
    PRIOR = PriorSpec.from_moments([0.0, 0.0], 3 * np.eye(2))
    DATA = DataSpec(np.array([-1.0]), np.array([[0.01]]))

    def test_deterministic(self) -> None:
        constraint_set = ConstraintSet([synthetic_log_equality(0.5)])
        a = run(self.PRIOR, self.DATA, SyntheticModel(), synthetic_operator(), constraint_set, 500, 5)
        b = run(self.PRIOR, self.DATA, SyntheticModel(), synthetic_operator(), constraint_set, 500, 5, workers=2)
        np.testing.assert_array_equal(a.samples.params, b.samples.params)
        np.testing.assert_array_equal(a.samples.weights, b.samples.weights)
        self.assertEqual(a.estimate.map_index, b.estimate.map_index)
