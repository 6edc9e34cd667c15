"""
Sampling-based constrained Bayesian inference.

Parameters are drawn from the prior and weighted by the data and constraint
likelihoods: self-normalised importance sampling with the prior as proposal,
so the prior density does not enter the weights. The MAP estimate scores
samples by the full unnormalised posterior prior x data x constraint.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .constraints import ConstraintSet
from .exceptions import AllWeightsZero, DimensionMismatch, NonPositiveDisjunction, NotPositiveDefinite
from .model import ForwardModel, ObservationOperator, evaluate_many
from .stats import (
    GaussianSpec,
    as_vector,
    cholesky,
    effective_sample_size,
    log_normalize,
    mahalanobis_sq,
    mvn_logpdf,
    mvn_sample,
    substream,
    weighted_mean,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriorSpec:
    gaussian: GaussianSpec

    @classmethod
    def from_moments(cls, mean, cov) -> 'PriorSpec':
        return cls(GaussianSpec(mean, cov))

    @property
    def mean(self) -> np.ndarray:
        return self.gaussian.mean

    @property
    def cov(self) -> np.ndarray:
        return self.gaussian.cov


@dataclass(frozen=True)
class DataSpec:
    """
    Observed output mean ybar and noise covariance Sigma_l (positive definite).
    """
    observed_mean: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        gaussian = GaussianSpec(self.observed_mean, self.noise_cov)
        cholesky(gaussian.cov)
        object.__setattr__(self, 'observed_mean', gaussian.mean)
        object.__setattr__(self, 'noise_cov', gaussian.cov)

    @property
    def gaussian(self) -> GaussianSpec:
        return GaussianSpec(self.observed_mean, self.noise_cov)

    @property
    def dim(self) -> int:
        return self.observed_mean.size


@dataclass
class WeightedSamples:
    params: np.ndarray
    states: np.ndarray
    log_prior: np.ndarray
    log_data: np.ndarray
    log_constraint: np.ndarray
    weights: np.ndarray
    undefined: int = 0
    diagnostics: List[NonPositiveDisjunction] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.params)

    @property
    def log_posterior(self) -> np.ndarray:
        return self.log_prior + self.log_data + self.log_constraint

    @property
    def ess(self) -> float:
        return effective_sample_size(self.weights)


@dataclass(frozen=True)
class ExactEstimate:
    theta_expectation: np.ndarray
    theta_map: np.ndarray
    map_index: int
    state_expectation: np.ndarray
    state_map: np.ndarray
    output_expectation: np.ndarray
    output_map: np.ndarray


def draw_prior_samples(
    prior: PriorSpec,
    model: ForwardModel,
    count: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    :returns: (params, states) with states[j] = F(params[j])
    """
    if prior.gaussian.dim != model.param_dim:
        raise DimensionMismatch('prior mean', model.param_dim, prior.gaussian.dim)
    params = mvn_sample(prior.gaussian, count, rng)
    return params, evaluate_many(model, params, workers)


def compute_posterior_weights(
    params: np.ndarray,
    states: np.ndarray,
    data: Optional[DataSpec],
    h: ObservationOperator,
    constraint_set: ConstraintSet,
    prior: Optional[PriorSpec] = None,
) -> WeightedSamples:
    """
    log w_j = log p(D | theta_j) + log p(G(x_j) = 0 | theta_j), normalised.

    ``data=None`` drops the data likelihood. ``prior`` only fills log_prior,
    used for the MAP; a degenerate prior gives log_prior = 0.

    :raises AllWeightsZero:
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if not len(params):
        raise ValueError('samples must be non-empty')
    if len(params) != len(states):
        raise DimensionMismatch('states', len(params), len(states))

    if data is None:
        log_data = np.zeros(len(params))
    else:
        log_data = np.atleast_1d(mvn_logpdf(h.apply(states), data.gaussian))

    evaluation = constraint_set.evaluate(states)
    log_prior = np.zeros(len(params))
    if prior is not None:
        try:
            log_prior = np.atleast_1d(mvn_logpdf(params, prior.gaussian))
        except NotPositiveDefinite:
            logger.debug('degenerate prior, log prior set to 0')

    log_weights = log_data + evaluation.log_likelihood
    if not np.any(np.isfinite(log_weights)):
        raise AllWeightsZero(float(np.max(log_weights)))

    weights = log_normalize(log_weights)
    samples = WeightedSamples(
        params=params,
        states=states,
        log_prior=log_prior,
        log_data=log_data,
        log_constraint=evaluation.log_likelihood,
        weights=weights,
        undefined=evaluation.undefined,
        diagnostics=evaluation.diagnostics,
    )
    logger.debug(
        'weighted %d samples: max log weight %.6g, ess %.1f, %d undefined',
        len(samples), float(np.max(log_weights)), samples.ess, evaluation.undefined,
    )
    if samples.ess < 0.01 * len(samples):
        logger.warning('effective sample size %.1f is below 1%% of %d samples', samples.ess, len(samples))
    return samples


def estimate(samples: WeightedSamples, model: ForwardModel, h: ObservationOperator) -> ExactEstimate:
    """
    Posterior mean and MAP sample (lowest index on ties).
    """
    expectation = weighted_mean(samples.params, samples.weights)
    map_index = int(np.argmax(samples.log_posterior))
    theta_map = samples.params[map_index].copy()
    state_expectation = model.evaluate(expectation)
    state_map = model.evaluate(theta_map)
    return ExactEstimate(
        theta_expectation=expectation,
        theta_map=theta_map,
        map_index=map_index,
        state_expectation=state_expectation,
        state_map=state_map,
        output_expectation=h.apply(state_expectation),
        output_map=h.apply(state_map),
    )


def map_optimization_objective(
    theta: np.ndarray,
    prior: PriorSpec,
    data: Optional[DataSpec],
    h: ObservationOperator,
    constraint_set: ConstraintSet,
    model: ForwardModel,
) -> float:
    """
    ||Sigma_theta^-1/2 (theta - theta_hat)||^2 + ||Sigma_l^-1/2 (ybar - H F(theta))||^2
    + constraint penalty. Its minimiser over a sample set is the MAP sample.
    """
    theta = as_vector(theta)
    state = model.evaluate(theta)
    value = mahalanobis_sq(theta, prior.mean, prior.cov)
    if data is not None:
        value += mahalanobis_sq(h.apply(state), data.observed_mean, data.noise_cov)
    return value + constraint_set.penalty(state)


@dataclass(frozen=True)
class ExactResult:
    samples: WeightedSamples
    estimate: ExactEstimate


def run(
    prior: PriorSpec,
    data: Optional[DataSpec],
    model: ForwardModel,
    h: ObservationOperator,
    constraint_set: ConstraintSet,
    count: int,
    seed: int,
    workers: int = 1,
) -> ExactResult:
    """
    Draw, weight and estimate. Deterministic given ``seed``.
    """
    logger.info('exact inference: %d prior samples, %d constraint terms, seed %d', count, len(constraint_set), seed)
    params, states = draw_prior_samples(prior, model, count, substream(seed, 'prior-samples'), workers)
    samples = compute_posterior_weights(params, states, data, h, constraint_set, prior)
    result = ExactResult(samples, estimate(samples, model, h))
    logger.info(
        'posterior mean %s, MAP %s (sample %d), ess %.1f',
        result.estimate.theta_expectation.tolist(), result.estimate.theta_map.tolist(),
        result.estimate.map_index, samples.ess,
    )
    return result
