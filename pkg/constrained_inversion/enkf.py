"""
Iterative ensemble Kalman filter over the augmented state z = [theta; x] with
constraint reweighting.

Each iteration draws a Gaussian ensemble (the prior around the initial guess
on the first pass, the previous posterior afterwards), moves every member
toward the observed mean with the ensemble Kalman gain, multiplies the member
weights by their constraint likelihoods and summarises the weighted ensemble
by its mean and parameter covariance.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .constraints import ConstraintEvaluation, ConstraintSet
from .exact import DataSpec, PriorSpec
from .exceptions import AllWeightsZero, DimensionMismatch, NotPositiveDefinite, SingularInnovation
from .model import ForwardModel, ObservationOperator, evaluate_many
from .stats import (
    GaussianSpec,
    as_vector,
    check_weights,
    cholesky,
    effective_sample_size,
    log_normalize,
    mvn_sample,
    substream,
    weighted_covariance,
    weighted_mean,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentedState:
    theta: np.ndarray
    x: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return np.concatenate((as_vector(self.theta), as_vector(self.x)))


@dataclass(frozen=True)
class Ensemble:
    """
    J members stacked row-wise as z = [theta; x], with normalised weights.
    """
    members: np.ndarray
    weights: np.ndarray
    param_dim: int

    def __post_init__(self):
        members = np.atleast_2d(np.asarray(self.members, dtype=float))
        object.__setattr__(self, 'members', members)
        object.__setattr__(self, 'weights', check_weights(self.weights, len(members)))

    @classmethod
    def uniform(cls, thetas: np.ndarray, states: np.ndarray) -> 'Ensemble':
        thetas = np.atleast_2d(thetas)
        members = np.hstack((thetas, np.atleast_2d(states)))
        return cls(members, np.full(len(members), 1.0 / len(members)), thetas.shape[1])

    def __len__(self) -> int:
        return len(self.members)

    @property
    def thetas(self) -> np.ndarray:
        return self.members[:, :self.param_dim]

    @property
    def states(self) -> np.ndarray:
        return self.members[:, self.param_dim:]

    def member(self, j: int) -> AugmentedState:
        return AugmentedState(self.thetas[j].copy(), self.states[j].copy())

    def with_members(self, members: np.ndarray) -> 'Ensemble':
        return Ensemble(members, self.weights, self.param_dim)

    def with_weights(self, weights: np.ndarray) -> 'Ensemble':
        return Ensemble(self.members, weights, self.param_dim)


@dataclass(frozen=True)
class EnkfConfig:
    """
    :param initial_guess: mean of the first sampling distribution; the prior
        mean when omitted
    :param convergence_tol: stop once ||theta_k - theta_k-1||_inf stays below it
        for ``convergence_window`` consecutive iterations; 0 disables
    :param covariance_floor: jitter eps * I added to the resampling covariance
    :param centred_resampling: every resampled ensemble has mean exactly
        theta_bar; the covariance is still sampled
    """
    prior: PriorSpec
    data: DataSpec
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    ensemble_size: int = 500
    max_iterations: int = 1000
    convergence_tol: float = 1e-6
    convergence_window: int = 10
    seed: int = 0
    initial_guess: Optional[np.ndarray] = None
    perturbed_observations: bool = False
    covariance_floor: float = 0.0
    centred_resampling: bool = True
    snapshot_ensembles: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.ensemble_size < 2:
            raise ValueError('ensemble_size must be >= 2')
        if self.max_iterations < 1:
            raise ValueError('max_iterations must be >= 1')
        if self.convergence_tol < 0 or self.covariance_floor < 0:
            raise ValueError('convergence_tol and covariance_floor must be >= 0')
        if self.convergence_window < 1:
            raise ValueError('convergence_window must be >= 1')
        if self.initial_guess is not None:
            guess = as_vector(self.initial_guess)
            if guess.size != self.prior.gaussian.dim:
                raise DimensionMismatch('initial guess', self.prior.gaussian.dim, guess.size)
            object.__setattr__(self, 'initial_guess', guess)

    @property
    def start(self) -> np.ndarray:
        return self.prior.mean if self.initial_guess is None else self.initial_guess


@dataclass(frozen=True)
class Snapshot:
    iteration: int
    members: np.ndarray
    weights: np.ndarray


@dataclass
class IterationTrace:
    theta_bar: List[np.ndarray] = field(default_factory=list)
    output: List[np.ndarray] = field(default_factory=list)
    theta_cov: List[np.ndarray] = field(default_factory=list)
    ess: List[float] = field(default_factory=list)
    undefined: List[int] = field(default_factory=list)
    floored: List[int] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.theta_bar)

    def record(self, theta_bar, output, theta_cov, ess, evaluation: ConstraintEvaluation):
        self.theta_bar.append(theta_bar)
        self.output.append(output)
        self.theta_cov.append(theta_cov)
        self.ess.append(ess)
        self.undefined.append(evaluation.undefined)
        self.floored.append(len(evaluation.diagnostics))


@dataclass(frozen=True)
class EnkfResult:
    theta: np.ndarray
    trace: IterationTrace
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.trace)


def init_ensemble(config: EnkfConfig, model: ForwardModel, rng: np.random.Generator) -> Ensemble:
    """
    theta_j ~ N(theta0, Sigma_theta), x_j = F(theta_j), weights 1/J.
    """
    return resample(
        config.start, config.prior.cov, model, config.ensemble_size, rng,
        workers=config.workers, centred=config.centred_resampling,
    )


def ensemble_moments(e: Ensemble) -> Tuple[np.ndarray, np.ndarray]:
    mean = weighted_mean(e.members, e.weights)
    return mean, weighted_covariance(e.members, e.weights, mean)


def kalman_update(
    e: Ensemble,
    h: ObservationOperator,
    data: DataSpec,
    rng: Optional[np.random.Generator] = None,
) -> Ensemble:
    """
    z_j <- z_j + C H^T (H C H^T + Sigma_l)^-1 (ybar - H z_j), with ``h`` acting on
    the augmented state. Every member is moved toward the same ybar unless
    ``rng`` is given, in which case member j targets ybar + eps_j,
    eps_j ~ N(0, Sigma_l).

    :raises SingularInnovation:
    """
    if h.state_dim != e.members.shape[1]:
        raise DimensionMismatch('augmented observation operator', e.members.shape[1], h.state_dim)
    if h.output_dim != data.dim:
        raise DimensionMismatch('observed mean', h.output_dim, data.dim)

    _, cov = ensemble_moments(e)
    hc = h.matrix @ cov
    innovation_cov = hc @ h.matrix.T + data.noise_cov
    try:
        factor = cholesky(innovation_cov)
    except NotPositiveDefinite as error:
        raise SingularInnovation(str(error))
    gain = linalg.cho_solve((factor, True), hc).T

    targets = np.broadcast_to(data.observed_mean, (len(e), data.dim))
    if rng is not None:
        targets = targets + mvn_sample(GaussianSpec(np.zeros(data.dim), data.noise_cov), len(e), rng)
    innovations = targets - h.apply(e.members)
    return e.with_members(e.members + innovations @ gain.T)


def _reweigh(e: Ensemble, constraint_set: ConstraintSet) -> Tuple[Ensemble, ConstraintEvaluation]:
    evaluation = constraint_set.evaluate(e.states)
    with np.errstate(divide='ignore'):
        log_weights = np.log(e.weights) + evaluation.log_likelihood
    if not np.any(np.isfinite(log_weights)):
        raise AllWeightsZero(float(np.max(log_weights)))
    return e.with_weights(log_normalize(log_weights)), evaluation


def constraint_reweigh(e: Ensemble, constraint_set: ConstraintSet) -> Ensemble:
    """
    w'_j = w_j Lg_j / sum_p w_p Lg_p, computed in log space; members unchanged.

    :raises AllWeightsZero:
    """
    return _reweigh(e, constraint_set)[0]


def constrained_estimate(e: Ensemble) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    :returns: (z_bar, theta_bar, posterior parameter covariance)
    """
    z_bar = weighted_mean(e.members, e.weights)
    theta_bar = z_bar[:e.param_dim]
    return z_bar, theta_bar, weighted_covariance(e.thetas, e.weights, theta_bar)


def resample(
    theta_bar: np.ndarray,
    theta_cov: np.ndarray,
    model: ForwardModel,
    count: int,
    rng: np.random.Generator,
    covariance_floor: float = 0.0,
    workers: int = 1,
    centred: bool = True,
) -> Ensemble:
    """
    Fresh members theta_j ~ N(theta_bar, theta_cov + floor * I), x_j = F(theta_j),
    uniform weights. A singular covariance is sampled as is. With ``centred``
    the members average to theta_bar exactly.
    """
    theta_bar = as_vector(theta_bar)
    cov = np.asarray(theta_cov, dtype=float) + covariance_floor * np.eye(theta_bar.size)
    thetas = mvn_sample(GaussianSpec(theta_bar, cov), count, rng, centred=centred)
    return Ensemble.uniform(thetas, evaluate_many(model, thetas, workers))


def run(config: EnkfConfig, model: ForwardModel, h: ObservationOperator) -> EnkfResult:
    """
    Iterate resample -> Kalman update -> constraint reweighting -> estimate
    until theta_bar settles or max_iterations is reached. Deterministic given
    the seed: iteration k draws only from its own sub-stream.
    """
    augmented = ObservationOperator(h.augmented(model.param_dim))
    trace = IterationTrace()
    theta_bar, theta_cov = None, None
    settled, converged = 0, False

    logger.info(
        'enkf: J=%d, start %s, %d constraint terms, seed %d',
        config.ensemble_size, config.start.tolist(), len(config.constraints), config.seed,
    )
    for iteration in range(config.max_iterations):
        rng = substream(config.seed, 'enkf-iteration', iteration)
        if theta_bar is None:
            e = init_ensemble(config, model, rng)
        else:
            e = resample(
                theta_bar, theta_cov, model, config.ensemble_size, rng,
                covariance_floor=config.covariance_floor, workers=config.workers,
                centred=config.centred_resampling,
            )

        e = kalman_update(e, augmented, config.data, rng if config.perturbed_observations else None)
        e, evaluation = _reweigh(e, config.constraints)
        _, new_theta_bar, theta_cov = constrained_estimate(e)

        ess = effective_sample_size(e.weights)
        output = h.apply(model.evaluate(new_theta_bar))
        trace.record(new_theta_bar, output, theta_cov, ess, evaluation)
        if config.snapshot_ensembles:
            trace.snapshots.append(Snapshot(iteration, e.members.copy(), e.weights.copy()))
        logger.debug(
            'iteration %d: theta_bar %s, output %s, ess %.1f, cov trace %.3g',
            iteration, new_theta_bar.tolist(), output.tolist(), ess, float(np.trace(theta_cov)),
        )
        if ess < 0.01 * config.ensemble_size:
            logger.warning('iteration %d: effective sample size %.1f is below 1%% of J', iteration, ess)

        if theta_bar is not None and np.max(np.abs(new_theta_bar - theta_bar)) < config.convergence_tol:
            settled += 1
        else:
            settled = 0
        theta_bar = new_theta_bar
        if settled >= config.convergence_window:
            converged = True
            break

    if converged:
        logger.info('enkf converged after %d iterations: theta %s', len(trace), theta_bar.tolist())
    else:
        logger.warning('enkf stopped at the iteration limit %d: theta %s', len(trace), theta_bar.tolist())
    return EnkfResult(theta_bar, trace, converged)
