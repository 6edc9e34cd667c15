"""
Dense Gaussian kernels shared by the inference modules.

Densities are combined in log space and exponentiated only after the maximum
has been subtracted. Sums over samples use numpy's pairwise summation in
index order, so results do not depend on how the log weights were produced.
"""
import logging
import zlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .exceptions import DimensionMismatch, NotPositiveDefinite, WeightsNotNormalized

logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12
WEIGHT_TOLERANCE = 1e-12
_LOG_2PI = np.log(2.0 * np.pi)


def as_vector(value: Union[float, Sequence[float], np.ndarray]) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def as_matrix(value: Union[float, Sequence, np.ndarray]) -> np.ndarray:
    return np.atleast_2d(np.asarray(value, dtype=float))


@dataclass(frozen=True)
class GaussianSpec:
    """
    Mean and covariance of a multivariate normal.

    The covariance must be symmetric and positive semi-definite; a zero matrix is
    allowed and describes a point mass at the mean.
    """
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean)
        cov = as_matrix(self.cov)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch('covariance', (mean.size, mean.size), cov.shape)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError('GaussianSpec entries must be finite')
        scale = max(np.max(np.abs(cov)), 1.0)
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValueError('GaussianSpec covariance must be symmetric')
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'cov', cov)
        sampling_factor(cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def isotropic(cls, mean: Sequence[float], variance: float) -> 'GaussianSpec':
        mean = as_vector(mean)
        return cls(mean, variance * np.eye(mean.size))


def _threshold(m: np.ndarray) -> float:
    return PSD_TOLERANCE * float(np.trace(m))


def cholesky(m: np.ndarray) -> np.ndarray:
    """
    Lower-triangular L with L @ L.T == m.

    :raises NotPositiveDefinite: if a pivot L[i, i]**2 is <= 1e-12 * trace(m)
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch('cholesky input', 'square', m.shape)
    threshold = _threshold(m)
    try:
        factor = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(float(np.min(np.linalg.eigvalsh(m))), threshold)

    pivots = np.diag(factor) ** 2
    if threshold <= 0 or np.any(pivots <= threshold):
        raise NotPositiveDefinite(float(np.min(pivots)), threshold)
    return factor


def sampling_factor(cov: np.ndarray) -> np.ndarray:
    """
    A square-root factor S with S @ S.T == cov, for sampling.

    Positive definite matrices use Cholesky. Singular PSD matrices (a collapsed
    ensemble) fall back to an eigendecomposition with negative rounding noise
    clipped; the zero matrix gives the zero factor.

    :raises NotPositiveDefinite: if an eigenvalue is below -1e-12 * trace(cov)
    """
    cov = as_matrix(cov)
    if not np.any(cov):
        return np.zeros_like(cov)
    try:
        return cholesky(cov)
    except NotPositiveDefinite:
        pass

    values, vectors = np.linalg.eigh(cov)
    threshold = _threshold(cov)
    if threshold < 0 or values[0] < -abs(threshold):
        raise NotPositiveDefinite(float(values[0]), -abs(threshold))
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def mvn_sample(spec: GaussianSpec, count: int, rng: np.random.Generator, centred: bool = False) -> np.ndarray:
    """
    ``count`` independent draws ``mean + S @ xi``, one per row.

    With ``centred`` the standard normal draws have their sample mean removed,
    so the rows average to ``spec.mean`` exactly.
    """
    if count < 1:
        raise ValueError('count must be >= 1')
    factor = sampling_factor(spec.cov)
    xi = rng.standard_normal((count, spec.dim))
    if centred:
        xi -= xi.mean(axis=0)
    return spec.mean + xi @ factor.T


def mvn_logpdf(point: np.ndarray, spec: GaussianSpec) -> Union[float, np.ndarray]:
    """
    Log density of N(spec.mean, spec.cov) at ``point``.

    ``point`` may be one vector or a 2-D array with one point per row; the
    result is a float or an array accordingly.

    :raises NotPositiveDefinite:
    :raises DimensionMismatch:
    """
    points = np.asarray(point, dtype=float)
    single = points.ndim <= 1
    points = np.atleast_2d(points) if not single else as_vector(points)[None, :]
    if points.shape[1] != spec.dim:
        raise DimensionMismatch('point', spec.dim, points.shape[1])

    factor = cholesky(spec.cov)
    residual = points - spec.mean
    whitened = linalg.solve_triangular(factor, residual.T, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(factor)))
    result = -0.5 * (spec.dim * _LOG_2PI + log_det + np.sum(whitened ** 2, axis=0))
    return float(result[0]) if single else result


def mahalanobis_sq(point: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    """
    ||cov^{-1/2} (point - mean)||^2
    """
    factor = cholesky(cov)
    residual = as_vector(point) - as_vector(mean)
    whitened = linalg.solve_triangular(factor, residual, lower=True)
    return float(whitened @ whitened)


def check_weights(weights: np.ndarray, count: int) -> np.ndarray:
    """
    :raises DimensionMismatch:
    :raises WeightsNotNormalized:
    """
    weights = as_vector(weights)
    if weights.size != count:
        raise DimensionMismatch('weights', count, weights.size)
    total = float(np.sum(weights))
    if np.any(weights < 0) or abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise WeightsNotNormalized(total)
    return weights


def weighted_mean(points: np.ndarray, weights: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = check_weights(weights, points.shape[0])
    return weights @ points


def weighted_covariance(points: np.ndarray, weights: np.ndarray, mean: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = check_weights(weights, points.shape[0])
    mean = as_vector(mean)
    if mean.size != points.shape[1]:
        raise DimensionMismatch('mean', points.shape[1], mean.size)
    centred = points - mean
    cov = (centred * weights[:, None]).T @ centred
    return 0.5 * (cov + cov.T)


def log_normalize(log_weights: np.ndarray) -> np.ndarray:
    """
    Softmax of log weights with max-subtraction. -inf entries get weight 0.
    The caller must ensure at least one entry is finite.
    """
    log_weights = as_vector(log_weights)
    weights = np.exp(log_weights - logsumexp(log_weights))
    return weights / np.sum(weights)


def effective_sample_size(weights: np.ndarray) -> float:
    weights = as_vector(weights)
    return float(1.0 / np.sum(weights ** 2))


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """
    Independent generator for (seed, purpose label, iteration index).
    """
    sequence = np.random.SeedSequence([int(seed), zlib.crc32(label.encode('utf8')), int(index)])
    return np.random.default_rng(sequence)
