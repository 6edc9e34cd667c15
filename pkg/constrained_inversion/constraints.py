"""
Soft constraints on model states.

Every term turns residuals of one or more scalar maps g_i(x) into a Gaussian
log likelihood with variance sigma_c^2: an equality term scores g(x), an
inequality term scores max(0, g(x)), and a disjunction combines its branches
by inclusion-exclusion over the branch densities.
"""
import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import EvaluationError, NonPositiveDisjunction, UnknownConstraint, WrongUsageError
from .stats import GaussianSpec, as_matrix, as_vector, cholesky, mvn_logpdf

logger = logging.getLogger(__name__)

DISJUNCTION_FLOOR = 1e-300
_LOG_FLOOR = math.log(DISJUNCTION_FLOOR)

ResidualFunction = Callable[[np.ndarray], Union[float, np.ndarray]]


class ConstraintKind(enum.Enum):
    EQUALITY = 'equality'
    INEQUALITY = 'inequality'
    DISJUNCTION = 'disjunction'


@dataclass(frozen=True)
class ConstraintTerm:
    """
    :param functions: scalar maps g_i(x); with ``vectorized=True`` each map takes
        a 2-D array of states (one per row) and returns one value per row
    :param variance: sigma_c^2 for equality/inequality terms; for a disjunction
        the covariance Sigma_c over its branches (a vector means a diagonal)

    A map signals an undefined state by raising EvaluationError or returning a
    non-finite value.
    """
    kind: ConstraintKind
    functions: Tuple[ResidualFunction, ...]
    variance: np.ndarray
    name: str = ''
    vectorized: bool = False

    def __post_init__(self):
        functions = tuple(self.functions)
        if self.kind is ConstraintKind.DISJUNCTION:
            if len(functions) < 2:
                raise WrongUsageError('a disjunction needs at least two branches')
            variance = as_vector(self.variance) if np.ndim(self.variance) <= 1 else as_matrix(self.variance)
            cov = np.diag(variance) if variance.ndim == 1 else variance
            if cov.shape != (len(functions), len(functions)):
                raise WrongUsageError(f'disjunction "{self.name}": Sigma_c must be {len(functions)}x{len(functions)}')
        else:
            if len(functions) != 1:
                raise WrongUsageError(f'{self.kind.value} term "{self.name}" takes exactly one function')
            cov = as_matrix(float(np.squeeze(self.variance)))
        if np.any(np.diag(cov) <= 0):
            raise WrongUsageError(f'constraint "{self.name}": variances must be > 0')
        cholesky(cov)
        object.__setattr__(self, 'functions', functions)
        object.__setattr__(self, 'variance', cov)

    @classmethod
    def equality(cls, g: ResidualFunction, variance: float, name: str = '', vectorized: bool = False):
        return cls(ConstraintKind.EQUALITY, (g,), variance, name, vectorized)

    @classmethod
    def inequality(cls, g: ResidualFunction, variance: float, name: str = '', vectorized: bool = False):
        """
        Soft g(x) <= 0.
        """
        return cls(ConstraintKind.INEQUALITY, (g,), variance, name, vectorized)

    @classmethod
    def disjunction(
        cls,
        functions: Sequence[ResidualFunction],
        variance: Union[Sequence[float], np.ndarray],
        name: str = '',
        vectorized: bool = False,
    ):
        """
        Soft g_1(x) = 0 or g_2(x) = 0 or ...
        """
        return cls(ConstraintKind.DISJUNCTION, tuple(functions), variance, name, vectorized)

    @property
    def log_normalizer(self) -> float:
        """
        Peak log density of an equality/inequality term; 0 for disjunctions.
        """
        if self.kind is ConstraintKind.DISJUNCTION:
            return 0.0
        return -0.5 * (math.log(2.0 * math.pi) + math.log(self.variance[0, 0]))

    def residuals_many(self, states: np.ndarray) -> np.ndarray:
        """
        Raw g_i values, one row per state, NaN where a map is undefined.
        """
        states = np.atleast_2d(np.asarray(states, dtype=float))
        out = np.empty((len(states), len(self.functions)))
        for col, g in enumerate(self.functions):
            if self.vectorized:
                with np.errstate(divide='ignore', invalid='ignore'):
                    out[:, col] = np.asarray(g(states), dtype=float)
                continue
            for row, x in enumerate(states):
                try:
                    out[row, col] = float(g(x))
                except (EvaluationError, ArithmeticError, ValueError):
                    out[row, col] = np.nan
        out[~np.isfinite(out)] = np.nan
        return out

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """
        :raises EvaluationError:
        """
        values = self.residuals_many(as_vector(x)[None, :])[0]
        if np.any(np.isnan(values)):
            raise EvaluationError(f'term "{self.name}" at x = {as_vector(x).tolist()}')
        return values

    def log_likelihood_many(self, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        :returns: log likelihood per state (-inf where undefined) and a mask of
            states whose disjunction value was floored
        """
        residuals = self.residuals_many(states)
        defined = ~np.any(np.isnan(residuals), axis=1)
        result = np.full(len(residuals), -np.inf)
        floored = np.zeros(len(residuals), dtype=bool)
        if not np.any(defined):
            return result, floored

        r = residuals[defined]
        if self.kind is ConstraintKind.EQUALITY:
            result[defined] = mvn_logpdf(r, GaussianSpec([0.0], self.variance))
        elif self.kind is ConstraintKind.INEQUALITY:
            result[defined] = mvn_logpdf(np.maximum(r, 0.0), GaussianSpec([0.0], self.variance))
        else:
            values, nonpositive = _union_log_density(r, self.variance)
            result[defined] = values
            floored[defined] = nonpositive
        return result, floored

    def penalty_many(self, states: np.ndarray) -> np.ndarray:
        """
        -2 (log likelihood - log normaliser): g^2 / sigma^2 for Gaussian terms.
        """
        log_lik, _ = self.log_likelihood_many(states)
        return -2.0 * (log_lik - self.log_normalizer)


def _union_log_density(residuals: np.ndarray, cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    log P(g_1 = 0 or ... or g_n = 0) by inclusion-exclusion over every
    non-empty subset of branches, each subset scored with its marginal of cov.
    With two branches: log(p1 + p2 - p12).
    """
    n = residuals.shape[1]
    log_terms, signs = [], []
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            idx = list(subset)
            spec = GaussianSpec(np.zeros(size), cov[np.ix_(idx, idx)])
            log_terms.append(mvn_logpdf(residuals[:, idx], spec))
            signs.append(1.0 if size % 2 else -1.0)

    log_terms = np.column_stack(log_terms)
    peak = np.max(log_terms, axis=1)
    combined = np.exp(log_terms - peak[:, None]) @ np.array(signs)
    nonpositive = combined <= 0
    with np.errstate(divide='ignore', invalid='ignore'):
        values = peak + np.log(np.where(nonpositive, 1.0, combined))
    values = np.where(nonpositive, _LOG_FLOOR, np.maximum(values, _LOG_FLOOR))
    return values, nonpositive


def _check_kind(term: ConstraintTerm, kind: ConstraintKind):
    if term.kind is not kind:
        raise WrongUsageError(f'expected a {kind.value} term, got {term.kind.value}')


def equality_residual(term: ConstraintTerm, x: np.ndarray) -> float:
    """
    :raises EvaluationError:
    """
    _check_kind(term, ConstraintKind.EQUALITY)
    return float(term.residuals(x)[0])


def inequality_residual(term: ConstraintTerm, x: np.ndarray) -> float:
    """
    :raises EvaluationError:
    """
    _check_kind(term, ConstraintKind.INEQUALITY)
    return max(0.0, float(term.residuals(x)[0]))


def term_log_likelihood(
    term: ConstraintTerm,
    x: np.ndarray,
    diagnostics: Optional[List[NonPositiveDisjunction]] = None,
) -> float:
    """
    :param diagnostics: receives a NonPositiveDisjunction when a disjunction is floored
    :raises EvaluationError:
    """
    term.residuals(x)
    values, floored = term.log_likelihood_many(as_vector(x)[None, :])
    if floored[0]:
        logger.warning('disjunction "%s" floored at x = %s', term.name, as_vector(x).tolist())
        if diagnostics is not None:
            diagnostics.append(NonPositiveDisjunction(term.name, DISJUNCTION_FLOOR))
    return float(values[0])


@dataclass
class ConstraintEvaluation:
    log_likelihood: np.ndarray
    undefined: int = 0
    diagnostics: List[NonPositiveDisjunction] = field(default_factory=list)


class ConstraintSet:
    """
    Independent constraint terms; their likelihoods multiply. May be empty.
    """
    def __init__(self, terms: Iterable[ConstraintTerm] = ()) -> None:
        self.terms = tuple(terms)

    def __iter__(self):
        for term in self.terms:
            yield term

    def __len__(self) -> int:
        return len(self.terms)

    def log_likelihood(
        self,
        x: np.ndarray,
        diagnostics: Optional[List[NonPositiveDisjunction]] = None,
    ) -> float:
        """
        :raises EvaluationError:
        """
        return float(sum(term_log_likelihood(term, x, diagnostics) for term in self.terms))

    def evaluate(self, states: np.ndarray) -> ConstraintEvaluation:
        """
        Log likelihood of every state; undefined states get -inf.
        """
        states = np.atleast_2d(np.asarray(states, dtype=float))
        total = np.zeros(len(states))
        diagnostics = []
        for term in self.terms:
            values, floored = term.log_likelihood_many(states)
            total += values
            diagnostics.extend(NonPositiveDisjunction(term.name, DISJUNCTION_FLOOR) for _ in range(int(floored.sum())))

        undefined = int(np.sum(np.isneginf(total))) if self.terms else 0
        if undefined:
            logger.debug('%d of %d states are outside the constraint domain, weight 0', undefined, len(states))
        if diagnostics:
            logger.debug('%d non-positive disjunction values floored', len(diagnostics))
        return ConstraintEvaluation(total, undefined, diagnostics)

    def penalty(self, x: np.ndarray) -> float:
        """
        Sum of term penalties: the constraint part of the MAP objective.
        """
        states = as_vector(x)[None, :]
        return float(sum(term.penalty_many(states)[0] for term in self.terms))

    def penalty_many(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        total = np.zeros(len(states))
        for term in self.terms:
            total += term.penalty_many(states)
        return total


def set_log_likelihood(constraint_set: ConstraintSet, x: np.ndarray) -> float:
    return constraint_set.log_likelihood(x)


def synthetic_log_residual(states: np.ndarray) -> np.ndarray:
    """
    -0.25 log x1 + 0.25 log x2 - 2, NaN where a state is not positive.
    Through the synthetic model this equals theta1 + theta2 - 2.
    """
    states = np.atleast_2d(states)
    x1, x2 = states[:, 0], states[:, 1]
    with np.errstate(divide='ignore', invalid='ignore'):
        values = -0.25 * np.log(x1) + 0.25 * np.log(x2) - 2.0
    return np.where((x1 > 0) & (x2 > 0), values, np.nan)


def synthetic_log_equality(variance: float) -> ConstraintTerm:
    return ConstraintTerm.equality(synthetic_log_residual, variance, 'synthetic-log-equality', vectorized=True)


CONSTRAINTS: Dict[str, Callable[[float], ConstraintTerm]] = {
    'synthetic-log-equality': synthetic_log_equality,
}


def register_constraint(name: str, factory: Callable[[float], ConstraintTerm]) -> None:
    """
    Make ``factory(variance)`` selectable by name in run configurations.
    """
    CONSTRAINTS[name] = factory


def get_constraint(name: str, variance: float) -> ConstraintTerm:
    """
    :raises UnknownConstraint:
    """
    try:
        factory = CONSTRAINTS[name]
    except KeyError:
        raise UnknownConstraint(name, sorted(CONSTRAINTS))
    return factory(variance)
