"""
Forward models, the linear observation operator and the synthetic benchmark.

The benchmark maps theta in R^2 to two Gaussian bumps centred at (-1, -1) and
(1, 1) and observes ``y = -1.5 x1 - x2``. Its cost ``(ybar - H F(theta))^2`` is
zero at (1, 1) and on the circle of radius sqrt(log 1.5) around (-1, -1).
"""
import enum
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .exceptions import DimensionMismatch, UnknownModel
from .stats import as_matrix, as_vector

SYNTHETIC_H = ((-1.5, -1.0),)
SYNTHETIC_TRUTH = (1.0, 1.0)
GROUP_II_CENTER = (-1.0, -1.0)
GROUP_II_RADIUS = math.sqrt(math.log(1.5))


class ForwardModel(ABC):
    """
    Deterministic map x = F(theta). Implementations must be safe to call
    concurrently on distinct inputs.
    """
    param_dim: int
    state_dim: int

    @abstractmethod
    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        pass

    def evaluate_many(self, thetas: np.ndarray) -> np.ndarray:
        """
        One state per row of ``thetas``. Override when the model vectorises.
        """
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return np.array([self.evaluate(t) for t in thetas]).reshape(len(thetas), self.state_dim)


class SyntheticModel(ForwardModel):
    param_dim = 2
    state_dim = 2

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        return synthetic_forward(theta)

    def evaluate_many(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        t1, t2 = thetas[:, 0], thetas[:, 1]
        return np.column_stack((
            np.exp(-(t1 + 1) ** 2 - (t2 + 1) ** 2),
            np.exp(-(t1 - 1) ** 2 - (t2 - 1) ** 2),
        ))


def synthetic_forward(theta: np.ndarray) -> np.ndarray:
    t1, t2 = as_vector(theta)
    return np.array([
        math.exp(-(t1 + 1) ** 2 - (t2 + 1) ** 2),
        math.exp(-(t1 - 1) ** 2 - (t2 - 1) ** 2),
    ])


class ObservationOperator:
    """
    Linear map y = H x, fixed for the life of a run.
    """
    def __init__(self, matrix: Sequence) -> None:
        self.matrix = as_matrix(matrix)
        self.matrix.setflags(write=False)

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def state_dim(self) -> int:
        return self.matrix.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """
        ``x`` is one state or one state per row.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.state_dim:
            raise DimensionMismatch('state', self.state_dim, x.shape[-1])
        return x @ self.matrix.T

    def augmented(self, param_dim: int) -> np.ndarray:
        """
        [0 | H], acting on z = [theta; x].
        """
        return np.hstack((np.zeros((self.output_dim, param_dim)), self.matrix))


def synthetic_operator() -> ObservationOperator:
    return ObservationOperator(SYNTHETIC_H)


def evaluate_many(model: ForwardModel, thetas: np.ndarray, workers: int = 1) -> np.ndarray:
    """
    States for every row of ``thetas``, in row order. With ``workers > 1`` the
    rows are split into contiguous chunks evaluated on a thread pool.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != model.param_dim:
        raise DimensionMismatch('parameters', model.param_dim, thetas.shape[1])
    if workers <= 1 or len(thetas) < 2 * workers:
        return model.evaluate_many(thetas)

    chunks = np.array_split(thetas, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(model.evaluate_many, chunks))
    return np.vstack(parts)


def reconstruct_output(model: ForwardModel, h: ObservationOperator, theta: np.ndarray) -> np.ndarray:
    theta = as_vector(theta)
    if theta.size != model.param_dim:
        raise DimensionMismatch('parameters', model.param_dim, theta.size)
    return h.apply(model.evaluate(theta))


def cost_function(
    theta: np.ndarray,
    observed: Sequence[float],
    model: ForwardModel = None,
    h: ObservationOperator = None,
) -> float:
    """
    ||ybar - H F(theta)||^2, the synthetic benchmark by default.
    """
    model = model or SyntheticModel()
    h = h or synthetic_operator()
    misfit = as_vector(observed) - reconstruct_output(model, h, theta)
    return float(misfit @ misfit)


class MinimumGroup(enum.Enum):
    GROUP_I = 'I'
    GROUP_II = 'II'
    NEITHER = 'neither'


def classify_minimum(theta: np.ndarray, tol: float = 0.1) -> MinimumGroup:
    """
    GROUP_I near the true minimum (1, 1), GROUP_II near the circle of spurious
    minima around (-1, -1). GROUP_I wins when both apply.
    """
    if tol <= 0:
        raise ValueError('tol must be > 0')
    theta = as_vector(theta)
    if np.linalg.norm(theta - SYNTHETIC_TRUTH) <= tol:
        return MinimumGroup.GROUP_I
    if abs(np.linalg.norm(theta - GROUP_II_CENTER) - GROUP_II_RADIUS) <= tol:
        return MinimumGroup.GROUP_II
    return MinimumGroup.NEITHER


MODELS = {
    'synthetic': (SyntheticModel, synthetic_operator),
}


def get_model(name: str):
    """
    :returns: (ForwardModel, ObservationOperator) registered under ``name``
    :raises UnknownModel:
    """
    try:
        model_cls, operator = MODELS[name]
    except KeyError:
        raise UnknownModel(name, sorted(MODELS))
    return model_cls(), operator()
