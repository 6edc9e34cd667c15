"""
Run configuration: a strict JSON document describing one experiment.

    {
      "method": "enkf",
      "model": "synthetic",
      "constraints": [{"name": "synthetic-log-equality", "variance": 2.0}],
      "prior": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
      "data": {"mean": [-1.0], "cov": [[0.01]]},
      "ensemble_size": 500,
      "initial_guesses": [[-2.0, -2.0], [0.0, 0.0], [2.0, 2.0]],
      "seed": 7
    }
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .after_checks import DEFAULT_CHECKS
from .constraints import ConstraintSet, get_constraint
from .enkf import EnkfConfig
from .exact import DataSpec, PriorSpec
from .exceptions import ConfigSyntaxError, InvalidConfigError
from .model import MODELS, get_model
from .rules import Boolean, Enum, Integer, Matrix, Min, Number, Square, String, Symmetric, Vector
from .schema import ConfigParam

EXACT = 'exact'
ENKF = 'enkf'

_GAUSSIAN = ConfigParam({
    'mean': [Vector()],
    'cov': [Matrix(), Square(), Symmetric()],
})

CONFIG_SCHEMA = ConfigParam({
    'method': [String(), Enum(EXACT, ENKF)],
    'model': ConfigParam([String(), Enum(*MODELS)], required=False, default='synthetic'),
    'constraints': ConfigParam(
        {'name': [String()], 'variance': [Number(), Min(0, False)]},
        as_list=True, required=False, default=[],
    ),
    'prior': _GAUSSIAN,
    'data': _GAUSSIAN,
    'ensemble_size': [Integer(), Min(1)],
    'max_iterations': ConfigParam([Integer(), Min(1)], required=False, default=1000),
    'convergence_tol': ConfigParam([Number(), Min(0)], required=False, default=1e-6),
    'convergence_window': ConfigParam([Integer(), Min(1)], required=False, default=10),
    'initial_guesses': ConfigParam([Vector()], as_list=True, required=False, default=[]),
    'seed': [Integer(), Min(0)],
    'perturbed_observations': ConfigParam([Boolean()], required=False, default=False),
    'covariance_floor': ConfigParam([Number(), Min(0)], required=False, default=0.0),
    'centred_resampling': ConfigParam([Boolean()], required=False, default=True),
    'snapshot_ensembles': ConfigParam([Boolean()], required=False, default=False),
    'workers': ConfigParam([Integer(), Min(1)], required=False, default=1),
    'contour': ConfigParam(
        {'bounds': [Vector(4)], 'resolution': [Integer(), Min(2)]},
        required=False, default=None,
    ),
    'output_dir': ConfigParam([String()], required=False, default='results'),
    'label': ConfigParam([String()], required=False, default=''),
})

Vec = Tuple[float, ...]
Mat = Tuple[Vec, ...]


def _vec(values: Sequence[float]) -> Vec:
    return tuple(float(v) for v in values)


def _mat(rows: Sequence[Sequence[float]]) -> Mat:
    return tuple(_vec(row) for row in rows)


@dataclass(frozen=True)
class GaussianConfig:
    mean: Vec
    cov: Mat

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': list(self.mean), 'cov': [list(row) for row in self.cov]}


@dataclass(frozen=True)
class ConstraintConfig:
    name: str
    variance: float

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'variance': self.variance}


@dataclass(frozen=True)
class ContourConfig:
    """
    Grid over [bounds[0], bounds[1]] x [bounds[2], bounds[3]] with
    ``resolution`` points per axis.
    """
    bounds: Vec
    resolution: int

    def to_dict(self) -> Dict[str, Any]:
        return {'bounds': list(self.bounds), 'resolution': self.resolution}


@dataclass(frozen=True)
class RunConfig:
    method: str
    prior: GaussianConfig
    data: GaussianConfig
    ensemble_size: int
    seed: int
    model: str = 'synthetic'
    constraints: Tuple[ConstraintConfig, ...] = ()
    max_iterations: int = 1000
    convergence_tol: float = 1e-6
    convergence_window: int = 10
    initial_guesses: Tuple[Vec, ...] = ()
    perturbed_observations: bool = False
    covariance_floor: float = 0.0
    centred_resampling: bool = True
    snapshot_ensembles: bool = False
    workers: int = 1
    contour: Optional[ContourConfig] = None
    output_dir: str = 'results'
    label: str = ''

    @classmethod
    def from_dict(cls, value: Any, checks=DEFAULT_CHECKS) -> 'RunConfig':
        """
        :raises InvalidConfigError: with every field error found
        """
        values, errors = CONFIG_SCHEMA.validate(value)
        if errors:
            raise InvalidConfigError(errors)
        for check in checks:
            errors = check.validate(values)
            if errors:
                raise InvalidConfigError(errors)

        contour = values['contour']
        return cls(
            method=values['method'],
            model=values['model'],
            constraints=tuple(ConstraintConfig(c['name'], c['variance']) for c in values['constraints']),
            prior=GaussianConfig(_vec(values['prior']['mean']), _mat(values['prior']['cov'])),
            data=GaussianConfig(_vec(values['data']['mean']), _mat(values['data']['cov'])),
            ensemble_size=values['ensemble_size'],
            max_iterations=values['max_iterations'],
            convergence_tol=values['convergence_tol'],
            convergence_window=values['convergence_window'],
            initial_guesses=tuple(_vec(g) for g in values['initial_guesses']),
            seed=values['seed'],
            perturbed_observations=values['perturbed_observations'],
            covariance_floor=values['covariance_floor'],
            centred_resampling=values['centred_resampling'],
            snapshot_ensembles=values['snapshot_ensembles'],
            workers=values['workers'],
            contour=ContourConfig(_vec(contour['bounds']), contour['resolution']) if contour else None,
            output_dir=values['output_dir'],
            label=values['label'],
        )

    def to_dict(self) -> Dict[str, Any]:
        values = {
            'method': self.method,
            'model': self.model,
            'constraints': [c.to_dict() for c in self.constraints],
            'prior': self.prior.to_dict(),
            'data': self.data.to_dict(),
            'ensemble_size': self.ensemble_size,
            'max_iterations': self.max_iterations,
            'convergence_tol': self.convergence_tol,
            'convergence_window': self.convergence_window,
            'initial_guesses': [list(g) for g in self.initial_guesses],
            'seed': self.seed,
            'perturbed_observations': self.perturbed_observations,
            'covariance_floor': self.covariance_floor,
            'centred_resampling': self.centred_resampling,
            'snapshot_ensembles': self.snapshot_ensembles,
            'workers': self.workers,
            'output_dir': self.output_dir,
            'label': self.label,
        }
        if self.contour is not None:
            values['contour'] = self.contour.to_dict()
        return values

    def replace(self, **changes: Any) -> 'RunConfig':
        """
        Copy with ``changes`` applied, validated like a freshly loaded config.
        """
        values = self.to_dict()
        values.update(changes)
        if values.get('contour') is None:
            values.pop('contour', None)
        return RunConfig.from_dict(values)

    def model_and_operator(self):
        return get_model(self.model)

    def prior_spec(self) -> PriorSpec:
        return PriorSpec.from_moments(self.prior.mean, self.prior.cov)

    def data_spec(self) -> DataSpec:
        return DataSpec(np.array(self.data.mean), np.array(self.data.cov))

    def constraint_set(self) -> ConstraintSet:
        return ConstraintSet(get_constraint(c.name, c.variance) for c in self.constraints)

    def starting_points(self) -> Tuple[Vec, ...]:
        return self.initial_guesses or (self.prior.mean,)

    def enkf_config(self, initial_guess: Sequence[float]) -> EnkfConfig:
        return EnkfConfig(
            prior=self.prior_spec(),
            data=self.data_spec(),
            constraints=self.constraint_set(),
            ensemble_size=self.ensemble_size,
            max_iterations=self.max_iterations,
            convergence_tol=self.convergence_tol,
            convergence_window=self.convergence_window,
            seed=self.seed,
            initial_guess=np.array(initial_guess),
            perturbed_observations=self.perturbed_observations,
            covariance_floor=self.covariance_floor,
            centred_resampling=self.centred_resampling,
            snapshot_ensembles=self.snapshot_ensembles,
            workers=self.workers,
        )


def parse_config(text: str) -> RunConfig:
    """
    :raises ConfigSyntaxError: malformed JSON, with line and column
    :raises InvalidConfigError:
    """
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSyntaxError(e.lineno, e.colno, e.msg)
    return RunConfig.from_dict(value)


def load_config(path: Union[str, Path]) -> RunConfig:
    return parse_config(Path(path).read_text(encoding='utf8'))


def dump_config(config: RunConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + '\n'
