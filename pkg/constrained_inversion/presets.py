"""
Settings of the synthetic benchmark experiments. Seeds are pinned so results
are reproducible; override them with ``RunConfig.replace(seed=...)``.
"""
from typing import Any, Dict, Tuple

from .config import ENKF, EXACT, RunConfig
from .exceptions import UnknownPreset

SYNTHETIC_CONSTRAINT = 'synthetic-log-equality'
INITIAL_GUESSES = [[-2.0, -2.0], [0.0, 0.0], [2.0, 2.0]]
ENSEMBLE_SIZE = 500


def _identity(scale: float):
    return [[scale, 0.0], [0.0, scale]]


def _base(method: str, prior_variance: float, seed: int) -> Dict[str, Any]:
    return {
        'method': method,
        'model': 'synthetic',
        'prior': {'mean': [0.0, 0.0], 'cov': _identity(prior_variance)},
        'data': {'mean': [-1.0], 'cov': [[0.01]]},
        'ensemble_size': ENSEMBLE_SIZE,
        'seed': seed,
    }


def _exact(label: str, constraint_variance: float = None) -> Dict[str, Any]:
    values = _base(EXACT, 3.0, 2020)
    values.update(ensemble_size=5000, label=label, output_dir=f'results/{label}')
    if constraint_variance is not None:
        values['constraints'] = [{'name': SYNTHETIC_CONSTRAINT, 'variance': constraint_variance}]
    return values


def _enkf(label: str, prior_variance: float, constraint_variance: float = None) -> Dict[str, Any]:
    values = _base(ENKF, prior_variance, 2021)
    values.update(
        initial_guesses=INITIAL_GUESSES,
        max_iterations=1000,
        label=label,
        output_dir=f'results/{label}',
    )
    if constraint_variance is not None:
        values['constraints'] = [{'name': SYNTHETIC_CONSTRAINT, 'variance': constraint_variance}]
    return values


def _contour() -> Dict[str, Any]:
    values = _exact('fig1-contour', 0.5)
    values['contour'] = {'bounds': [-3.0, 3.0, -3.0, 3.0], 'resolution': 121}
    return values


PRESETS = {
    'table1': lambda: _exact('table1', 0.5),
    'table1-noconstraint': lambda: _exact('table1-noconstraint'),
    'table2': lambda: _enkf('table2', 1.0, 2.0),
    'table3': lambda: _enkf('table3', 3.0, 2.0),
    'table4': lambda: _enkf('table4', 1.0, 1.0),
    'fig3-sweep': lambda: _enkf('fig3-sweep', 1.0),
    'fig1-contour': _contour,
}


def preset_names() -> Tuple[str, ...]:
    return tuple(PRESETS)


def preset(name: str) -> RunConfig:
    """
    :raises UnknownPreset:
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UnknownPreset(name, preset_names())
    return RunConfig.from_dict(factory())
