"""
CSV and JSON files emitted by a run. Floats are written with 17 significant
digits and '.' as decimal separator so files can be diffed and re-read
bit for bit.
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np

from .config import ContourConfig
from .enkf import IterationTrace
from .exact import WeightedSamples
from .model import ForwardModel, ObservationOperator, classify_minimum

logger = logging.getLogger(__name__)


def fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, 'w', newline='', encoding='utf8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    logger.info('wrote %s', path)
    return path


def write_json(path: Path, value: Any) -> Path:
    Path(path).write_text(json.dumps(value, indent=2, sort_keys=True) + '\n', encoding='utf8')
    logger.info('wrote %s', path)
    return path


def _names(prefix: str, count: int) -> List[str]:
    return [f'{prefix}_{i + 1}' for i in range(count)]


def write_samples(path: Path, samples: WeightedSamples) -> Path:
    header = (
        _names('theta', samples.params.shape[1])
        + _names('x', samples.states.shape[1])
        + ['log_data', 'log_constraint', 'weight']
    )
    rows = (
        list(theta) + list(x) + [ld, lc, w]
        for theta, x, ld, lc, w in zip(
            samples.params, samples.states, samples.log_data, samples.log_constraint, samples.weights,
        )
    )
    return write_csv(path, header, rows)


def write_trace(path: Path, trace: IterationTrace, tol: float = 0.1) -> Path:
    param_dim = trace.theta_bar[0].size
    output_dim = trace.output[0].size
    header = (
        ['iteration']
        + _names('theta_bar', param_dim)
        + _names('output', output_dim)
        + ['ess']
        + [f'cov_{i + 1}_{j + 1}' for i in range(param_dim) for j in range(param_dim)]
        + ['group']
    )
    rows = (
        [k] + list(theta) + list(output) + [ess] + list(np.ravel(cov)) + [classify_minimum(theta, tol).value]
        for k, (theta, output, ess, cov) in enumerate(zip(trace.theta_bar, trace.output, trace.ess, trace.theta_cov))
    )
    return write_csv(path, header, rows)


def write_snapshots(directory: Path, run: str, trace: IterationTrace) -> List[Path]:
    paths = []
    for snapshot in trace.snapshots:
        param_dim = trace.theta_bar[0].size
        header = (
            ['member', 'weight']
            + _names('theta', param_dim)
            + _names('x', snapshot.members.shape[1] - param_dim)
        )
        rows = ([j, w] + list(z) for j, (w, z) in enumerate(zip(snapshot.weights, snapshot.members)))
        paths.append(write_csv(directory / f'ensemble_{run}_{snapshot.iteration:04d}.csv', header, rows))
    return paths


def emit_contour_grid(
    model: ForwardModel,
    h: ObservationOperator,
    observed: Sequence[float],
    grid: ContourConfig,
) -> List[List[float]]:
    """
    Rows (theta_1, theta_2, ||ybar - H F(theta)||^2) over the grid, theta_2
    varying fastest.
    """
    lo1, hi1, lo2, hi2 = grid.bounds
    axis1 = np.linspace(lo1, hi1, grid.resolution)
    axis2 = np.linspace(lo2, hi2, grid.resolution)
    t1, t2 = np.meshgrid(axis1, axis2, indexing='ij')
    thetas = np.column_stack((t1.ravel(), t2.ravel()))
    misfit = np.asarray(observed, dtype=float) - h.apply(model.evaluate_many(thetas))
    cost = np.sum(misfit ** 2, axis=1)
    return [[a, b, c] for a, b, c in zip(thetas[:, 0], thetas[:, 1], cost)]


def write_contour(path: Path, rows: List[List[float]]) -> Path:
    return write_csv(path, ['theta_1', 'theta_2', 'cost'], rows)
