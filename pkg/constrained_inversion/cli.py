"""
Command line front end.

    constrained-inversion --preset table3 --out results/table3
    constrained-inversion --config run.json --seed 11 --snapshot-ensembles

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""
import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from . import enkf, exact
from .artifacts import (
    emit_contour_grid,
    write_contour,
    write_json,
    write_samples,
    write_snapshots,
    write_trace,
)
from .config import ENKF, RunConfig, dump_config, load_config
from .error_formatter import format_config_error
from .exceptions import ConfigError, NumericalError, UnknownPreset
from .model import SYNTHETIC_TRUTH, classify_minimum
from .presets import preset, preset_names

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2
GROUP_TOLERANCE = 0.1


@dataclass(frozen=True)
class RunEstimate:
    label: str
    theta: List[float]
    state: List[float]
    output: List[float]
    group: str
    iterations: int
    converged: bool
    ess_min: float
    ess_mean: float
    ess_final: float
    undefined_members: int = 0
    floored_disjunctions: int = 0
    initial_guess: Optional[List[float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'label': self.label,
            'initial_guess': self.initial_guess,
            'theta': self.theta,
            'state': self.state,
            'output': self.output,
            'group': self.group,
            'distance_to_truth': float(np.linalg.norm(np.subtract(self.theta, SYNTHETIC_TRUTH))),
            'iterations': self.iterations,
            'converged': self.converged,
            'ess': {'min': self.ess_min, 'mean': self.ess_mean, 'final': self.ess_final},
            'undefined_members': self.undefined_members,
            'floored_disjunctions': self.floored_disjunctions,
        }


@dataclass
class RunResult:
    config: RunConfig
    runs: List[RunEstimate]
    wall_clock_seconds: float = 0.0
    artifacts: List[Path] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """
        Everything but the wall clock, so equal seeds give equal documents.
        """
        return {
            'method': self.config.method,
            'label': self.config.label,
            'config': self.config.to_dict(),
            'runs': [run.to_dict() for run in self.runs],
        }


def _floats(values) -> List[float]:
    return [float(v) for v in np.ravel(values)]


def _estimate(label, theta, model, h, **kwargs) -> RunEstimate:
    state = model.evaluate(theta)
    return RunEstimate(
        label=label,
        theta=_floats(theta),
        state=_floats(state),
        output=_floats(h.apply(state)),
        group=classify_minimum(theta, GROUP_TOLERANCE).value,
        **kwargs,
    )


def _run_exact(config: RunConfig, out: Path) -> List[RunEstimate]:
    model, h = config.model_and_operator()
    result = exact.run(
        config.prior_spec(), config.data_spec(), model, h,
        config.constraint_set(), config.ensemble_size, config.seed, config.workers,
    )
    write_samples(out / 'samples.csv', result.samples)
    ess = result.samples.ess
    common = dict(
        iterations=1, converged=True, ess_min=ess, ess_mean=ess, ess_final=ess,
        undefined_members=result.samples.undefined,
        floored_disjunctions=len(result.samples.diagnostics),
    )
    return [
        _estimate('expectation', result.estimate.theta_expectation, model, h, **common),
        _estimate('map', result.estimate.theta_map, model, h, **common),
    ]


def _run_enkf(config: RunConfig, out: Path) -> List[RunEstimate]:
    model, h = config.model_and_operator()
    runs = []
    for ix, guess in enumerate(config.starting_points()):
        name = f'run{ix + 1}'
        result = enkf.run(config.enkf_config(guess), model, h)
        write_trace(out / f'trace_{name}.csv', result.trace, GROUP_TOLERANCE)
        if config.snapshot_ensembles:
            write_snapshots(out, name, result.trace)
        runs.append(_estimate(
            name, result.theta, model, h,
            iterations=result.iterations,
            converged=result.converged,
            ess_min=float(np.min(result.trace.ess)),
            ess_mean=float(np.mean(result.trace.ess)),
            ess_final=float(result.trace.ess[-1]),
            undefined_members=int(np.sum(result.trace.undefined)),
            floored_disjunctions=int(np.sum(result.trace.floored)),
            initial_guess=list(guess),
        ))
    return runs


def run_from_config(source: Union[str, Path, RunConfig]) -> RunResult:
    """
    Run the configured method and write result.json, timing.json, config.json
    and the trace/sample/contour CSVs into ``config.output_dir``.

    :raises ConfigError:
    :raises NumericalError:
    """
    config = source if isinstance(source, RunConfig) else load_config(source)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    runs = _run_enkf(config, out) if config.method == ENKF else _run_exact(config, out)
    if config.contour is not None:
        model, h = config.model_and_operator()
        write_contour(out / 'contour.csv', emit_contour_grid(model, h, config.data.mean, config.contour))
    result = RunResult(config, runs, time.perf_counter() - started)

    (out / 'config.json').write_text(dump_config(config), encoding='utf8')
    write_json(out / 'result.json', result.to_dict())
    write_json(out / 'timing.json', {'wall_clock_seconds': result.wall_clock_seconds})
    result.artifacts = sorted(out.iterdir())
    for run in runs:
        logger.info('%s: theta %s, output %s, group %s', run.label, run.theta, run.output, run.group)
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='constrained-inversion',
        description='Constrained Bayesian inversion: exact sampling or iterative EnKF.',
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', metavar='PATH', help='run configuration JSON')
    source.add_argument('--preset', metavar='NAME', help='one of: ' + ', '.join(preset_names()))
    source.add_argument('--list-presets', action='store_true', help='print preset names and exit')
    parser.add_argument('--seed', type=int, help='override the configured seed')
    parser.add_argument('--out', metavar='DIR', help='override the output directory')
    parser.add_argument('--snapshot-ensembles', action='store_true', help='write per-iteration ensemble CSVs')
    parser.add_argument('--perturbed-obs', action='store_true', help='perturb the observations per member')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    changes = {}
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.out is not None:
        changes['output_dir'] = args.out
    if args.snapshot_ensembles:
        changes['snapshot_ensembles'] = True
    if args.perturbed_obs:
        changes['perturbed_observations'] = True
    return changes


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s', stream=sys.stderr)

    if args.list_presets:
        print('\n'.join(preset_names()))
        return EXIT_OK

    try:
        config = load_config(args.config) if args.config else preset(args.preset)
        changes = _overrides(args)
        if changes:
            config = config.replace(**changes)
    except ConfigError as e:
        for line in format_config_error(e):
            print(f'config error: {line}', file=sys.stderr)
        return EXIT_CONFIG
    except (UnknownPreset, OSError) as e:
        print(f'config error: {e}', file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run_from_config(config)
    except NumericalError as e:
        print(f'{type(e).__name__}: {e}', file=sys.stderr)
        return EXIT_NUMERICAL

    print(Path(config.output_dir) / 'result.json')
    logger.info('finished in %.2f s', result.wall_clock_seconds)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
