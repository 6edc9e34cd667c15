import contextlib
import csv
import io
import json
import math
import os
import tempfile
import unittest
from pathlib import Path

from parameterized import parameterized

from constrained_inversion.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, run_from_config
from constrained_inversion.config import RunConfig
from constrained_inversion.constraints import CONSTRAINTS, ConstraintTerm, register_constraint

EXACT = {
    'method': 'exact',
    'constraints': [{'name': 'synthetic-log-equality', 'variance': 0.5}],
    'prior': {'mean': [0, 0], 'cov': [[3, 0], [0, 3]]},
    'data': {'mean': [-1], 'cov': [[0.01]]},
    'ensemble_size': 200,
    'seed': 2020,
}

ENKF = {
    'method': 'enkf',
    'constraints': [{'name': 'synthetic-log-equality', 'variance': 2.0}],
    'prior': {'mean': [0, 0], 'cov': [[1, 0], [0, 1]]},
    'data': {'mean': [-1], 'cov': [[0.01]]},
    'ensemble_size': 50,
    'max_iterations': 3,
    'initial_guesses': [[0, 0], [2, 2]],
    'seed': 2021,
}


def _read_csv(path):
    with open(path, newline='', encoding='utf8') as f:
        return list(csv.reader(f))


class TestCli(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def _write(self, name, value) -> str:
        path = self.tmp / name
        path.write_text(value if isinstance(value, str) else json.dumps(value), encoding='utf8')
        return str(path)

    def _main(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main(['-q'] + list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_malformed_json(self) -> None:
        out = self.tmp / 'out'
        code, _, stderr = self._main('--config', self._write('bad.json', '{"method": "exact",'), '--out', str(out))
        self.assertEqual(EXIT_CONFIG, code)
        self.assertIn('line 1', stderr)
        self.assertFalse(out.exists())

    def test_invalid_config_lists_fields(self) -> None:
        value = dict(EXACT, method='mcmc', seed=-3)
        out = self.tmp / 'out'
        code, _, stderr = self._main('--config', self._write('bad.json', value), '--out', str(out))
        self.assertEqual(EXIT_CONFIG, code)
        self.assertIn('root.method', stderr)
        self.assertIn('root.seed', stderr)
        self.assertFalse(out.exists())

    @parameterized.expand([
        (['--preset', 'table9'],),
        (['--config', '/nonexistent/run.json'],),
        (['--preset', 'table1', '--seed', '-1'],),
    ])
    def test_config_errors(self, argv) -> None:
        self.assertEqual(EXIT_CONFIG, self._main(*argv)[0])

    def test_list_presets(self) -> None:
        code, stdout, _ = self._main('--list-presets')
        self.assertEqual(EXIT_OK, code)
        self.assertIn('fig3-sweep', stdout.split())

    def test_numerical_failure(self) -> None:
        register_constraint('never-defined', lambda v: ConstraintTerm.equality(lambda x: float('nan'), v, 'never-defined'))
        try:
            value = dict(EXACT, constraints=[{'name': 'never-defined', 'variance': 1.0}])
            code, _, stderr = self._main('--config', self._write('run.json', value), '--out', str(self.tmp / 'out'))
        finally:
            CONSTRAINTS.pop('never-defined')
        self.assertEqual(EXIT_NUMERICAL, code)
        self.assertIn('AllWeightsZero', stderr)

    def test_exact_artifacts(self) -> None:
        out = self.tmp / 'exact'
        code, stdout, _ = self._main('--config', self._write('run.json', EXACT), '--out', str(out))
        self.assertEqual(EXIT_OK, code)
        self.assertEqual(str(out / 'result.json'), stdout.strip())
        self.assertSetEqual(
            {'config.json', 'result.json', 'timing.json', 'samples.csv'},
            set(os.listdir(out)),
        )
        result = json.loads((out / 'result.json').read_text(encoding='utf8'))
        self.assertEqual('exact', result['method'])
        self.assertListEqual(['expectation', 'map'], [run['label'] for run in result['runs']])
        self.assertEqual(2020, result['config']['seed'])
        self.assertNotIn('wall_clock_seconds', json.dumps(result))
        self.assertIn('wall_clock_seconds', json.loads((out / 'timing.json').read_text(encoding='utf8')))

        rows = _read_csv(out / 'samples.csv')
        self.assertListEqual(['theta_1', 'theta_2', 'x_1', 'x_2', 'log_data', 'log_constraint', 'weight'], rows[0])
        self.assertEqual(201, len(rows))
        self.assertAlmostEqual(1.0, math.fsum(float(r[-1]) for r in rows[1:]), delta=1e-12)

    def test_enkf_artifacts(self) -> None:
        out = self.tmp / 'enkf'
        code, _, _ = self._main('--config', self._write('run.json', ENKF), '--out', str(out), '--snapshot-ensembles')
        self.assertEqual(EXIT_OK, code)
        files = set(os.listdir(out))
        self.assertTrue({'trace_run1.csv', 'trace_run2.csv', 'ensemble_run1_0000.csv', 'ensemble_run2_0002.csv'} <= files)

        trace = _read_csv(out / 'trace_run1.csv')
        self.assertListEqual(
            ['iteration', 'theta_bar_1', 'theta_bar_2', 'output_1', 'ess',
             'cov_1_1', 'cov_1_2', 'cov_2_1', 'cov_2_2', 'group'],
            trace[0],
        )
        self.assertEqual(4, len(trace))
        self.assertListEqual(['0', '1', '2'], [row[0] for row in trace[1:]])

        snapshot = _read_csv(out / 'ensemble_run1_0000.csv')
        self.assertListEqual(['member', 'weight', 'theta_1', 'theta_2', 'x_1', 'x_2'], snapshot[0])
        self.assertEqual(51, len(snapshot))

        result = json.loads((out / 'result.json').read_text(encoding='utf8'))
        self.assertEqual(2, len(result['runs']))
        self.assertListEqual([2.0, 2.0], result['runs'][1]['initial_guess'])
        self.assertEqual(3, result['runs'][0]['iterations'])
        self.assertTrue(result['config']['snapshot_ensembles'])

    def test_contour(self) -> None:
        out = self.tmp / 'contour'
        value = dict(EXACT, contour={'bounds': [-1, 1, -1, 1], 'resolution': 3})
        self.assertEqual(EXIT_OK, self._main('--config', self._write('run.json', value), '--out', str(out))[0])
        rows = _read_csv(out / 'contour.csv')
        self.assertListEqual(['theta_1', 'theta_2', 'cost'], rows[0])
        self.assertEqual(9, len(rows) - 1)
        grid = {(float(a), float(b)): float(c) for a, b, c in rows[1:]}
        self.assertLessEqual(grid[(1.0, 1.0)], 1e-4)
        self.assertAlmostEqual(0.438, grid[(0.0, 0.0)], places=3)
        self.assertListEqual(['-1', '-1'], rows[1][:2])
        self.assertListEqual(['-1', '0'], rows[2][:2])

    def test_same_seed_same_files(self) -> None:
        config = RunConfig.from_dict(ENKF)
        a = run_from_config(config.replace(output_dir=str(self.tmp / 'a')))
        b = run_from_config(config.replace(output_dir=str(self.tmp / 'b')))
        self.assertListEqual([r.theta for r in a.runs], [r.theta for r in b.runs])
        for name in ('trace_run1.csv', 'trace_run2.csv'):
            self.assertEqual((self.tmp / 'a' / name).read_bytes(), (self.tmp / 'b' / name).read_bytes())
        result_a = json.loads((self.tmp / 'a' / 'result.json').read_text(encoding='utf8'))
        result_b = json.loads((self.tmp / 'b' / 'result.json').read_text(encoding='utf8'))
        self.assertEqual(result_a['runs'], result_b['runs'])

    def test_echoed_config_reproduces_result(self) -> None:
        out = self.tmp / 'closure'
        run_from_config(RunConfig.from_dict(dict(EXACT, output_dir=str(out))))
        first = (out / 'result.json').read_bytes()
        run_from_config(out / 'config.json')
        self.assertEqual(first, (out / 'result.json').read_bytes())

    def test_seed_override(self) -> None:
        out = self.tmp / 'seeded'
        self._main('--config', self._write('run.json', EXACT), '--out', str(out), '--seed', '5')
        result = json.loads((out / 'result.json').read_text(encoding='utf8'))
        self.assertEqual(5, result['config']['seed'])
        self.assertEqual(str(out), result['config']['output_dir'])

    def test_perturbed_observations_flag(self) -> None:
        out = self.tmp / 'perturbed'
        self._main('--config', self._write('run.json', ENKF), '--out', str(out), '--perturbed-obs')
        config = json.loads((out / 'config.json').read_text(encoding='utf8'))
        self.assertTrue(config['perturbed_observations'])
