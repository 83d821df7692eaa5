"""
Unit Tests for the Command-Line Interface

PURPOSE: Test argument parsing and every subcommand end to end on tiny
         settings, including exit codes for the error paths

RUN TESTS:
    python3 -m pytest tests/test_cli.py -v
"""

import io
import os
import sys
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pandas as pd

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cli import create_parser, format_count, format_interval, format_value
from run import main, overlay_runs


def run_cli(*argv: str):
    """Run main() and capture (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestParser(unittest.TestCase):
    """Subcommand definitions and defaults."""

    def setUp(self):
        self.parser = create_parser()

    def test_train_defaults(self):
        args = self.parser.parse_args(['train'])
        self.assertEqual(args.algo, 'zspo')
        self.assertIsNone(args.env)
        self.assertIsNone(args.iterations)
        self.assertEqual(args.formats, ['csv', 'svg'])

    def test_train_flags(self):
        args = self.parser.parse_args(['train', '--algo', 'zpg', '--T', '50', '--N', '20', '--D', '4',
                                       '--link', 'linear', '--gamma', '0.02', '--panel-size', '9'])
        self.assertEqual((args.iterations, args.pairs, args.batch_size), (50, 20, 4))
        self.assertEqual((args.link, args.gamma, args.panel_size), ('linear', 0.02, 9))

    def test_distinguish_defaults(self):
        args = self.parser.parse_args(['distinguish'])
        self.assertEqual(args.env, 'two-step')
        self.assertEqual(args.link, 'step')
        self.assertEqual(args.batch_size, 1)
        self.assertEqual(args.n_samples, 10_000)

    def test_rejects_unknown_algorithm(self):
        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                self.parser.parse_args(['train', '--algo', 'reinforce'])


class TestFormatting(unittest.TestCase):

    def test_value_and_interval(self):
        self.assertEqual(format_value(2.5), '2.5000')
        self.assertEqual(format_value(float('nan')), '—')
        self.assertEqual(format_interval(2.5, 1.2348, 3.7652), '2.5000  [1.2348, 3.7652]')

    def test_count(self):
        self.assertEqual(format_count(1, 'repetition'), '1 repetition')
        self.assertEqual(format_count(20, 'repetition'), '20 repetitions')


class TestDistinguishCommand(unittest.TestCase):

    def test_step_threshold(self):
        code, out, _ = run_cli('distinguish', '--threshold', '--link', 'step')
        self.assertEqual(code, 0)
        self.assertIn('0.375000', out)

    def test_logistic_bound(self):
        code, out, _ = run_cli('distinguish', '--bound', '--link', 'logistic', '--horizon', '10', '--D', '100')
        self.assertEqual(code, 0)
        self.assertIn('8.310', out)

    def test_step_bound_is_an_error(self):
        code, _, err = run_cli('distinguish', '--bound', '--link', 'step')
        self.assertEqual(code, 1)
        self.assertIn('Error:', err)

    def test_definition_check_and_sweep(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            sweep = Path(temp_dir) / 'sweep.csv'
            code, out, _ = run_cli('distinguish', '--epsilon', '0.5', '--link', 'step',
                                   '--n-samples', '2000', '--sweep', str(sweep))
            self.assertEqual(code, 0)
            self.assertIn('Sign consistent', out)
            self.assertEqual(len(pd.read_csv(sweep)), 1)

    def test_too_few_samples(self):
        code, _, _ = run_cli('distinguish', '--n-samples', '10')
        self.assertEqual(code, 1)


class TestTrainAndCompare(unittest.TestCase):
    """train, compare and replay on the smoke experiment."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_train_writes_curves(self):
        target = self.out / 'train'
        code, out, _ = run_cli('train', '--config', 'smoke.yaml', '--algo', 'dpo', '--output', str(target))
        self.assertEqual(code, 0)
        for name in ('curve_dpo.csv', 'curve_dpo.svg', 'raw.csv', 'manifest.yaml'):
            self.assertTrue((target / name).exists(), name)
        self.assertIn('Final mean exact value', out)

    def test_train_flags_override_file(self):
        target = self.out / 'train'
        code, _, _ = run_cli('train', '--config', 'smoke.yaml', '--algo', 'zspo', '--T', '2', '--reps', '2',
                             '--output', str(target), '--formats', 'csv')
        self.assertEqual(code, 0)
        raw = pd.read_csv(target / 'raw.csv')
        self.assertEqual(sorted(raw['t'].unique().tolist()), [1, 2])
        self.assertEqual(sorted(raw['rep'].unique().tolist()), [0, 1])

    def test_assumed_link_rejected_for_zspo(self):
        code, _, err = run_cli('train', '--config', 'smoke.yaml', '--assumed-link', 'probit',
                               '--output', str(self.out / 'x'))
        self.assertEqual(code, 1)
        self.assertIn('assumed-link', err)

    def test_schedule_flags_rejected_for_dpo(self):
        for flag, value in (('--mu', '0.1'), ('--lr-scale', '2')):
            code, _, err = run_cli('train', '--config', 'smoke.yaml', '--algo', 'dpo', flag, value,
                                   '--output', str(self.out / 'x'))
            self.assertEqual(code, 1)
            self.assertIn(f"{flag} applies to zspo and zpg, not dpo", err)

    def test_assumed_link_rejected_for_rm_ppo(self):
        code, _, err = run_cli('train', '--config', 'smoke.yaml', '--algo', 'rm-ppo', '--assumed-link', 'probit',
                               '--output', str(self.out / 'x'))
        self.assertEqual(code, 1)
        self.assertIn('zpg only', err)

    def test_compare_then_overlay(self):
        first, second = self.out / 'first', self.out / 'second'
        self.assertEqual(run_cli('compare', '--config', 'smoke.yaml', '--output', str(first),
                                 '--formats', 'csv')[0], 0)
        self.assertTrue((first / 'comparison.svg').exists())
        self.assertEqual(run_cli('train', '--config', 'smoke.yaml', '--algo', 'dpo',
                                 '--output', str(second), '--formats', 'csv')[0], 0)

        combined = overlay_runs([str(first), str(second)])
        self.assertIn('dpo (first)', set(combined['algo']))
        self.assertIn('dpo (second)', set(combined['algo']))
        self.assertIn('zspo', set(combined['algo']))

        overlay = self.out / 'overlay'
        code, _, _ = run_cli('compare', '--inputs', str(first), str(second), '--output', str(overlay))
        self.assertEqual(code, 0)
        self.assertTrue((overlay / 'comparison.svg').exists())

    def test_replay_round_trip(self):
        target = self.out / 'train'
        run_cli('train', '--config', 'smoke.yaml', '--algo', 'zpg', '--output', str(target), '--formats', 'csv')
        code, out, _ = run_cli('replay', str(target / 'manifest.yaml'), '--output', str(self.out / 'replayed'))
        self.assertEqual(code, 0)
        self.assertIn('byte-identically', out)

    def test_missing_config(self):
        code, _, err = run_cli('compare', '--config', 'no_such_experiment.yaml')
        self.assertEqual(code, 1)
        self.assertIn('not found', err)


class TestOtherCommands(unittest.TestCase):

    def test_zo_bench(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            output = Path(temp_dir) / 'bench.csv'
            code, out, _ = run_cli('zo-bench', '--dim', '5', '--T', '30', '--seeds', '2',
                                   '--record-every', '10', '--output', str(output))
            self.assertEqual(code, 0)
            table = pd.read_csv(output)
            self.assertEqual(set(table['method']), {'zo_sgd', 'zo_sign_sgd', 'zspo_sign'})
            self.assertIn('zspo_sign', out)

    def test_replay_missing_manifest(self):
        code, _, _ = run_cli('replay', '/nonexistent/manifest.yaml')
        self.assertEqual(code, 1)

    def test_no_command_prints_help(self):
        code, out, _ = run_cli()
        self.assertEqual(code, 0)
        self.assertIn('zspo-toolkit', out)


if __name__ == '__main__':
    unittest.main()
