"""
CLI Argument Parser
===================

Defines every subcommand of the ZSPO Toolkit:

    train         run one algorithm on an environment with a simulated panel
    compare       run a multi-algorithm experiment file, or overlay finished runs
    distinguish   distinguishability checks, thresholds and bounds
    zo-bench      zeroth-order optimizer benchmark on built-in objectives
    replay        re-run a manifest and verify the raw CSV hash
"""

import argparse

from algorithms import ALGORITHM_TAGS
from optim.objectives import BUILTIN_OBJECTIVES
from optim.zo_optim import METHODS
from preference.links import LINK_KINDS


def _add_output_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--output', '-o', type=str,
                        help="Output directory (beats ZSPO_OUTPUT_DIR and the config file)")
    parser.add_argument('--workers', type=int,
                        help="Worker processes (beats ZSPO_WORKERS and the config file)")
    parser.add_argument('--formats', nargs='+', default=['csv', 'svg'],
                        choices=['csv', 'svg', 'xlsx'],
                        help="Curve formats to emit (default: csv svg)")


def _add_panel_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--link', choices=LINK_KINDS, help="True panel link function")
    parser.add_argument('--gamma', type=float, help="Link expertise scale gamma")
    parser.add_argument('--panel-size', type=int, dest='panel_size', help="Panelists K")


def create_parser() -> argparse.ArgumentParser:
    """Build the top-level parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog='zspo-toolkit',
        description="ZSPO Toolkit - Policy optimization from simulated preference feedback",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  Train ZSPO on the GridWorld with a Bradley-Terry panel:
    zspo-toolkit train --algo zspo --env gridworld --link logistic --gamma 1 \\
        --panel-size 100 --T 200 --N 200 --D 1 --seed 1 --reps 20

  Reproduce the desk-scale comparison:
    zspo-toolkit compare --config bradley_terry_desk.yaml --formats csv svg xlsx

  Sign threshold of the two-step example:
    zspo-toolkit distinguish --threshold --link logistic --gamma 1

  Optimizer benchmark:
    zspo-toolkit zo-bench --objective quadratic --dim 20 --T 5000 --seeds 10

  Verify a finished run:
    zspo-toolkit replay results/bradley_terry_desk/manifest.yaml
        """
    )
    parser.add_argument('--verbose', '-v', action='store_true', help="Enable debug logging")

    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')

    # ==== TRAIN ====
    train = subparsers.add_parser('train', help="Train one algorithm and write curves")
    train.add_argument('--config', type=str,
                       help="Experiment YAML (name in config/ or a path); flags override it")
    train.add_argument('--algo', choices=ALGORITHM_TAGS, default='zspo', help="Algorithm to train")
    train.add_argument('--env', type=str,
                       help="'gridworld' (default) or a path to an MDP YAML file")
    train.add_argument('--env-seed', type=int, dest='env_seed',
                       help="GridWorld generator seed (default: 0)")
    train.add_argument('--normalize', action='store_true', help="Map rewards into [0, 1]")
    _add_panel_options(train)
    train.add_argument('--T', type=int, dest='iterations', help="Iterations T")
    train.add_argument('--N', type=int, dest='pairs', help="Batch pairs (or trajectories) per iteration")
    train.add_argument('--D', type=int, dest='batch_size', help="Trajectories per batch (zspo)")
    train.add_argument('--mu', type=float, help="Perturbation distance (default: derived from d, N, D and H)")
    train.add_argument('--lr-scale', type=float, dest='lr_scale', help="Learning-rate constant c")
    train.add_argument('--assumed-link', choices=LINK_KINDS, dest='assumed_link',
                       help="Link assumed by zpg (default: logistic)")
    train.add_argument('--assumed-gamma', type=float, dest='assumed_gamma', default=1.0,
                       help="gamma of the assumed link (default: 1)")
    train.add_argument('--seed', type=int, help="Master seed")
    train.add_argument('--reps', type=int, help="Repetitions R")
    _add_output_options(train)

    # ==== COMPARE ====
    compare = subparsers.add_parser('compare', help="Run or overlay a multi-algorithm comparison")
    compare.add_argument('--config', type=str, default='bradley_terry_desk.yaml',
                         help="Experiment YAML to run (default: bradley_terry_desk.yaml)")
    compare.add_argument('--inputs', nargs='+', metavar='DIR',
                         help="Overlay finished runs (directories with aggregate.csv) instead of running")
    compare.add_argument('--reps', type=int, help="Override repetitions R")
    compare.add_argument('--T', type=int, dest='iterations', help="Override iterations T")
    compare.add_argument('--N', type=int, dest='pairs', help="Override pairs per iteration")
    compare.add_argument('--seed', type=int, help="Override master seed")
    compare.add_argument('--title', type=str, default='Exact value by iteration', help="Plot title")
    _add_output_options(compare)

    # ==== DISTINGUISH ====
    distinguish = subparsers.add_parser('distinguish', help="Distinguishability analysis")
    distinguish.add_argument('--env', choices=['two-step', 'gridworld'], default='two-step',
                             help="Two-step example, or two random softmax policies on a GridWorld")
    distinguish.add_argument('--epsilon', type=float, default=0.5, help="pi1's a2 probability (two-step)")
    distinguish.add_argument('--variant', choices=['skewed', 'balanced'], default='skewed',
                             help="Two-step example variant")
    distinguish.add_argument('--env-seed', type=int, dest='env_seed', default=0, help="GridWorld seed")
    distinguish.add_argument('--logit-scale', type=float, dest='logit_scale', default=1.0,
                             help="Std of the random GridWorld policy logits")
    distinguish.add_argument('--link', choices=LINK_KINDS, default='step', help="Panel link")
    distinguish.add_argument('--gamma', type=float, default=1.0, help="Link gamma")
    distinguish.add_argument('--D', type=int, dest='batch_size', default=1, help="Batch size D")
    distinguish.add_argument('--n-samples', type=int, dest='n_samples', default=10_000,
                             help="Monte-Carlo batch pairs (>= 100)")
    distinguish.add_argument('--seed', type=int, default=0, help="Random seed")
    distinguish.add_argument('--sweep', type=str, metavar='CSV', help="Append the report to this CSV")
    distinguish.add_argument('--threshold', action='store_true',
                             help="Print the two-step sign threshold for the link")
    distinguish.add_argument('--bound', action='store_true',
                             help="Print the eps_0 bound for the link, --horizon and --D")
    distinguish.add_argument('--horizon', type=float, default=10.0, help="H for --bound")

    # ==== ZO-BENCH ====
    bench = subparsers.add_parser('zo-bench', help="Benchmark the zeroth-order optimizers")
    bench.add_argument('--objective', choices=sorted(BUILTIN_OBJECTIVES), default='quadratic')
    bench.add_argument('--dim', type=int, default=20, help="Dimension d")
    bench.add_argument('--methods', nargs='+', choices=METHODS, default=list(METHODS))
    bench.add_argument('--seeds', type=int, default=10, help="Seeds 0..n-1")
    bench.add_argument('--T', type=int, dest='iterations', default=5000, help="Iterations")
    bench.add_argument('--mu', type=float, default=1e-3, help="Perturbation distance")
    bench.add_argument('--lr-scale', type=float, dest='lr_scale', default=1.0, help="c in alpha_t")
    bench.add_argument('--horizon-constant', type=float, dest='horizon_constant', default=1.0,
                       help="H_eff in alpha_t")
    bench.add_argument('--q', type=int, default=10, help="Perturbations per zo_sign_sgd step")
    bench.add_argument('--noise', type=float, default=0.0, help="Std of additive evaluation noise")
    bench.add_argument('--record-every', type=int, dest='record_every', default=10,
                       help="Keep every k-th iteration in the CSV")
    bench.add_argument('--output', '-o', type=str, default='results/zo_bench.csv', help="CSV path")

    # ==== REPLAY ====
    replay = subparsers.add_parser('replay', help="Re-run a manifest and compare raw CSV hashes")
    replay.add_argument('manifest', type=str, help="manifest.yaml (or its directory)")
    replay.add_argument('--output', '-o', type=str, help="Where to write the replay")
    replay.add_argument('--workers', type=int, help="Worker processes")

    return parser
