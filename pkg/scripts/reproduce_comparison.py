#!/usr/bin/env python3
"""
Reproduce both desk-scale comparisons and the distinguishability table.

Runs bradley_terry_desk (Bradley-Terry truth) and link_mismatch_desk (linear truth,
logistic-assuming baselines), overlays the two, then sweeps the two-step
example over batch sizes for the step and logistic links.

    python3 scripts/reproduce_comparison.py --workers 8
    python3 scripts/reproduce_comparison.py --config full_scale.yaml   # overnight
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from run import main as cli_main  # noqa: E402

SWEEP_EPSILONS = (0.1, 0.3, 0.5, 0.7)
SWEEP_BATCHES = (1, 5, 25)


def run_step(argv):
    print(f"\n$ zspo-toolkit {' '.join(argv)}")
    status = cli_main(argv)
    if status != 0:
        raise SystemExit(status)


def main():
    parser = argparse.ArgumentParser(description="Reproduce the comparison figures")
    parser.add_argument('--workers', type=str, default='1')
    parser.add_argument('--config', nargs='+', default=['bradley_terry_desk.yaml', 'link_mismatch_desk.yaml'])
    parser.add_argument('--results', default='results')
    args = parser.parse_args()

    outputs = []
    for config in args.config:
        output = os.path.join(args.results, os.path.splitext(os.path.basename(config))[0])
        run_step(['compare', '--config', config, '--workers', args.workers,
                  '--output', output, '--formats', 'csv', 'svg', 'xlsx'])
        outputs.append(output)

    if len(outputs) > 1:
        run_step(['compare', '--inputs', *outputs, '--output', os.path.join(args.results, 'overlay')])

    sweep = os.path.join(args.results, 'distinguishability.csv')
    for link in ('step', 'logistic'):
        run_step(['distinguish', '--threshold', '--link', link])
        for epsilon in SWEEP_EPSILONS:
            for batch_size in SWEEP_BATCHES:
                run_step(['distinguish', '--epsilon', str(epsilon), '--link', link,
                          '--D', str(batch_size), '--n-samples', '20000', '--sweep', sweep])


if __name__ == '__main__':
    main()
