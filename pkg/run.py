#!/usr/bin/env python3
"""
ZSPO TOOLKIT CLI

PURPOSE: Command-line interface for training policies from simulated
         preference panels, comparing ZSPO against its baselines, and
         checking distinguishability of batched preferences

R EQUIVALENT: Like an R package's main script that routes to different
              functions based on command-line arguments

AVIATION ANALOGY: Like a flight management system interface -
                  different modes for different operations

USAGE EXAMPLES:
    # One algorithm on the GridWorld, Bradley-Terry panel of 100
    python3 run.py train --algo zspo --env gridworld --link logistic --gamma 1 \\
        --panel-size 100 --T 200 --N 200 --D 1 --seed 1 --reps 20

    # Every algorithm from an experiment file, plus the overlay figure
    python3 run.py compare --config link_mismatch_desk.yaml --formats csv svg xlsx

    # Overlay two finished runs
    python3 run.py compare --inputs results/bradley_terry_desk results/link_mismatch_desk -o results/overlay

    # Distinguishability of the two-step example under the step link
    python3 run.py distinguish --epsilon 0.5 --link step --D 1 --n-samples 100000

    # Where the logistic link flips the expected deviation sign
    python3 run.py distinguish --threshold --link logistic --gamma 1

    # Optimizer benchmark
    python3 run.py zo-bench --objective quadratic --dim 20 --T 5000 --seeds 10

    # Check a run reproduces bit-exactly
    python3 run.py replay results/bradley_terry_desk/manifest.yaml
"""

import logging
import sys
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from cli import (  # noqa: E402
    create_parser,
    configure_logging,
    print_header,
    print_subheader,
    print_success,
    print_error,
    print_warning,
    print_table_row,
    print_list_item,
    format_value,
    format_interval,
    format_bool,
    format_count,
)
from config import get_config_path  # noqa: E402
from algorithms import BudgetError  # noqa: E402
from formatters import ResultsExcelFormatter, emit_curves, plot_comparison  # noqa: E402
from harness import (  # noqa: E402
    ExperimentConfig,
    apply_environment_overrides,
    replay,
    run_experiment,
    run_zo_bench,
)
from harness.config import DEFAULT_SETTINGS  # noqa: E402
from mdp.gridworld import make_gridworld  # noqa: E402
from mdp.tabular import PolicyParams  # noqa: E402
from optim.zo_optim import DivergenceError, ScheduleConfig  # noqa: E402
from preference.links import LinkFunction, NonInvertibleLinkError  # noqa: E402
from reports.distinguishability import (  # noqa: E402
    append_to_sweep,
    definition_check,
    epsilon_zero_bound,
    preference_probability,
    sign_threshold,
    two_step_example,
)

logger = logging.getLogger('zspo_toolkit')

COMPARISON_FILE = 'comparison.svg'
DEFAULT_PANEL = {'kind': 'logistic', 'gamma': 1.0, 'K': 100}


# ============================================================================
# CONFIG HELPERS
# ============================================================================

def resolve_config_path(name: str) -> Path:
    """A path as given, or a file name shipped in config/."""
    path = Path(name)
    if path.exists():
        return path
    shipped = Path(get_config_path(name))
    if shipped.exists():
        return shipped
    raise FileNotFoundError(f"Experiment config not found: {name} (also looked in config/)")


def read_config_data(name: str) -> Dict[str, Any]:
    with open(resolve_config_path(name), 'r') as f:
        return yaml.safe_load(f) or {}


def _set_if_given(target: Dict[str, Any], key: str, value) -> None:
    if value is not None:
        target[key] = value


def apply_run_flags(data: Dict[str, Any], args) -> Dict[str, Any]:
    """
    Layer command-line flags over file + environment values.

    Flags shared by train and compare: --reps, --seed, --T, --N,
    --output, --workers.
    """
    data = apply_environment_overrides(data)
    data['defaults'] = {**DEFAULT_SETTINGS, **(data.get('defaults') or {})}
    _set_if_given(data['defaults'], 'iterations', getattr(args, 'iterations', None))
    _set_if_given(data['defaults'], 'pairs', getattr(args, 'pairs', None))
    _set_if_given(data, 'repetitions', getattr(args, 'reps', None))
    _set_if_given(data, 'master_seed', getattr(args, 'seed', None))
    _set_if_given(data, 'output_dir', getattr(args, 'output', None))
    _set_if_given(data, 'workers', getattr(args, 'workers', None))
    return data


def build_train_config(args) -> ExperimentConfig:
    """ExperimentConfig for `train`: one algorithm, optionally seeded from a file."""
    data = read_config_data(args.config) if args.config else {}
    data.setdefault('name', f"train_{args.algo}")

    algorithms = data.get('algorithms') or {}
    if isinstance(algorithms, list):
        algorithms = {tag: {} for tag in algorithms}
    settings = dict(algorithms.get(args.algo) or {})
    if args.algo not in ('zspo', 'zpg'):
        for flag, value in (('--mu', args.mu), ('--lr-scale', args.lr_scale)):
            if value is not None:
                raise ValueError(f"{flag} applies to zspo and zpg, not {args.algo}")
    _set_if_given(settings, 'perturbation', args.mu)
    _set_if_given(settings, 'learning_rate_scale', args.lr_scale)
    if args.assumed_link is not None:
        if args.algo != 'zpg':
            raise ValueError(f"--assumed-link applies to zpg only, not {args.algo}")
        settings['assumed_link'] = {'kind': args.assumed_link, 'gamma': args.assumed_gamma}
    data['algorithms'] = {args.algo: settings}

    if args.env is not None:
        if args.env == 'gridworld':
            data['environment'] = {'kind': 'gridworld', 'seed': args.env_seed if args.env_seed is not None else 0}
        else:
            data['environment'] = {'kind': 'mdp_file', 'path': args.env}
    elif 'environment' not in data:
        data['environment'] = {'kind': 'gridworld', 'seed': args.env_seed if args.env_seed is not None else 0}
    if args.normalize:
        data['environment']['normalize'] = True

    panel = {**DEFAULT_PANEL, **(data.get('panel') or {})}
    _set_if_given(panel, 'kind', args.link)
    _set_if_given(panel, 'gamma', args.gamma)
    _set_if_given(panel, 'K', args.panel_size)
    data['panel'] = panel

    data = apply_run_flags(data, args)
    _set_if_given(data['defaults'], 'batch_size', args.batch_size)
    data.setdefault('output_dir', f"results/{data['name']}")
    return ExperimentConfig.from_dict(data)


# ============================================================================
# OUTPUT HELPERS
# ============================================================================

def print_run_summary(record) -> None:
    print_subheader("Final mean exact value (95% CI)")
    summary = record.final_summary()
    for _, row in summary.iterrows():
        print_table_row(f"{row['algo']} (t={int(row['t'])})",
                        format_interval(row['exact_value'], row['ci_low'], row['ci_high']))
    reps = record.outputs.groupby('algo', sort=False).size()
    print_subheader("Cells")
    for algo, count in reps.items():
        print_list_item(f"{algo}: {format_count(int(count), 'repetition')}")
    if not record.warnings.empty:
        print_warning(f"{format_count(len(record.warnings), 'cell')} excluded from aggregation "
                      f"(see warnings.csv)")


# ============================================================================
# COMMAND HANDLERS
# ============================================================================

def handle_train(args) -> int:
    config = build_train_config(args)
    print_header(f"Train {args.algo}")
    print_table_row("Environment", config.environment)
    print_table_row("Panel", config.panel.to_dict())
    print_table_row("Repetitions", config.repetitions)

    record = run_experiment(config, output_dir=config.output_dir, workers=config.workers)
    if record.is_empty():
        print_error("every repetition diverged; nothing to aggregate")
        return 1
    written = emit_curves(record, config.output_dir, formats=args.formats)
    print_run_summary(record)
    print_success(f"Wrote {sum(len(p) for p in written.values())} curve file(s) and "
                  f"the manifest to {config.output_dir}")
    return 0


def _load_aggregate(directory: str) -> pd.DataFrame:
    path = Path(directory) / 'aggregate.csv'
    if not path.exists():
        raise FileNotFoundError(f"No aggregate.csv in {directory}")
    return pd.read_csv(path)


def overlay_runs(directories: List[str]) -> pd.DataFrame:
    """Concatenate finished aggregates; repeated tags get their run's directory name."""
    frames = [(d, _load_aggregate(d)) for d in directories]
    counts = pd.Series([a for _, f in frames for a in dict.fromkeys(f['algo'])]).value_counts()
    combined = []
    for directory, frame in frames:
        frame = frame.copy()
        repeated = frame['algo'].map(counts) > 1
        frame.loc[repeated, 'algo'] = frame.loc[repeated, 'algo'] + f" ({Path(directory).name})"
        combined.append(frame)
    return pd.concat(combined, ignore_index=True)


def handle_compare(args) -> int:
    if args.inputs:
        aggregate = overlay_runs(args.inputs)
        output_dir = Path(args.output or 'results/comparison')
        output_dir.mkdir(parents=True, exist_ok=True)
        aggregate.to_csv(output_dir / 'aggregate.csv', index=False)
        path = plot_comparison(aggregate, output_dir / COMPARISON_FILE, title=args.title)
        if 'xlsx' in args.formats:
            ResultsExcelFormatter().export_table(aggregate, output_dir / 'comparison.xlsx', 'Aggregate')
        print_success(f"Overlaid {format_count(len(args.inputs), 'run')} into {path}")
        return 0

    data = apply_run_flags(read_config_data(args.config), args)
    config = ExperimentConfig.from_dict(data)
    print_header(f"Compare: {config.name}")
    print_table_row("Algorithms", ", ".join(config.algorithms))
    print_table_row("Panel", config.panel.to_dict())
    print_table_row("Repetitions", config.repetitions)

    record = run_experiment(config, output_dir=config.output_dir, workers=config.workers)
    if record.is_empty():
        print_error("every cell diverged; nothing to aggregate")
        return 1
    emit_curves(record, config.output_dir, formats=args.formats)
    path = plot_comparison(record.aggregate, Path(config.output_dir) / COMPARISON_FILE, title=args.title)
    print_run_summary(record)
    print_success(f"Comparison written to {path}")
    return 0


def handle_distinguish(args) -> int:
    link = LinkFunction(args.link, args.gamma)
    print_header("Distinguishability")

    if args.bound:
        bound = epsilon_zero_bound(link, args.horizon, args.batch_size)
        print_table_row("Link", f"{link.kind} (gamma={link.gamma})")
        print_table_row("H, D", f"{args.horizon:g}, {args.batch_size}")
        print_table_row("eps_0 bound", format_value(bound))
        return 0

    if args.threshold:
        threshold = sign_threshold(link, args.variant)
        print_table_row("Link", f"{link.kind} (gamma={link.gamma})")
        print_table_row("Variant", args.variant)
        print_table_row("Sign threshold eps", format_value(threshold, 6))
        return 0

    rng = np.random.default_rng(args.seed)
    if args.env == 'two-step':
        mdp, pi0, pi1 = two_step_example(args.epsilon, args.variant)
    else:
        mdp = make_gridworld(args.env_seed)
        pi0 = PolicyParams.for_mdp(mdp, rng.normal(0.0, args.logit_scale, mdp.dimension))
        pi1 = PolicyParams.for_mdp(mdp, rng.normal(0.0, args.logit_scale, mdp.dimension))

    report = definition_check(mdp, pi0, pi1, link, args.batch_size, args.n_samples, rng)
    print_table_row("Environment", mdp.name)
    print_table_row("Link", f"{link.kind} (gamma={link.gamma})")
    print_table_row("Batch size D", report.batch_size)
    print_table_row("Value gap", format_value(report.value_gap))
    print_table_row("E[deviation]", f"{format_value(report.expected_deviation)} "
                                    f"(se {format_value(report.std_error, 5)})")
    print_table_row("Required (rhs)", format_value(report.rhs))
    print_table_row("Holds", format_bool(report.holds))
    print_table_row("Sign consistent", format_bool(report.sign_consistent))
    if args.env == 'two-step':
        print_table_row("P(tau1 > tau0)", format_value(preference_probability(link, args.epsilon, args.variant)))

    if args.sweep:
        print_success(f"Appended to {append_to_sweep(report, args.sweep)}")
    return 0


def handle_zo_bench(args) -> int:
    schedule = ScheduleConfig(learning_rate_scale=args.lr_scale, perturbation=args.mu,
                              horizon_constant=args.horizon_constant, iterations=args.iterations)
    print_header(f"zo-bench: {args.objective} (d={args.dim})")
    frame = run_zo_bench(args.objective, args.dim, args.methods, range(args.seeds), schedule,
                         q=args.q, record_every=args.record_every, noise=args.noise)

    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, index=False)

    final = frame[frame['t'] == frame['t'].max()].groupby('method', sort=False)
    print_subheader(f"Mean over {format_count(args.seeds, 'seed')} at t={args.iterations}")
    for method, rows in final:
        print_table_row(method, f"|grad| {format_value(rows['grad_norm'].mean())}  "
                                f"f {format_value(rows['f_value'].mean())}")
    print_success(f"Wrote {output}")
    return 0


def handle_replay(args) -> int:
    print_header("Replay")
    record, matches = replay(args.manifest, output_dir=args.output, workers=args.workers)
    print_table_row("Output", record.output_dir)
    print_table_row("raw.csv sha256", record.manifest.get('raw_sha256', ''))
    if not matches:
        print_error("replayed raw.csv differs from the manifest")
        return 1
    print_success("Replay reproduced raw.csv byte-identically")
    return 0


HANDLERS = {
    'train': handle_train,
    'compare': handle_compare,
    'distinguish': handle_distinguish,
    'zo-bench': handle_zo_bench,
    'replay': handle_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for CLI; returns the exit status."""
    parser = create_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    if args.command is None:
        parser.print_help()
        return 0

    try:
        return HANDLERS[args.command](args)
    except (NonInvertibleLinkError, DivergenceError, BudgetError) as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        print_error(f"{type(e).__name__}: {e}")
    except (ValueError, FileNotFoundError) as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        print_error(str(e))
    return 1


if __name__ == "__main__":
    sys.exit(main())
