"""
Harness package for the ZSPO Toolkit

Experiment configuration, seeded repetitions, aggregation with confidence
intervals, manifests and replay.
"""

from .config import ExperimentConfig, load_experiment_config, apply_environment_overrides
from .runner import (
    __version__,
    SEED_SCHEME,
    CellResult,
    RunRecord,
    aggregate_raw,
    cell_rng,
    collect_results,
    declared_cell_budget,
    load_manifest,
    replay,
    run_algorithm,
    run_cell,
    run_experiment,
    write_record,
)
from .zo_bench import BENCH_COLUMNS, run_zo_bench

__all__ = [
    'BENCH_COLUMNS', 'run_zo_bench', '__version__', 'ExperimentConfig', 'load_experiment_config', 'apply_environment_overrides',
    'SEED_SCHEME', 'CellResult', 'RunRecord', 'aggregate_raw', 'cell_rng', 'collect_results',
    'declared_cell_budget', 'load_manifest', 'replay', 'run_algorithm', 'run_cell',
    'run_experiment', 'write_record',
]
