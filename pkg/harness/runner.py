"""
Experiment Runner - Seeded repetitions, aggregation, manifests and replay

PURPOSE: Run every (algorithm, repetition) cell of an experiment, collect
         exact-value curves, aggregate them with 95% confidence intervals,
         and write everything needed to reproduce the run.

SEEDING:
    Each cell draws from its own stream
        SeedSequence(master_seed, spawn_key=(crc32(tag), rep))
    so a cell's numbers depend only on the master seed, its tag and its
    repetition index. Changing one algorithm leaves the others untouched,
    and the worker count never changes the output.

OUTPUT FILES (in output_dir):
    raw.csv          algo, rep, t, exact_value (t = updates completed, 1..T on the cadence)
    aggregate.csv    algo, rep ('mean'), t, exact_value, ci_low, ci_high, ci_half_width, n_reps
    outputs.csv      one row per cell: V(theta_1), theta_R pick (1-based iterate), final value,
                     sample counts, status
    warnings.csv     cells excluded from aggregation (only when there are any)
    manifest.yaml    resolved config, version, seed scheme, wall clock, raw.csv hash

AVIATION ANALOGY: Each cell is a sortie with its own flight plan number;
                  the manifest is the dispatch release that lets anyone fly
                  the same sortie again
"""

import hashlib
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from algorithms import (
    BaselineConfig,
    BudgetError,
    ParameterTrace,
    ZspoConfig,
    dpo_run,
    iteration_budget,
    rm_ppo_run,
    zpg_run,
    zspo_run,
)
from algorithms.zpg import zpg_schedule
from harness.config import ExperimentConfig
from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value
from optim.zo_optim import DivergenceError

logger = logging.getLogger(__name__)

__version__ = '0.1.0'

SEED_SCHEME = 'SeedSequence(master_seed, spawn_key=(crc32(tag), rep)); sequential draws within a cell'
CI_Z = 1.96

RAW_COLUMNS = ['algo', 'rep', 't', 'exact_value']
AGGREGATE_COLUMNS = ['algo', 'rep', 't', 'exact_value', 'ci_low', 'ci_high', 'ci_half_width', 'n_reps']
OUTPUT_COLUMNS = ['algo', 'rep', 'initial_value', 'selected_iterate', 'selected_value', 'final_value',
                  'trajectories', 'panel_queries', 'status']
WARNING_COLUMNS = ['algo', 'rep', 'status', 'message']

RAW_FILE = 'raw.csv'
AGGREGATE_FILE = 'aggregate.csv'
OUTPUTS_FILE = 'outputs.csv'
WARNINGS_FILE = 'warnings.csv'
MANIFEST_FILE = 'manifest.yaml'


# =============================================================================
# SEEDS AND CELLS
# =============================================================================

def cell_seed_sequence(master_seed: int, tag: str, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(zlib.crc32(tag.encode('utf-8')), rep))


def cell_rng(master_seed: int, tag: str, rep: int) -> np.random.Generator:
    """Independent Generator for one (algorithm, repetition) cell."""
    return np.random.default_rng(cell_seed_sequence(master_seed, tag, rep))


def run_algorithm(tag: str, mdp: TabularMdp, algo_config: Union[ZspoConfig, BaselineConfig],
                  rng: np.random.Generator, counter: SampleCounter) -> ParameterTrace:
    """Dispatch one training run by algorithm tag."""
    if tag == 'zspo':
        return zspo_run(mdp, algo_config, rng=rng, counter=counter)
    if tag == 'zpg':
        return zpg_run(mdp, algo_config, rng=rng, counter=counter)
    if tag == 'rm-ppo':
        return rm_ppo_run(mdp, algo_config, rng=rng, counter=counter)
    if tag in ('dpo', 'online-dpo'):
        return dpo_run(mdp, algo_config, rng=rng, online=(tag == 'online-dpo'), counter=counter)
    raise ValueError(f"Unknown algorithm '{tag}'")


def declared_cell_budget(tag: str, algo_config: Union[ZspoConfig, BaselineConfig]) -> Dict[str, int]:
    """Trajectories and panel queries a full cell must consume."""
    if tag == 'zspo':
        per_iteration = iteration_budget(tag, algo_config.batches_per_iteration, algo_config.batch_size)
    else:
        per_iteration = iteration_budget(tag, algo_config.pairs_per_iteration)
    total = {key: value * algo_config.iterations for key, value in per_iteration.items()}
    if tag == 'rm-ppo':
        total['trajectories'] += 2 * algo_config.rm_pairs
        total['panel_queries'] += algo_config.rm_pairs
    return total


@dataclass
class CellResult:
    """What one (algorithm, repetition) cell sends back to the collector."""

    algo: str
    rep: int
    status: str
    iterations: List[int] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    initial_value: Optional[float] = None
    selected_iterate: Optional[int] = None
    selected_value: Optional[float] = None
    final_value: Optional[float] = None
    trajectories: int = 0
    panel_queries: int = 0
    message: str = ''


def run_cell(task: Tuple[TabularMdp, str, Union[ZspoConfig, BaselineConfig], int, int]) -> CellResult:
    """
    Execute one cell. Top-level so worker processes can pickle it.

    Divergence is reported in the result; budget mismatches propagate.
    """
    mdp, tag, algo_config, master_seed, rep = task
    rng = cell_rng(master_seed, tag, rep)
    counter = SampleCounter()
    try:
        trace = run_algorithm(tag, mdp, algo_config, rng, counter)
    except DivergenceError as error:
        return CellResult(algo=tag, rep=rep, status='diverged', message=str(error),
                          trajectories=counter.trajectories, panel_queries=counter.panel_queries)

    declared = declared_cell_budget(tag, algo_config)
    used = {'trajectories': counter.trajectories, 'panel_queries': counter.panel_queries}
    if used != declared:
        raise BudgetError(f"{tag} rep {rep} used {used}, declared {declared}")

    t_values = trace.evaluated_iterations()
    selected_value = trace.values[trace.selected_index]
    if np.isnan(selected_value):
        selected_value = exact_value(mdp, PolicyParams.for_mdp(mdp, trace.selected_theta))
    return CellResult(
        algo=tag, rep=rep, status='ok',
        iterations=[int(t) for t in t_values],
        values=[float(trace.values[t]) for t in t_values],
        initial_value=trace.initial_value,
        selected_iterate=trace.selected_index + 1, selected_value=float(selected_value),
        final_value=float(trace.values[-1]),
        trajectories=counter.trajectories, panel_queries=counter.panel_queries,
    )


# =============================================================================
# RECORDS AND AGGREGATION
# =============================================================================

def aggregate_raw(raw: pd.DataFrame, algo_order: Optional[List[str]] = None) -> pd.DataFrame:
    """
    Mean and 95% CI per (algo, t).

    half width = 1.96 * std(ddof=1) / sqrt(R); 0 when only one repetition
    is available.
    """
    if raw.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    order = algo_order or list(dict.fromkeys(raw['algo']))
    grouped = raw.groupby(['algo', 't'], sort=False)['exact_value']
    frame = grouped.agg(['mean', 'std', 'count']).reset_index()
    std = frame['std'].fillna(0.0).to_numpy()
    half = CI_Z * std / np.sqrt(frame['count'].to_numpy())

    aggregate = pd.DataFrame({
        'algo': frame['algo'],
        'rep': 'mean',
        't': frame['t'].astype(int),
        'exact_value': frame['mean'],
        'ci_low': frame['mean'] - half,
        'ci_high': frame['mean'] + half,
        'ci_half_width': half,
        'n_reps': frame['count'].astype(int),
    })
    aggregate['_order'] = aggregate['algo'].map({tag: i for i, tag in enumerate(order)})
    aggregate = aggregate.sort_values(['_order', 't'], kind='mergesort').drop(columns='_order')
    return aggregate.reset_index(drop=True)[AGGREGATE_COLUMNS]


@dataclass
class RunRecord:
    """
    PURPOSE: Everything run_experiment produced

    raw / aggregate / outputs / warnings are pandas DataFrames in the
    column layouts above; manifest is the dict written to manifest.yaml.
    """

    raw: pd.DataFrame
    aggregate: pd.DataFrame
    outputs: pd.DataFrame
    warnings: pd.DataFrame
    manifest: Dict[str, Any] = field(default_factory=dict)
    output_dir: Optional[str] = None

    @property
    def algorithms(self) -> List[str]:
        return list(dict.fromkeys(self.aggregate['algo']))

    def is_empty(self) -> bool:
        return self.aggregate.empty

    def curve(self, algo: str) -> pd.DataFrame:
        """Aggregate rows of one algorithm, ordered by t."""
        rows = self.aggregate[self.aggregate['algo'] == algo]
        if rows.empty:
            raise ValueError(f"No aggregate rows for algorithm '{algo}'")
        return rows.sort_values('t').reset_index(drop=True)

    def final_summary(self) -> pd.DataFrame:
        """Last aggregate row per algorithm."""
        return (self.aggregate.sort_values('t').groupby('algo', sort=False).tail(1)
                .set_index('algo').loc[self.algorithms].reset_index())

    def check_consistency(self) -> bool:
        """True when aggregate rows recompute exactly from raw rows."""
        recomputed = aggregate_raw(self.raw, self.algorithms)
        if recomputed.shape != self.aggregate.shape:
            return False
        left = recomputed.reset_index(drop=True)
        right = self.aggregate.reset_index(drop=True)
        try:
            pd.testing.assert_frame_equal(left, right, check_dtype=False, check_exact=True)
        except AssertionError:
            return False
        return True


def collect_results(results: List[CellResult], algo_order: List[str]) -> RunRecord:
    """Single collector: turns cell results into the record tables."""
    raw_rows, output_rows, warning_rows = [], [], []
    for result in results:
        output_rows.append({
            'algo': result.algo, 'rep': result.rep, 'initial_value': result.initial_value,
            'selected_iterate': result.selected_iterate,
            'selected_value': result.selected_value, 'final_value': result.final_value,
            'trajectories': result.trajectories, 'panel_queries': result.panel_queries,
            'status': result.status,
        })
        if result.status != 'ok':
            logger.warning("Excluding %s rep %d from aggregation: %s", result.algo, result.rep, result.message)
            warning_rows.append({'algo': result.algo, 'rep': result.rep,
                                 'status': result.status, 'message': result.message})
            continue
        for t, value in zip(result.iterations, result.values):
            raw_rows.append({'algo': result.algo, 'rep': result.rep, 't': t, 'exact_value': value})

    raw = pd.DataFrame(raw_rows, columns=RAW_COLUMNS)
    return RunRecord(
        raw=raw,
        aggregate=aggregate_raw(raw, algo_order),
        outputs=pd.DataFrame(output_rows, columns=OUTPUT_COLUMNS),
        warnings=pd.DataFrame(warning_rows, columns=WARNING_COLUMNS),
    )


# =============================================================================
# EXPERIMENT
# =============================================================================

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _resolved_algorithm_configs(config: ExperimentConfig, mdp: TabularMdp) -> Dict[str, Dict[str, Any]]:
    """Every hyperparameter actually used, including derived mu and H_eff."""
    resolved = {}
    for tag in config.algorithms:
        algo_config = config.build_algorithm_config(tag)
        settings = {k: v for k, v in config.algorithm_settings(tag).items()}
        if tag == 'zspo':
            settings['perturbation'] = algo_config.resolved_perturbation(mdp)
            settings['horizon_constant'] = algo_config.resolved_horizon(mdp)
        else:
            defaults = {name: getattr(algo_config, name) for name in (
                'kl_weight', 'sgd_epochs', 'trim', 'rm_pairs', 'rm_learning_rate', 'rm_batch_size',
                'ppo_learning_rate', 'ppo_clip', 'dpo_learning_rate', 'learning_rate_scale')}
            settings = {**defaults, **settings}
            settings['assumed_link'] = algo_config.assumed_link.to_dict()
            if tag == 'zpg':
                schedule = zpg_schedule(mdp, algo_config)
                settings['perturbation'] = schedule.perturbation
                settings['horizon_constant'] = schedule.horizon_constant
        settings['declared_cell_budget'] = declared_cell_budget(tag, algo_config)
        resolved[tag] = settings
    return resolved


def write_record(record: RunRecord, output_dir: Union[str, Path]) -> Dict[str, str]:
    """Write the CSV tables; returns {kind: path}."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        'raw': output_dir / RAW_FILE,
        'aggregate': output_dir / AGGREGATE_FILE,
        'outputs': output_dir / OUTPUTS_FILE,
    }
    record.raw.to_csv(paths['raw'], index=False)
    record.aggregate.to_csv(paths['aggregate'], index=False)
    record.outputs.to_csv(paths['outputs'], index=False)
    if not record.warnings.empty:
        paths['warnings'] = output_dir / WARNINGS_FILE
        record.warnings.to_csv(paths['warnings'], index=False)
    return {kind: str(path) for kind, path in paths.items()}


def run_experiment(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None,
                   workers: Optional[int] = None, write: bool = True) -> RunRecord:
    """
    Run every (algorithm, repetition) cell and collect a RunRecord.

    PARAMETERS:
        config: Validated ExperimentConfig
        output_dir: Overrides config.output_dir
        workers: Overrides config.workers; 1 runs in-process
        write: Write CSVs and the manifest

    RETURNS:
        RunRecord; cells that diverged appear only in outputs/warnings
    """
    started = time.perf_counter()
    output_dir = Path(output_dir if output_dir is not None else config.output_dir)
    workers = config.workers if workers is None else int(workers)

    mdp = config.build_environment()
    algo_order = list(config.algorithms)
    tasks = [(mdp, tag, config.build_algorithm_config(tag), config.master_seed, rep)
             for tag in algo_order for rep in range(config.repetitions)]
    logger.info("Running '%s': %d cells on %s with %d worker(s)",
                config.name, len(tasks), mdp.name, workers)

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, tasks))
    else:
        results = []
        for task in tasks:
            results.append(run_cell(task))
            logger.info("Finished %s rep %d", task[1], task[4])

    record = collect_results(results, algo_order)
    record.manifest = {
        'format_version': 1,
        'toolkit_version': __version__,
        'created': datetime.now().isoformat(timespec='seconds'),
        'seed_scheme': SEED_SCHEME,
        'environment': {'name': mdp.name, 'seed': mdp.seed, 'num_states': mdp.num_states,
                        'num_actions': mdp.num_actions, 'horizon': mdp.horizon},
        'config': config.to_dict(),
        'algorithm_configs': _resolved_algorithm_configs(config, mdp),
        'excluded_cells': len(record.warnings),
    }

    if write:
        files = write_record(record, output_dir)
        record.output_dir = str(output_dir)
        record.manifest['files'] = {kind: Path(path).name for kind, path in files.items()}
        record.manifest['raw_sha256'] = _sha256(Path(files['raw']))
        record.manifest['wall_clock_seconds'] = round(time.perf_counter() - started, 3)
        with open(output_dir / MANIFEST_FILE, 'w') as f:
            yaml.safe_dump(record.manifest, f, sort_keys=False)
    else:
        record.manifest['wall_clock_seconds'] = round(time.perf_counter() - started, 3)

    logger.info("Experiment '%s' done in %.1fs", config.name, record.manifest['wall_clock_seconds'])
    return record


def load_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_FILE
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    with open(path, 'r') as f:
        return yaml.safe_load(f)


def replay(manifest_path: Union[str, Path], output_dir: Optional[Union[str, Path]] = None,
           workers: Optional[int] = None) -> Tuple[RunRecord, bool]:
    """
    Re-run the experiment stored in a manifest.

    RETURNS:
        (record, matches) where matches says whether the new raw.csv hashes
        to the manifest's raw_sha256
    """
    manifest = load_manifest(manifest_path)
    config = ExperimentConfig.from_dict(manifest['config'])
    if output_dir is None:
        base = Path(manifest_path)
        base = base if base.is_dir() else base.parent
        output_dir = base / 'replay'
    record = run_experiment(config, output_dir=output_dir, workers=workers)
    matches = record.manifest.get('raw_sha256') == manifest.get('raw_sha256')
    if matches:
        logger.info("Replay reproduced raw CSV (sha256 %s)", manifest.get('raw_sha256'))
    else:
        logger.warning("Replay raw CSV hash differs from the manifest")
    return record, matches
