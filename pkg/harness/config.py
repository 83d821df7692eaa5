"""
Experiment Configuration - YAML experiment files with environment overrides

PURPOSE: Turn an experiment file into validated, fully resolved settings:
         the environment, the true panel, the algorithms to compare, the
         repetition count and the seeding.

PRECEDENCE (highest first):
    1. Explicit overrides (CLI flags)
    2. Environment variables ZSPO_OUTPUT_DIR and ZSPO_WORKERS
    3. Values in the YAML file
    4. Defaults below

FILE LAYOUT:
    name: bradley_terry_desk
    master_seed: 2024
    repetitions: 20
    output_dir: results/bradley_terry_desk
    workers: 1
    environment: {kind: gridworld, seed: 7}        # or {kind: mdp_file, path: my.yaml}
    panel: {kind: logistic, gamma: 1.0, K: 100}
    defaults: {iterations: 200, pairs: 200, batch_size: 1, eval_every: 1}
    algorithms:
      zspo: {learning_rate_scale: 1.0}
      zpg: {assumed_link: {kind: logistic, gamma: 1.0}}
      rm-ppo: {}
      dpo: {}
      online-dpo: {}
"""

import copy
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from algorithms import ALGORITHM_TAGS, BaselineConfig, ZspoConfig
from mdp.gridworld import make_gridworld
from mdp.serialization import load_mdp
from mdp.tabular import TabularMdp, normalize_rewards
from preference.links import LinkFunction
from preference.panel import Panel

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'ZSPO_OUTPUT_DIR'
WORKERS_ENV = 'ZSPO_WORKERS'

ENVIRONMENT_KINDS = ('gridworld', 'mdp_file')

DEFAULT_SETTINGS = {
    'iterations': 200,
    'pairs': 200,
    'batch_size': 1,
    'eval_every': 1,
}

# Per-algorithm keys, mapped onto the config dataclass fields
ZSPO_KEYS = {
    'iterations': 'iterations',
    'pairs': 'batches_per_iteration',
    'batch_size': 'batch_size',
    'perturbation': 'perturbation',
    'perturbation_scale': 'perturbation_scale',
    'learning_rate_scale': 'learning_rate_scale',
    'horizon_constant': 'horizon_constant',
    'eval_every': 'eval_every',
}
BASELINE_KEYS = {
    'iterations': 'iterations',
    'pairs': 'pairs_per_iteration',
    'assumed_link': 'assumed_link',
    'kl_weight': 'kl_weight',
    'sgd_epochs': 'sgd_epochs',
    'trim': 'trim',
    'rm_pairs': 'rm_pairs',
    'perturbation': 'perturbation',
    'learning_rate_scale': 'learning_rate_scale',
    'horizon_constant': 'horizon_constant',
    'rm_learning_rate': 'rm_learning_rate',
    'rm_batch_size': 'rm_batch_size',
    'ppo_learning_rate': 'ppo_learning_rate',
    'ppo_clip': 'ppo_clip',
    'dpo_learning_rate': 'dpo_learning_rate',
    'eval_every': 'eval_every',
}
# Shared defaults that only some algorithms use
IGNORED_DEFAULTS = {'batch_size', 'perturbation_scale'}
# Baseline keys that only ZPG reads; RM+PPO and both DPO variants reject them
ZPG_ONLY_KEYS = ('perturbation', 'learning_rate_scale', 'horizon_constant', 'trim')
# RM+PPO and DPO always fit a logistic (gamma = 1) preference model
LOGISTIC_FIT_TAGS = ('rm-ppo', 'dpo', 'online-dpo')


@dataclass
class ExperimentConfig:
    """
    PURPOSE: One experiment: environment x panel x algorithms x repetitions

    PARAMETERS:
        name: Label for output files and logs
        environment: {'kind': 'gridworld', 'seed': int} or {'kind': 'mdp_file', 'path': str};
                     optional 'normalize': true maps rewards into [0, 1]
        panel: True panel generating every preference
        algorithms: Ordered {tag: settings}; settings override `defaults`
        defaults: Settings shared by every algorithm
        repetitions: R >= 1
        master_seed: Root of every random stream
        output_dir: Where CSVs and the manifest go
        workers: Worker processes (1 = run in-process)
    """

    name: str
    environment: Dict[str, Any]
    panel: Panel
    algorithms: Dict[str, Dict[str, Any]]
    defaults: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULT_SETTINGS))
    repetitions: int = 1
    master_seed: int = 0
    output_dir: str = 'results'
    workers: int = 1

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def validate(self) -> None:
        """Raise ValueError / FileNotFoundError naming the offending key."""
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError(f"repetitions must be a positive integer, got {self.repetitions}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ValueError(f"workers must be a positive integer, got {self.workers}")
        if not self.algorithms:
            raise ValueError("algorithms: at least one algorithm is required")
        for tag in self.algorithms:
            if tag not in ALGORITHM_TAGS:
                raise ValueError(f"algorithms: unknown tag '{tag}'. Valid: {', '.join(ALGORITHM_TAGS)}")

        kind = self.environment.get('kind')
        if kind not in ENVIRONMENT_KINDS:
            raise ValueError(f"environment.kind must be one of {', '.join(ENVIRONMENT_KINDS)}, got {kind}")
        if kind == 'gridworld' and 'seed' not in self.environment:
            raise ValueError("environment.seed is required for a gridworld")
        if kind == 'mdp_file':
            path = self.environment.get('path')
            if not path or not Path(path).exists():
                raise FileNotFoundError(f"environment.path: MDP file not found: {path}")

        # Building every algorithm config surfaces bad keys and values now
        for tag in self.algorithms:
            self.algorithm_settings(tag)
            if tag in LOGISTIC_FIT_TAGS and 'assumed_link' in (self.algorithms.get(tag) or {}):
                logger.warning("algorithms.%s: assumed_link is ignored; %s always fits a logistic "
                               "model with gamma = 1", tag, tag)

    # ------------------------------------------------------------------
    # Resolution
    # ------------------------------------------------------------------

    def algorithm_settings(self, tag: str) -> Dict[str, Any]:
        """Defaults merged with the algorithm's own settings."""
        settings = {**self.defaults, **(self.algorithms.get(tag) or {})}
        known = ZSPO_KEYS if tag == 'zspo' else BASELINE_KEYS
        for key in settings:
            if key not in known and key not in IGNORED_DEFAULTS:
                raise ValueError(f"algorithms.{tag}: unknown setting '{key}'")
        if tag in LOGISTIC_FIT_TAGS:
            for key in ZPG_ONLY_KEYS:
                if key in (self.algorithms.get(tag) or {}):
                    raise ValueError(f"algorithms.{tag}: '{key}' only applies to zpg")
        return settings

    def build_environment(self) -> TabularMdp:
        if self.environment['kind'] == 'gridworld':
            mdp = make_gridworld(int(self.environment['seed']))
        else:
            mdp = load_mdp(self.environment['path'])
        if self.environment.get('normalize', False):
            mdp = normalize_rewards(mdp)
        return mdp

    def build_algorithm_config(self, tag: str) -> Union[ZspoConfig, BaselineConfig]:
        """Typed config for one algorithm tag."""
        settings = self.algorithm_settings(tag)
        if tag == 'zspo':
            kwargs = {ZSPO_KEYS[k]: v for k, v in settings.items() if k in ZSPO_KEYS}
            return ZspoConfig(panel=self.panel, seed=self.master_seed, **kwargs)

        kwargs = {BASELINE_KEYS[k]: v for k, v in settings.items() if k in BASELINE_KEYS}
        if 'assumed_link' in kwargs:
            kwargs['assumed_link'] = LinkFunction.from_dict(kwargs['assumed_link'])
        return BaselineConfig(algorithm=tag, panel=self.panel, **kwargs)

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'master_seed': self.master_seed,
            'repetitions': self.repetitions,
            'output_dir': str(self.output_dir),
            'workers': self.workers,
            'environment': copy.deepcopy(self.environment),
            'panel': self.panel.to_dict(),
            'defaults': copy.deepcopy(self.defaults),
            'algorithms': copy.deepcopy(self.algorithms),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        for key in ('environment', 'panel', 'algorithms'):
            if key not in data:
                raise ValueError(f"experiment config missing required key: {key}")
        algorithms = data['algorithms']
        if isinstance(algorithms, list):
            algorithms = {tag: {} for tag in algorithms}
        return cls(
            name=str(data.get('name', 'experiment')),
            environment=dict(data['environment']),
            panel=Panel.from_dict(data['panel']),
            algorithms={tag: dict(settings or {}) for tag, settings in algorithms.items()},
            defaults={**DEFAULT_SETTINGS, **(data.get('defaults') or {})},
            repetitions=int(data.get('repetitions', 1)),
            master_seed=int(data.get('master_seed', 0)),
            output_dir=str(data.get('output_dir', 'results')),
            workers=int(data.get('workers', 1)),
        )


def apply_environment_overrides(data: Dict[str, Any]) -> Dict[str, Any]:
    """Copy of data with ZSPO_OUTPUT_DIR / ZSPO_WORKERS applied."""
    data = copy.deepcopy(data)
    if os.environ.get(OUTPUT_DIR_ENV):
        data['output_dir'] = os.environ[OUTPUT_DIR_ENV]
    if os.environ.get(WORKERS_ENV):
        try:
            data['workers'] = int(os.environ[WORKERS_ENV])
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got '{os.environ[WORKERS_ENV]}'")
    return data


def load_experiment_config(path: Union[str, Path],
                           overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Read an experiment YAML file.

    PARAMETERS:
        path: File path
        overrides: Top-level keys (e.g. output_dir, repetitions) or nested
                   'defaults' / 'panel' entries that beat both the file and
                   the environment

    RAISES:
        FileNotFoundError when the file is missing
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Experiment config not found: {path}")
    with open(path, 'r') as f:
        data = yaml.safe_load(f) or {}
    data = apply_environment_overrides(data)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    config = ExperimentConfig.from_dict(data)
    logger.info("Loaded experiment '%s' from %s (%d algorithms, R=%d)",
                config.name, path, len(config.algorithms), config.repetitions)
    return config
