"""
Shared Training Infrastructure - Traces, budgets and configuration

PURPOSE: The pieces every training algorithm (ZSPO and the four baselines)
         has in common:
         - ParameterTrace: the theta path plus exact values and the theta_R pick
         - select_output_index: P(R = t) proportional to alpha_t
         - Budget accounting: each iteration must sample exactly the declared
           number of trajectories and panel queries
         - BaselineConfig: hyperparameters of ZPG, RM+PPO, DPO and Online DPO

USAGE:
    trace = zspo_run(mdp, config, rng=rng)
    trace.values[-1]        # exact value of the last iterate
    trace.selected_theta    # theta_R
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value
from preference.links import LinkFunction
from preference.panel import Panel

logger = logging.getLogger(__name__)

ValueOracle = Callable[[TabularMdp, PolicyParams], float]


class BudgetError(RuntimeError):
    """An iteration sampled a different number of trajectories or queries than declared."""


# =============================================================================
# TRACES
# =============================================================================

@dataclass
class ParameterTrace:
    """
    PURPOSE: Everything one training run produced

    FIELDS:
        algorithm: Tag ('zspo', 'zpg', 'rm-ppo', 'dpo', 'online-dpo')
        thetas: (T + 1, d) iterates theta_1 .. theta_{T+1}
        values: (T + 1,) exact V(pi_theta_t); NaN where the cadence skipped t
        learning_rates: (T,) step sizes alpha_t
        vote_tallies: (T,) sum of the N votes per iteration, NaN when no
                      panel was queried
        selected_index: 0-based index R - 1 of theta_R within thetas[:T]
        trajectories_sampled / panel_queries: totals from the sample counter
        diagnostics: Free-form extras (losses, reward model, ...)
    """

    algorithm: str
    thetas: np.ndarray
    values: np.ndarray
    learning_rates: np.ndarray
    vote_tallies: np.ndarray
    selected_index: int
    trajectories_sampled: int = 0
    panel_queries: int = 0
    diagnostics: Dict[str, object] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.thetas.shape[0] - 1

    @property
    def selected_theta(self) -> np.ndarray:
        return self.thetas[self.selected_index]

    @property
    def final_theta(self) -> np.ndarray:
        return self.thetas[-1]

    @property
    def initial_value(self) -> float:
        return float(self.values[0])

    def evaluated_iterations(self) -> np.ndarray:
        """
        Update counts t in 1..T whose iterate was evaluated.

        values[t] is the value after t updates; values[0] is theta_1.
        """
        return np.flatnonzero(~np.isnan(self.values[1:])) + 1


def select_output_index(learning_rates: np.ndarray, rng: np.random.Generator) -> int:
    """Draw R - 1 with P(R = t) = alpha_t / sum_i alpha_i; uniform if every alpha is 0."""
    rates = np.asarray(learning_rates, dtype=float)
    if rates.size == 0:
        raise ValueError("cannot select an output from an empty trace")
    total = rates.sum()
    probs = rates / total if total > 0 else np.full(rates.size, 1.0 / rates.size)
    return int(rng.choice(rates.size, p=probs))


def evaluate_trace(mdp: TabularMdp, thetas: np.ndarray,
                   value_oracle: ValueOracle = exact_value, eval_every: int = 1) -> np.ndarray:
    """
    Exact values on the evaluation cadence.

    theta_1 and the last iterate are always evaluated.
    """
    if eval_every < 1:
        raise ValueError(f"eval_every must be >= 1, got {eval_every}")
    values = np.full(thetas.shape[0], np.nan)
    last = thetas.shape[0] - 1
    for i in range(thetas.shape[0]):
        if i % eval_every == 0 or i == last:
            values[i] = value_oracle(mdp, PolicyParams.for_mdp(mdp, thetas[i]))
    return values


def initial_theta(mdp: TabularMdp, theta1: Optional[np.ndarray] = None) -> np.ndarray:
    """theta_1 as a writable float vector; all-zero logits (uniform policy) by default."""
    if theta1 is None:
        return np.zeros(mdp.dimension)
    theta = np.array(theta1, dtype=float).ravel()
    if theta.shape[0] != mdp.dimension:
        raise ValueError(f"theta1 has dimension {theta.shape[0]}, MDP expects {mdp.dimension}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta1 entries must be finite")
    return theta


# =============================================================================
# BUDGETS
# =============================================================================

def iteration_budget(algorithm: str, pairs: int, batch_size: int = 1) -> Dict[str, int]:
    """
    Declared per-iteration sampling budget.

    zspo samples N batch pairs of D trajectories each; the pairwise
    baselines sample N trajectory pairs; PPO samples N trajectories and
    never queries the panel.
    """
    if algorithm == 'zspo':
        return {'trajectories': 2 * pairs * batch_size, 'panel_queries': pairs}
    if algorithm in ('zpg', 'dpo', 'online-dpo'):
        return {'trajectories': 2 * pairs, 'panel_queries': pairs}
    if algorithm == 'rm-ppo':
        return {'trajectories': pairs, 'panel_queries': 0}
    raise ValueError(f"Unknown algorithm '{algorithm}'")


class BudgetMeter:
    """
    Checks each iteration against the declared budget.

    Wraps a SampleCounter; call start() before an iteration and finish()
    after it.
    """

    def __init__(self, counter: SampleCounter, trajectories: int, panel_queries: int, label: str):
        self.counter = counter
        self.trajectories = trajectories
        self.panel_queries = panel_queries
        self.label = label
        self._mark = (counter.trajectories, counter.panel_queries)

    def start(self) -> None:
        self._mark = (self.counter.trajectories, self.counter.panel_queries)

    def finish(self, iteration: int) -> None:
        used = (self.counter.trajectories - self._mark[0],
                self.counter.panel_queries - self._mark[1])
        if used != (self.trajectories, self.panel_queries):
            raise BudgetError(
                f"{self.label} iteration {iteration} used {used[0]} trajectories and "
                f"{used[1]} panel queries, declared {self.trajectories} and {self.panel_queries}"
            )


# =============================================================================
# BASELINE CONFIGURATION
# =============================================================================

BASELINE_ALGORITHMS = ('zpg', 'rm-ppo', 'dpo', 'online-dpo')


@dataclass(frozen=True)
class BaselineConfig:
    """
    PURPOSE: Hyperparameters of the four comparison algorithms

    PARAMETERS:
        algorithm: One of BASELINE_ALGORITHMS
        iterations: T
        pairs_per_iteration: N (trajectories for PPO, pairs otherwise)
        panel: The TRUE panel generating preferences
        assumed_link: Link ZPG inverts (and the logistic model RM/DPO fit)
        kl_weight: beta for the PPO KL penalty and the DPO implicit reward
        sgd_epochs: Inner epochs per iteration (RM pretraining, PPO, DPO)
        trim: ZPG clamps preference fractions into [trim, 1 - trim]
        rm_pairs: Pairs collected before reward-model training
        perturbation / learning_rate_scale / horizon_constant: ZPG ascent schedule;
            perturbation None means the corollary_perturbation default
        rm_learning_rate, ppo_learning_rate, dpo_learning_rate: Inner SGD rates
        ppo_clip: Clipping radius of the PPO surrogate
        rm_batch_size: Minibatch size of reward-model SGD
        eval_every: Exact-value cadence
    """

    algorithm: str
    iterations: int
    pairs_per_iteration: int
    panel: Panel
    assumed_link: LinkFunction = field(default_factory=lambda: LinkFunction('logistic', 1.0))
    kl_weight: float = 0.1
    sgd_epochs: int = 5
    trim: float = 0.001
    rm_pairs: int = 500_000
    perturbation: Optional[float] = None
    learning_rate_scale: float = 1.0
    horizon_constant: Optional[float] = None
    rm_learning_rate: float = 0.05
    rm_batch_size: int = 256
    ppo_learning_rate: float = 0.05
    ppo_clip: float = 0.2
    dpo_learning_rate: float = 0.05
    eval_every: int = 1

    def __post_init__(self):
        if self.algorithm not in BASELINE_ALGORITHMS:
            raise ValueError(f"Unknown baseline '{self.algorithm}'. Valid: {', '.join(BASELINE_ALGORITHMS)}")
        for name in ('iterations', 'pairs_per_iteration', 'sgd_epochs', 'rm_pairs', 'rm_batch_size', 'eval_every'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.kl_weight < 0:
            raise ValueError(f"kl_weight must be >= 0, got {self.kl_weight}")
        if not 0 < self.trim < 0.5:
            raise ValueError(f"trim must lie in (0, 0.5), got {self.trim}")
        if self.perturbation is not None and self.perturbation <= 0:
            raise ValueError(f"perturbation must be > 0, got {self.perturbation}")
        if self.ppo_clip <= 0:
            raise ValueError(f"ppo_clip must be > 0, got {self.ppo_clip}")

    def budget(self) -> Dict[str, int]:
        return iteration_budget(self.algorithm, self.pairs_per_iteration)
