"""
ZSPO Trainer - Policy optimization from majority-vote preference signs

PURPOSE: Train a tabular softmax policy using nothing but panel votes.

ALGORITHM (one iteration t):
    1. perturb:   v ~ N(0, I_d), theta' = theta + mu v
    2. sample:    N batch pairs; batch 0 of D trajectories from pi_theta,
                  batch 1 of D trajectories from pi_theta'
    3. vote:      o_n = panel majority on each pair (1 = batch 1 preferred)
    4. sign:      s = sign(sum_n (o_n - 1/2)), 0 on an exact tie
    5. ascend:    theta <- theta + alpha_t s v,  alpha_t = c sqrt(H_eff / (d t))

    After T iterations theta_R is drawn from theta_1 .. theta_T with
    probability proportional to alpha_t.

The link function is never used by the trainer; it only lives inside the
panel that generates the votes.

USAGE:
    config = ZspoConfig(iterations=200, batches_per_iteration=200, batch_size=1,
                        panel=Panel(100, LinkFunction('logistic')))
    trace = zspo_run(make_gridworld(7), config, rng=np.random.default_rng(0))
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from algorithms.common import (
    BudgetMeter,
    ParameterTrace,
    ValueOracle,
    evaluate_trace,
    initial_theta,
    iteration_budget,
    select_output_index,
)
from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value, sample_rollouts
from optim.zo_optim import ScheduleConfig, SignOracle, check_divergence
from preference.panel import Panel, panel_votes_from_gaps

logger = logging.getLogger(__name__)


def corollary_perturbation(dimension: int, batches: int, batch_size: int,
                           horizon: float, scale: float = 1.0) -> float:
    """
    Perturbation distance mu = scale * sqrt(max(1/sqrt(N), H/sqrt(D)) / d).

    Balances the smoothing bias against the vote noise of N batch pairs of
    size D.
    """
    for name, value in (('dimension', dimension), ('batches', batches),
                        ('batch_size', batch_size), ('horizon', horizon), ('scale', scale)):
        if value <= 0:
            raise ValueError(f"{name} must be > 0, got {value}")
    inner = max(1.0 / np.sqrt(batches), horizon / np.sqrt(batch_size))
    return float(scale * np.sqrt(inner / dimension))


@dataclass(frozen=True)
class ZspoConfig:
    """
    PURPOSE: Inputs of one ZSPO run

    PARAMETERS:
        iterations: T
        batches_per_iteration: N batch pairs per iteration
        batch_size: D trajectories per batch
        panel: Panel that votes on every pair
        perturbation: mu; None selects corollary_perturbation with perturbation_scale
        perturbation_scale: Scale passed to corollary_perturbation
        learning_rate_scale: c in alpha_t
        horizon_constant: H_eff in alpha_t; None uses the MDP horizon
        seed: Master seed used when no rng is passed to zspo_run
        eval_every: Exact-value cadence
    """

    iterations: int
    batches_per_iteration: int
    batch_size: int
    panel: Panel
    perturbation: Optional[float] = None
    perturbation_scale: float = 1.0
    learning_rate_scale: float = 1.0
    horizon_constant: Optional[float] = None
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        for name in ('iterations', 'batches_per_iteration', 'batch_size', 'eval_every'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if self.perturbation is not None and self.perturbation <= 0:
            raise ValueError(f"perturbation must be > 0, got {self.perturbation}")
        if self.horizon_constant is not None and self.horizon_constant <= 0:
            raise ValueError(f"horizon_constant must be > 0, got {self.horizon_constant}")

    def resolved_horizon(self, mdp: TabularMdp) -> float:
        return float(mdp.horizon if self.horizon_constant is None else self.horizon_constant)

    def resolved_perturbation(self, mdp: TabularMdp) -> float:
        if self.perturbation is not None:
            return float(self.perturbation)
        return corollary_perturbation(mdp.dimension, self.batches_per_iteration, self.batch_size,
                                      self.resolved_horizon(mdp), self.perturbation_scale)

    def schedule(self, mdp: TabularMdp) -> ScheduleConfig:
        return ScheduleConfig(learning_rate_scale=self.learning_rate_scale,
                              perturbation=self.resolved_perturbation(mdp),
                              horizon_constant=self.resolved_horizon(mdp),
                              iterations=self.iterations)


# =============================================================================
# ONE ITERATION
# =============================================================================

def perturb(theta: np.ndarray, mu: float,
            rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """(theta + mu v, v) with v ~ N(0, I_d). mu = 0 returns theta unchanged."""
    if mu < 0:
        raise ValueError(f"perturbation mu must be >= 0, got {mu}")
    theta = np.asarray(theta, dtype=float)
    v = rng.standard_normal(theta.shape[0])
    return theta + mu * v, v


def collect_votes(mdp: TabularMdp, theta: np.ndarray, theta_prime: np.ndarray, panel: Panel,
                  batches: int, batch_size: int, rng: np.random.Generator,
                  counter: Optional[SampleCounter] = None) -> np.ndarray:
    """
    N majority votes, each comparing a D-batch from pi_theta' (1) against
    a D-batch from pi_theta (0).
    """
    if batches < 1 or batch_size < 1:
        raise ValueError(f"N and D must be >= 1, got N={batches}, D={batch_size}")
    n = batches * batch_size
    returns1 = sample_rollouts(mdp, PolicyParams.for_mdp(mdp, theta_prime), n, rng, counter).returns
    returns0 = sample_rollouts(mdp, PolicyParams.for_mdp(mdp, theta), n, rng, counter).returns
    gaps = (returns1.reshape(batches, batch_size).mean(axis=1)
            - returns0.reshape(batches, batch_size).mean(axis=1))
    votes = panel_votes_from_gaps(panel, gaps, rng)
    if counter is not None:
        counter.panel_queries += batches
    return votes


def majority_sign(votes: np.ndarray) -> int:
    """sign(sum_n (o_n - 1/2)); 0 when exactly half the votes are 1."""
    votes = np.asarray(votes)
    return int(np.sign(2 * int(votes.sum()) - votes.size))


def estimate_ascent_direction(mdp: TabularMdp, theta: np.ndarray, theta_prime: np.ndarray,
                              v: np.ndarray, panel: Panel, batches: int, batch_size: int,
                              rng: np.random.Generator,
                              counter: Optional[SampleCounter] = None) -> np.ndarray:
    """g = sign(sum_n (o_n - 1/2)) v from N fresh panel votes."""
    votes = collect_votes(mdp, theta, theta_prime, panel, batches, batch_size, rng, counter)
    return majority_sign(votes) * np.asarray(v, dtype=float)


# =============================================================================
# TRAINING LOOP
# =============================================================================

def zspo_run(mdp: TabularMdp, config: ZspoConfig, theta1: Optional[np.ndarray] = None,
             rng: Optional[np.random.Generator] = None,
             sign_oracle: Optional[SignOracle] = None,
             value_oracle: ValueOracle = exact_value,
             counter: Optional[SampleCounter] = None) -> ParameterTrace:
    """
    Run T iterations of ZSPO.

    PARAMETERS:
        mdp: Environment
        config: ZspoConfig
        theta1: Starting logits; all zeros when None
        rng: Generator for every draw; default_rng(config.seed) when None
        sign_oracle: Replaces steps 2-4 with compare(theta', theta, rng)
                     (the infinite-sample limit); no trajectories are sampled
        value_oracle: Used only to fill trace.values, never by the updates
        counter: SampleCounter shared with the caller

    RAISES:
        DivergenceError if ||theta|| passes 1e12
        BudgetError if an iteration does not use exactly 2ND trajectories and N queries
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    counter = SampleCounter() if counter is None else counter
    theta = initial_theta(mdp, theta1)
    schedule = config.schedule(mdp)
    mu = schedule.perturbation
    rates = schedule.learning_rates(mdp.dimension)
    N, D = config.batches_per_iteration, config.batch_size

    declared = iteration_budget('zspo', N, D) if sign_oracle is None else {'trajectories': 0, 'panel_queries': 0}
    meter = BudgetMeter(counter, declared['trajectories'], declared['panel_queries'], 'zspo')

    logger.info("zspo: T=%d N=%d D=%d mu=%.4g c=%.3g H_eff=%.3g K=%d link=%s",
                config.iterations, N, D, mu, config.learning_rate_scale,
                schedule.horizon_constant, config.panel.num_panelists, config.panel.link.kind)

    thetas = np.empty((config.iterations + 1, mdp.dimension))
    tallies = np.full(config.iterations, np.nan)
    thetas[0] = theta
    for t in range(1, config.iterations + 1):
        meter.start()
        theta_prime, v = perturb(theta, mu, rng)
        if sign_oracle is not None:
            sign = int(sign_oracle(theta_prime, theta, rng))
        else:
            votes = collect_votes(mdp, theta, theta_prime, config.panel, N, D, rng, counter)
            tallies[t - 1] = votes.sum()
            sign = majority_sign(votes)
        direction = sign * v
        theta = theta + rates[t - 1] * direction
        check_divergence(theta, t, 'zspo')
        meter.finish(t)
        thetas[t] = theta
        logger.debug("zspo t=%d sign=%+d tally=%s", t, sign, tallies[t - 1])

    selected = select_output_index(rates, rng)
    values = evaluate_trace(mdp, thetas, value_oracle, config.eval_every)
    return ParameterTrace(
        algorithm='zspo', thetas=thetas, values=values, learning_rates=rates,
        vote_tallies=tallies, selected_index=selected,
        trajectories_sampled=counter.trajectories, panel_queries=counter.panel_queries,
        diagnostics={'perturbation': mu, 'horizon_constant': schedule.horizon_constant},
    )
