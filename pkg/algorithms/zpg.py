"""
ZPG Baseline - Zeroth-order policy gradient through an inverted link

PURPOSE: The baseline that ASSUMES it knows the link. Each iteration
         estimates the preference probability of N trajectory pairs from
         panel vote fractions, inverts the assumed link to recover return
         differences, and takes a two-point ZO-SGD step:

             g = (mean_n sigma_assumed^{-1}(clamp(k_n / K)) / mu) * v

When the assumed link differs from the panel's true link the recovered
differences are biased; their signs stay right because every link is
antisymmetric.
"""

import logging
from typing import Callable, Optional

import numpy as np

from algorithms.common import (
    BaselineConfig,
    BudgetMeter,
    ParameterTrace,
    ValueOracle,
    evaluate_trace,
    initial_theta,
    select_output_index,
)
from algorithms.zspo import corollary_perturbation, perturb
from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value, sample_rollouts
from optim.zo_optim import ScheduleConfig, check_divergence
from preference.links import LinkFunction, NonInvertibleLinkError
from preference.panel import Panel, panel_vote_fractions

logger = logging.getLogger(__name__)

# difference_oracle(theta_prime, theta, rng) -> estimated V(theta') - V(theta)
DifferenceOracle = Callable[[np.ndarray, np.ndarray, Optional[np.random.Generator]], float]


def clamp_preference(p, trim: float):
    """Clamp probabilities into [trim, 1 - trim] so the inverse link stays finite."""
    return np.clip(p, trim, 1.0 - trim)


def recover_return_differences(assumed_link: LinkFunction, true_panel: Panel, gaps,
                               trim: float, rng: np.random.Generator) -> np.ndarray:
    """
    Per-pair return-difference estimates.

    The TRUE panel votes on each gap; the vote fraction is clamped and
    pushed through the ASSUMED link's inverse.
    """
    fractions = panel_vote_fractions(true_panel, gaps, rng)
    return np.atleast_1d(assumed_link.inverse(clamp_preference(fractions, trim)))


def zpg_schedule(mdp: TabularMdp, config: BaselineConfig) -> ScheduleConfig:
    horizon = float(mdp.horizon if config.horizon_constant is None else config.horizon_constant)
    mu = config.perturbation
    if mu is None:
        mu = corollary_perturbation(mdp.dimension, config.pairs_per_iteration, 1, horizon)
    return ScheduleConfig(learning_rate_scale=config.learning_rate_scale, perturbation=mu,
                          horizon_constant=horizon, iterations=config.iterations)


def zpg_run(mdp: TabularMdp, config: BaselineConfig,
            assumed_link: Optional[LinkFunction] = None, true_panel: Optional[Panel] = None,
            theta1: Optional[np.ndarray] = None, rng: Optional[np.random.Generator] = None,
            difference_oracle: Optional[DifferenceOracle] = None,
            value_oracle: ValueOracle = exact_value,
            counter: Optional[SampleCounter] = None) -> ParameterTrace:
    """
    Run T iterations of ZPG.

    PARAMETERS:
        assumed_link: Link inverted by the learner (config.assumed_link when None)
        true_panel: Panel generating the votes (config.panel when None)
        difference_oracle: Replaces sampling and voting with a direct
                           estimate of V(theta') - V(theta)

    RAISES:
        NonInvertibleLinkError if the assumed link cannot be inverted
    """
    assumed_link = config.assumed_link if assumed_link is None else assumed_link
    true_panel = config.panel if true_panel is None else true_panel
    if not assumed_link.is_invertible:
        raise NonInvertibleLinkError(f"ZPG needs an invertible assumed link, got '{assumed_link.kind}'")

    rng = np.random.default_rng() if rng is None else rng
    counter = SampleCounter() if counter is None else counter
    theta = initial_theta(mdp, theta1)
    schedule = zpg_schedule(mdp, config)
    mu = schedule.perturbation
    rates = schedule.learning_rates(mdp.dimension)
    N = config.pairs_per_iteration

    budget = config.budget() if difference_oracle is None else {'trajectories': 0, 'panel_queries': 0}
    meter = BudgetMeter(counter, budget['trajectories'], budget['panel_queries'], 'zpg')

    logger.info("zpg: T=%d N=%d mu=%.4g assumed=%s(%.4g) true=%s(%.4g)",
                config.iterations, N, mu, assumed_link.kind, assumed_link.gamma,
                true_panel.link.kind, true_panel.link.gamma)

    thetas = np.empty((config.iterations + 1, mdp.dimension))
    thetas[0] = theta
    for t in range(1, config.iterations + 1):
        meter.start()
        theta_prime, v = perturb(theta, mu, rng)
        if difference_oracle is not None:
            difference = difference_oracle(theta_prime, theta, rng)
        else:
            returns1 = sample_rollouts(mdp, PolicyParams.for_mdp(mdp, theta_prime), N, rng, counter).returns
            returns0 = sample_rollouts(mdp, PolicyParams.for_mdp(mdp, theta), N, rng, counter).returns
            recovered = recover_return_differences(assumed_link, true_panel, returns1 - returns0,
                                                   config.trim, rng)
            counter.panel_queries += N
            difference = float(recovered.mean())
        direction = (difference / mu) * v
        theta = theta + rates[t - 1] * direction
        check_divergence(theta, t, 'zpg')
        meter.finish(t)
        thetas[t] = theta

    selected = select_output_index(rates, rng)
    values = evaluate_trace(mdp, thetas, value_oracle, config.eval_every)
    return ParameterTrace(
        algorithm='zpg', thetas=thetas, values=values, learning_rates=rates,
        vote_tallies=np.full(config.iterations, np.nan), selected_index=selected,
        trajectories_sampled=counter.trajectories, panel_queries=counter.panel_queries,
        diagnostics={'perturbation': mu, 'assumed_link': assumed_link.to_dict()},
    )
