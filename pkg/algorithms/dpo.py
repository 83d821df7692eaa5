"""
DPO Baselines - Direct preference optimization, offline and online

PURPOSE: Fit the policy straight to preference fractions, with no reward
         model. The implicit reward of a trajectory is

             h(tau) = beta * sum_h log(pi_theta(a_h|s_h) / pi_ref(a_h|s_h))

         and each iteration minimises the soft-label logistic loss

             loss = -mean(y log sigmoid(h1 - h0) + (1 - y) log sigmoid(h0 - h1))

         over N fresh pairs from the current policy, y = k/K being the
         fraction of panelists preferring trajectory 1.

VARIANTS:
    dpo          pi_ref is the initial policy for the whole run
    online-dpo   pi_ref <- pi_theta after every update
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit, log_softmax

from algorithms.common import (
    BaselineConfig,
    BudgetMeter,
    ParameterTrace,
    ValueOracle,
    evaluate_trace,
    initial_theta,
    select_output_index,
)
from mdp.tabular import PolicyParams, Rollouts, SampleCounter, TabularMdp, exact_value, sample_rollouts
from optim.zo_optim import check_divergence
from preference.panel import panel_vote_fractions

logger = logging.getLogger(__name__)


def state_action_counts(rollouts: Rollouts, num_states: int, num_actions: int) -> np.ndarray:
    """Visit counts (n, S, A) of each state-action pair per trajectory."""
    counts = np.zeros((len(rollouts), num_states, num_actions))
    rows = np.repeat(np.arange(len(rollouts)), rollouts.states.shape[1])
    np.add.at(counts, (rows, rollouts.states.ravel(), rollouts.actions.ravel()), 1.0)
    return counts


def dpo_loss_and_grad(logits: np.ndarray, reference_log_probs: np.ndarray,
                      count_diff: np.ndarray, labels: np.ndarray,
                      kl_weight: float) -> Tuple[float, np.ndarray]:
    """
    DPO loss and its gradient in the logits.

    PARAMETERS:
        logits: (S, A) current logits
        reference_log_probs: (S, A) log pi_ref
        count_diff: (n, S, A) state-action counts of trajectory 1 minus trajectory 0
        labels: (n,) soft labels y in [0, 1]
        kl_weight: beta

    RETURNS:
        (loss, gradient (S, A))
    """
    log_pi = log_softmax(logits, axis=1)
    pi = np.exp(log_pi)
    margin = kl_weight * np.einsum('nsa,sa->n', count_diff, log_pi - reference_log_probs)
    loss = float(np.mean(labels * np.logaddexp(0.0, -margin)
                         + (1.0 - labels) * np.logaddexp(0.0, margin)))

    # d margin / d logits = beta * (count_diff - state_count_diff * pi)
    residual = (expit(margin) - labels) / labels.size
    weighted = np.einsum('n,nsa->sa', residual, count_diff)
    state_weighted = weighted.sum(axis=1, keepdims=True)
    grad = kl_weight * (weighted - state_weighted * pi)
    return loss, grad


def dpo_run(mdp: TabularMdp, config: BaselineConfig, theta1: Optional[np.ndarray] = None,
            rng: Optional[np.random.Generator] = None, online: Optional[bool] = None,
            value_oracle: ValueOracle = exact_value,
            counter: Optional[SampleCounter] = None) -> ParameterTrace:
    """
    Run T iterations of DPO.

    PARAMETERS:
        online: Reset the reference to the current policy after each update.
                None follows config.algorithm ('online-dpo' means True).
    """
    if online is None:
        online = config.algorithm == 'online-dpo'
    algorithm = 'online-dpo' if online else 'dpo'
    rng = np.random.default_rng() if rng is None else rng
    counter = SampleCounter() if counter is None else counter
    theta = initial_theta(mdp, theta1)
    shape = (mdp.num_states, mdp.num_actions)
    reference_log_probs = log_softmax(theta.reshape(shape), axis=1)
    panel = config.panel
    N = config.pairs_per_iteration
    lr = config.dpo_learning_rate

    meter = BudgetMeter(counter, 2 * N, N, algorithm)

    thetas = np.empty((config.iterations + 1, mdp.dimension))
    thetas[0] = theta
    losses = np.empty((config.iterations, config.sgd_epochs))
    for t in range(1, config.iterations + 1):
        meter.start()
        policy = PolicyParams.for_mdp(mdp, theta)
        rollouts1 = sample_rollouts(mdp, policy, N, rng, counter)
        rollouts0 = sample_rollouts(mdp, policy, N, rng, counter)
        labels = panel_vote_fractions(panel, rollouts1.returns - rollouts0.returns, rng)
        counter.panel_queries += N
        count_diff = (state_action_counts(rollouts1, *shape)
                      - state_action_counts(rollouts0, *shape))

        logits = theta.reshape(shape).copy()
        for epoch in range(config.sgd_epochs):
            losses[t - 1, epoch], grad = dpo_loss_and_grad(logits, reference_log_probs,
                                                           count_diff, labels, config.kl_weight)
            logits = logits - lr * grad
        theta = logits.ravel()
        check_divergence(theta, t, algorithm)
        meter.finish(t)
        thetas[t] = theta
        if online:
            reference_log_probs = log_softmax(logits, axis=1)

    rates = np.full(config.iterations, lr)
    selected = select_output_index(rates, rng)
    values = evaluate_trace(mdp, thetas, value_oracle, config.eval_every)
    logger.info("%s: T=%d N=%d final loss %.6f", algorithm, config.iterations, N, losses[-1, -1])
    return ParameterTrace(
        algorithm=algorithm, thetas=thetas, values=values, learning_rates=rates,
        vote_tallies=np.full(config.iterations, np.nan), selected_index=selected,
        trajectories_sampled=counter.trajectories, panel_queries=counter.panel_queries,
        diagnostics={'losses': losses},
    )
