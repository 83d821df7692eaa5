"""
RM + PPO Baseline - Learn a reward model, then run tabular PPO on it

PURPOSE: The classic RLHF pipeline on a tabular policy.

STAGE 1 - rm_train:
    Collect pairs from the initial policy, let the whole panel vote on each
    pair, and fit a per-state reward table by minimising the Bradley-Terry
    (logistic) negative log-likelihood of the vote fractions:

        p_i = expit(<c1_i - c0_i, r>)     c = state visit counts of a trajectory
        loss = -mean(y_i log p_i + (1 - y_i) log(1 - p_i)),  y_i = k_i / K

    The logistic model is fixed whatever link the panel really uses.

STAGE 2 - ppo_run:
    Each iteration samples N trajectories scored by the learned rewards.
    The advantage of action a_h is the learned return-to-go from step h + 1
    minus its batch mean at that step. Five full-batch gradient-ascent epochs
    maximise the clipped surrogate minus beta * KL(pi_theta || pi_initial).

    Learned rewards are identified only up to an additive constant; the
    per-step baseline removes that constant from every advantage.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, log_softmax, softmax

from algorithms.common import (
    BaselineConfig,
    BudgetMeter,
    ParameterTrace,
    ValueOracle,
    evaluate_trace,
    initial_theta,
    select_output_index,
)
from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value, sample_rollouts
from optim.zo_optim import check_divergence
from preference.panel import Panel, panel_vote_fractions

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RewardModel:
    """Tabular reward model: one learned reward per state."""

    reward_table: np.ndarray

    def __post_init__(self):
        table = np.array(self.reward_table, dtype=float).ravel()
        if not np.all(np.isfinite(table)):
            raise ValueError("reward_table entries must be finite")
        table.setflags(write=False)
        object.__setattr__(self, 'reward_table', table)

    @property
    def num_states(self) -> int:
        return self.reward_table.shape[0]

    def shifted(self, constant: float) -> 'RewardModel':
        return RewardModel(self.reward_table + constant)

    def trajectory_rewards(self, states: np.ndarray) -> np.ndarray:
        """Learned per-step rewards for an (n, H) block of visited states."""
        return self.reward_table[states]

    def log_likelihood(self, count_diff: np.ndarray, fractions: np.ndarray) -> float:
        """Mean Bradley-Terry log-likelihood of vote fractions given count differences."""
        z = count_diff @ self.reward_table
        return float(-np.mean(fractions * np.logaddexp(0.0, -z) + (1.0 - fractions) * np.logaddexp(0.0, z)))


# =============================================================================
# REWARD MODEL TRAINING
# =============================================================================

def rm_train(mdp: TabularMdp, panel: Panel, num_pairs: int = 500_000, epochs: int = 5,
             rng: Optional[np.random.Generator] = None, learning_rate: float = 0.05,
             batch_size: int = 256, policy: Optional[PolicyParams] = None,
             counter: Optional[SampleCounter] = None) -> RewardModel:
    """
    Fit a RewardModel to panel vote fractions.

    PARAMETERS:
        num_pairs: Trajectory pairs collected from `policy` (uniform when None)
        epochs: Passes of minibatch SGD over the pairs
        learning_rate / batch_size: SGD settings

    RAISES:
        ValueError when num_pairs < 1
    """
    if num_pairs < 1:
        raise ValueError(f"rm_train needs at least one pair, got {num_pairs}")
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    policy = PolicyParams.zeros(mdp) if policy is None else policy

    rollouts1 = sample_rollouts(mdp, policy, num_pairs, rng, counter)
    rollouts0 = sample_rollouts(mdp, policy, num_pairs, rng, counter)
    fractions = panel_vote_fractions(panel, rollouts1.returns - rollouts0.returns, rng)
    if counter is not None:
        counter.panel_queries += num_pairs
    count_diff = (rollouts1.state_counts(mdp.num_states)
                  - rollouts0.state_counts(mdp.num_states)).astype(float)

    reward = np.zeros(mdp.num_states)
    for epoch in range(epochs):
        order = rng.permutation(num_pairs)
        for start in range(0, num_pairs, batch_size):
            batch = order[start:start + batch_size]
            x = count_diff[batch]
            residual = expit(x @ reward) - fractions[batch]
            reward -= learning_rate * (residual @ x) / batch.size
        logger.debug("rm_train epoch %d: log-likelihood %.6f", epoch + 1,
                     RewardModel(reward).log_likelihood(count_diff, fractions))

    model = RewardModel(reward)
    logger.info("rm_train: %d pairs, %d epochs, log-likelihood %.6f",
                num_pairs, epochs, model.log_likelihood(count_diff, fractions))
    return model


# =============================================================================
# PPO
# =============================================================================

def monte_carlo_advantages(step_rewards: np.ndarray) -> np.ndarray:
    """
    Advantages (n, H - 1) of the first H - 1 actions.

    Action a_h decides s_{h+1}, so its return is the reward collected from
    step h + 1 on; the batch mean at each step is the baseline.
    """
    to_go = np.cumsum(step_rewards[:, ::-1], axis=1)[:, ::-1]
    future = to_go[:, 1:]
    return future - future.mean(axis=0, keepdims=True)


def kl_to_reference(logits: np.ndarray, reference_log_probs: np.ndarray) -> np.ndarray:
    """Per-state KL(pi_theta(.|s) || pi_ref(.|s))."""
    log_pi = log_softmax(logits, axis=1)
    return np.sum(np.exp(log_pi) * (log_pi - reference_log_probs), axis=1)


def ppo_objective_and_grad(logits: np.ndarray, old_log_probs: np.ndarray,
                           reference_log_probs: np.ndarray, states: np.ndarray,
                           actions: np.ndarray, advantages: np.ndarray,
                           clip: float, kl_weight: float):
    """
    Clipped surrogate minus beta * KL and its analytic gradient.

    PARAMETERS:
        logits: (S, A) current logits
        old_log_probs: (S, A) log pi of the sampling policy
        reference_log_probs: (S, A) log pi_ref
        states, actions: (n, H) sampled trajectories
        advantages: (n, H - 1) advantages of the first H - 1 actions

    RETURNS:
        (objective, gradient (S, A))
    """
    num_states, num_actions = logits.shape
    log_pi = log_softmax(logits, axis=1)
    pi = np.exp(log_pi)

    s = states[:, :-1].ravel()
    a = actions[:, :-1].ravel()
    adv = advantages.ravel()
    grad = np.zeros((num_states, num_actions))

    surrogate = 0.0
    if adv.size:
        ratio = np.exp(log_pi[s, a] - old_log_probs[s, a])
        clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip)
        surrogate = float(np.mean(np.minimum(ratio * adv, clipped * adv)))
        # the min picks the clipped branch only when it is flat in theta
        active = ~(((adv > 0) & (ratio > 1.0 + clip)) | ((adv < 0) & (ratio < 1.0 - clip)))
        weight = np.where(active, ratio * adv, 0.0) / adv.size
        np.add.at(grad, (s, a), weight)
        np.add.at(grad, s, -weight[:, None] * pi[s])

    visited = states.ravel()
    kl_states = np.sum(pi * (log_pi - reference_log_probs), axis=1)
    kl = float(np.mean(kl_states[visited]))
    visit_weight = np.bincount(visited, minlength=num_states) / visited.size
    kl_grad = pi * (log_pi - reference_log_probs - kl_states[:, None])
    grad -= kl_weight * visit_weight[:, None] * kl_grad

    return surrogate - kl_weight * kl, grad


def ppo_run(mdp: TabularMdp, reward_model: RewardModel, config: BaselineConfig,
            theta1: Optional[np.ndarray] = None, rng: Optional[np.random.Generator] = None,
            value_oracle: ValueOracle = exact_value,
            counter: Optional[SampleCounter] = None,
            reference_theta: Optional[np.ndarray] = None) -> ParameterTrace:
    """
    Run T iterations of PPO against a learned reward.

    The KL anchor is theta1 unless reference_theta is given.
    """
    if reward_model.num_states != mdp.num_states:
        raise ValueError(f"reward model has {reward_model.num_states} states, MDP has {mdp.num_states}")
    rng = np.random.default_rng() if rng is None else rng
    counter = SampleCounter() if counter is None else counter
    theta = initial_theta(mdp, theta1)
    shape = (mdp.num_states, mdp.num_actions)
    anchor = theta if reference_theta is None else initial_theta(mdp, reference_theta)
    reference_log_probs = log_softmax(anchor.reshape(shape), axis=1)
    N = config.pairs_per_iteration
    lr = config.ppo_learning_rate

    budget = config.budget() if config.algorithm == 'rm-ppo' else {'trajectories': N, 'panel_queries': 0}
    meter = BudgetMeter(counter, budget['trajectories'], budget['panel_queries'], 'ppo')

    thetas = np.empty((config.iterations + 1, mdp.dimension))
    thetas[0] = theta
    objectives = np.empty(config.iterations)
    for t in range(1, config.iterations + 1):
        meter.start()
        rollouts = sample_rollouts(mdp, PolicyParams.for_mdp(mdp, theta), N, rng, counter)
        advantages = monte_carlo_advantages(reward_model.trajectory_rewards(rollouts.states))
        logits = theta.reshape(shape).copy()
        old_log_probs = log_softmax(logits, axis=1)
        for _ in range(config.sgd_epochs):
            objective, grad = ppo_objective_and_grad(logits, old_log_probs, reference_log_probs,
                                                     rollouts.states, rollouts.actions, advantages,
                                                     config.ppo_clip, config.kl_weight)
            logits = logits + lr * grad
        objectives[t - 1] = objective
        theta = logits.ravel()
        check_divergence(theta, t, 'rm-ppo')
        meter.finish(t)
        thetas[t] = theta

    rates = np.full(config.iterations, lr)
    selected = select_output_index(rates, rng)
    values = evaluate_trace(mdp, thetas, value_oracle, config.eval_every)
    return ParameterTrace(
        algorithm='rm-ppo', thetas=thetas, values=values, learning_rates=rates,
        vote_tallies=np.full(config.iterations, np.nan), selected_index=selected,
        trajectories_sampled=counter.trajectories, panel_queries=counter.panel_queries,
        diagnostics={'surrogate_objective': objectives, 'reward_table': reward_model.reward_table.copy()},
    )


def policy_total_variation(mdp: TabularMdp, theta_a: np.ndarray, theta_b: np.ndarray) -> float:
    """Largest per-state total-variation distance between two softmax policies."""
    shape = (mdp.num_states, mdp.num_actions)
    pi_a = softmax(np.reshape(theta_a, shape), axis=1)
    pi_b = softmax(np.reshape(theta_b, shape), axis=1)
    return float(np.max(0.5 * np.abs(pi_a - pi_b).sum(axis=1)))


def rm_ppo_run(mdp: TabularMdp, config: BaselineConfig, theta1: Optional[np.ndarray] = None,
               rng: Optional[np.random.Generator] = None, value_oracle: ValueOracle = exact_value,
               counter: Optional[SampleCounter] = None) -> ParameterTrace:
    """Reward-model pretraining from the initial policy, then PPO."""
    rng = np.random.default_rng() if rng is None else rng
    counter = SampleCounter() if counter is None else counter
    theta = initial_theta(mdp, theta1)
    model = rm_train(mdp, config.panel, config.rm_pairs, config.sgd_epochs, rng,
                     learning_rate=config.rm_learning_rate, batch_size=config.rm_batch_size,
                     policy=PolicyParams.for_mdp(mdp, theta), counter=counter)
    pretraining = {'trajectories': counter.trajectories, 'panel_queries': counter.panel_queries}
    trace = ppo_run(mdp, model, config, theta, rng, value_oracle, counter)
    trace.diagnostics['pretraining_budget'] = pretraining
    return trace
