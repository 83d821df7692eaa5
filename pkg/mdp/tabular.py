"""
Tabular MDP Core - Episodic MDPs, softmax policies and value oracles

PURPOSE: Hold a finite episodic MDP, turn policy parameters into action
         probabilities, sample trajectories, and compute exact values and
         exact policy gradients by dynamic programming

R EQUIVALENT: Like a small S4 class wrapping a transition array plus a
              handful of matrix-algebra helpers (think markovchain + expm)

AVIATION ANALOGY: The simulator cab - every training algorithm flies the
                  same aircraft model, and the exact-value oracle is the
                  flight data recorder that grades each sortie

CONVENTIONS:
    - States and actions are 0-based integer indices.
    - A trajectory visits H states s_1..s_H and takes H actions; its return
      is the sum of the per-state rewards of the visited states.
    - Policies are stationary. PolicyParams holds one logit per (s, a) pair,
      laid out state-major so theta.reshape(S, A) gives the logit table.

AUTHOR: Preference RL Lab
DATE: 2026
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union, List

import numpy as np
from scipy.special import softmax

logger = logging.getLogger(__name__)

# Rows of every probability table must sum to one within this tolerance
ROW_SUM_TOLERANCE = 1e-9


def _frozen_array(values, dtype=float) -> np.ndarray:
    """Copy values into a read-only numpy array."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ============================================================================
# DOMAIN TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    PURPOSE: Finite episodic MDP with per-state rewards

    PARAMETERS:
        transition: Array (S, A, S) - transition[s, a] is the next-state distribution
        reward: Array (S,) - reward collected when a state is visited
        initial_dist: Array (S,) - distribution of the first state
        horizon: Steps per episode (H >= 1)
        seed: Generator seed when the MDP came from a generator (None otherwise)
        name: Label used in manifests and logs

    All arrays are copied and frozen on construction, so an MDP can be
    shared freely between samplers and worker processes.
    """

    transition: np.ndarray
    reward: np.ndarray
    initial_dist: np.ndarray
    horizon: int
    seed: Optional[int] = None
    name: str = "tabular"

    def __post_init__(self):
        transition = _frozen_array(self.transition)
        reward = _frozen_array(self.reward)
        initial_dist = _frozen_array(self.initial_dist)

        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ValueError(f"transition must have shape (S, A, S), got {transition.shape}")
        num_states, num_actions, _ = transition.shape
        if num_states < 1 or num_actions < 1:
            raise ValueError("MDP needs at least one state and one action")
        if reward.shape != (num_states,):
            raise ValueError(f"reward must have shape ({num_states},), got {reward.shape}")
        if initial_dist.shape != (num_states,):
            raise ValueError(f"initial_dist must have shape ({num_states},), got {initial_dist.shape}")
        if not np.all(np.isfinite(reward)):
            raise ValueError("reward entries must be finite")
        if np.any(transition < 0) or np.any(initial_dist < 0):
            raise ValueError("probabilities must be non-negative")

        row_error = np.max(np.abs(transition.sum(axis=2) - 1.0))
        if row_error > ROW_SUM_TOLERANCE:
            raise ValueError(f"transition rows must sum to 1 (max error {row_error:.3e})")
        if abs(initial_dist.sum() - 1.0) > ROW_SUM_TOLERANCE:
            raise ValueError("initial_dist must sum to 1")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.horizon}")

        object.__setattr__(self, 'transition', transition)
        object.__setattr__(self, 'reward', reward)
        object.__setattr__(self, 'initial_dist', initial_dist)
        object.__setattr__(self, 'horizon', int(self.horizon))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def dimension(self) -> int:
        """Number of softmax logits d = S * A."""
        return self.num_states * self.num_actions

    def __eq__(self, other) -> bool:
        if not isinstance(other, TabularMdp):
            return NotImplemented
        return (self.horizon == other.horizon
                and np.array_equal(self.transition, other.transition)
                and np.array_equal(self.reward, other.reward)
                and np.array_equal(self.initial_dist, other.initial_dist))

    def with_reward(self, reward) -> 'TabularMdp':
        """Same dynamics, different per-state reward."""
        return TabularMdp(self.transition, reward, self.initial_dist,
                          self.horizon, seed=self.seed, name=self.name)


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """
    PURPOSE: Flat logit vector for a tabular softmax policy

    pi(a|s) = exp(xi[s, a]) / sum_a' exp(xi[s, a'])

    EXAMPLE:
        params = PolicyParams.zeros(mdp)        # uniform policy
        params = PolicyParams.for_mdp(mdp, theta)
    """

    theta: np.ndarray
    num_states: int
    num_actions: int

    def __post_init__(self):
        theta = _frozen_array(np.ravel(self.theta))
        if theta.size != self.num_states * self.num_actions:
            raise ValueError(
                f"theta has {theta.size} entries, expected "
                f"{self.num_states} x {self.num_actions} = {self.num_states * self.num_actions}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta entries must be finite")
        object.__setattr__(self, 'theta', theta)

    @classmethod
    def for_mdp(cls, mdp: TabularMdp, theta) -> 'PolicyParams':
        return cls(theta, mdp.num_states, mdp.num_actions)

    @classmethod
    def zeros(cls, mdp: TabularMdp) -> 'PolicyParams':
        return cls(np.zeros(mdp.dimension), mdp.num_states, mdp.num_actions)

    @property
    def dimension(self) -> int:
        return self.theta.size

    @property
    def logits(self) -> np.ndarray:
        return self.theta.reshape(self.num_states, self.num_actions)


@dataclass(frozen=True)
class Trajectory:
    """
    PURPOSE: One H-step episode and its return r(tau)

    steps holds exactly H (state, action) pairs in visiting order.
    """

    steps: Tuple[Tuple[int, int], ...]
    return_value: float

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @property
    def states(self) -> List[int]:
        return [s for s, _ in self.steps]

    @property
    def actions(self) -> List[int]:
        return [a for _, a in self.steps]

    def check_against(self, mdp: TabularMdp) -> None:
        """Raise ValueError unless the trajectory is consistent with mdp."""
        if self.horizon != mdp.horizon:
            raise ValueError(f"trajectory has {self.horizon} steps, MDP horizon is {mdp.horizon}")
        expected = float(np.sum(mdp.reward[self.states]))
        if not np.isclose(expected, self.return_value, rtol=1e-12, atol=1e-12):
            raise ValueError(f"return {self.return_value} does not match rewards ({expected})")


@dataclass(frozen=True, eq=False)
class Rollouts:
    """
    PURPOSE: A block of n sampled trajectories stored column-wise

    states, actions: int arrays (n, H); returns: float array (n,)
    """

    states: np.ndarray
    actions: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return self.returns.shape[0]

    def trajectory(self, index: int) -> Trajectory:
        steps = tuple(zip(self.states[index].tolist(), self.actions[index].tolist()))
        return Trajectory(steps=steps, return_value=float(self.returns[index]))

    def to_trajectories(self) -> List[Trajectory]:
        return [self.trajectory(i) for i in range(len(self))]

    def state_counts(self, num_states: int) -> np.ndarray:
        """Visit counts (n, S) of each state per trajectory."""
        counts = np.zeros((len(self), num_states), dtype=np.int32)
        rows = np.arange(len(self))
        for h in range(self.states.shape[1]):
            np.add.at(counts, (rows, self.states[:, h]), 1)
        return counts


@dataclass
class SampleCounter:
    """
    Running totals of sampled trajectories and panel queries.

    Algorithms thread one counter through every sampling call so the
    harness can check the declared per-iteration budget.
    """

    trajectories: int = 0
    panel_queries: int = 0

    def reset(self) -> None:
        self.trajectories = 0
        self.panel_queries = 0


Policy = Union[PolicyParams, np.ndarray]


# ============================================================================
# POLICIES
# ============================================================================

def softmax_action_probs(params: PolicyParams, state: int) -> np.ndarray:
    """
    Action distribution of the softmax policy at one state.

    softmax subtracts the row maximum before exponentiating, so large
    logits never overflow.
    """
    if not 0 <= state < params.num_states:
        raise ValueError(f"state {state} out of range [0, {params.num_states})")
    return softmax(params.logits[state])


def policy_matrix(policy: Policy, mdp: TabularMdp) -> np.ndarray:
    """
    Turn a policy into its (S, A) probability table.

    Accepts PolicyParams (softmax) or a raw row-stochastic matrix, which is
    how fixed example policies are expressed.
    """
    if isinstance(policy, PolicyParams):
        if (policy.num_states, policy.num_actions) != (mdp.num_states, mdp.num_actions):
            raise ValueError(
                f"policy is {policy.num_states}x{policy.num_actions}, "
                f"MDP is {mdp.num_states}x{mdp.num_actions}"
            )
        return softmax(policy.logits, axis=1)

    matrix = np.asarray(policy, dtype=float)
    if matrix.shape != (mdp.num_states, mdp.num_actions):
        raise ValueError(f"raw policy must have shape {(mdp.num_states, mdp.num_actions)}, got {matrix.shape}")
    if np.any(matrix < 0) or np.max(np.abs(matrix.sum(axis=1) - 1.0)) > ROW_SUM_TOLERANCE:
        raise ValueError("raw policy rows must be probability vectors")
    return matrix


def _policy_transition(pi: np.ndarray, mdp: TabularMdp) -> np.ndarray:
    """State-to-state transition matrix (S, S) under policy table pi."""
    return np.einsum('sa,sat->st', pi, mdp.transition)


# ============================================================================
# SAMPLING
# ============================================================================

def _inverse_cdf(cdf_rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Index of the first cdf entry above each uniform draw (row-wise)."""
    index = (cdf_rows <= uniforms[:, None]).sum(axis=1)
    return np.minimum(index, cdf_rows.shape[1] - 1)


def sample_rollouts(mdp: TabularMdp, policy: Policy, n: int,
                    rng: np.random.Generator,
                    counter: Optional[SampleCounter] = None) -> Rollouts:
    """
    Sample n independent trajectories at once.

    PURPOSE: The workhorse sampler - every algorithm draws its batches here

    PARAMETERS:
        mdp: The environment
        policy: PolicyParams or raw (S, A) matrix
        n: Number of trajectories (>= 1)
        rng: numpy Generator; all randomness comes from it
        counter: Optional SampleCounter incremented by n

    RETURNS:
        Rollouts with states/actions (n, H) and returns (n,)
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")

    pi_cdf = np.cumsum(policy_matrix(policy, mdp), axis=1)
    transition_cdf = np.cumsum(mdp.transition, axis=2)
    horizon = mdp.horizon

    states = np.empty((n, horizon), dtype=np.int64)
    actions = np.empty((n, horizon), dtype=np.int64)

    current = _inverse_cdf(np.broadcast_to(np.cumsum(mdp.initial_dist), (n, mdp.num_states)),
                           rng.random(n))
    for h in range(horizon):
        states[:, h] = current
        actions[:, h] = _inverse_cdf(pi_cdf[current], rng.random(n))
        if h + 1 < horizon:
            current = _inverse_cdf(transition_cdf[current, actions[:, h]], rng.random(n))

    returns = mdp.reward[states].sum(axis=1)

    if counter is not None:
        counter.trajectories += n
    return Rollouts(states=states, actions=actions, returns=returns)


def sample_trajectory(mdp: TabularMdp, params: Policy,
                      rng: np.random.Generator) -> Trajectory:
    """Sample a single trajectory (s_1 ~ mu_0, a_h ~ pi, s_{h+1} ~ P)."""
    return sample_rollouts(mdp, params, 1, rng).trajectory(0)


# ============================================================================
# VALUE ORACLES
# ============================================================================

def exact_value(mdp: TabularMdp, policy: Policy) -> float:
    """
    Exact V(pi) = E[r(tau)] by backward dynamic programming.

    Cost O(H * S^2 * A): one contraction to build the state-to-state matrix,
    then H - 1 matrix-vector products.
    """
    p_pi = _policy_transition(policy_matrix(policy, mdp), mdp)
    values = mdp.reward.copy()
    for _ in range(mdp.horizon - 1):
        values = mdp.reward + p_pi @ values
    return float(mdp.initial_dist @ values)


def monte_carlo_value(mdp: TabularMdp, policy: Policy, n: int,
                      rng: np.random.Generator) -> Tuple[float, float]:
    """
    Sample mean and standard error of n trajectory returns.

    RETURNS:
        (mean, std_error) with the (n - 1) divisor for the sample std
    """
    if n < 2:
        raise ValueError(f"monte_carlo_value needs n >= 2, got {n}")
    returns = sample_rollouts(mdp, policy, n, rng).returns
    return float(returns.mean()), float(returns.std(ddof=1) / np.sqrt(n))


def exact_value_gradient(mdp: TabularMdp, params: PolicyParams) -> np.ndarray:
    """
    Exact gradient of V(pi_theta) with respect to the softmax logits.

    PURPOSE: Oracle for convergence checks (gradient norm of the output iterate)

    METHOD:
        grad[s, b] = sum_h d_h(s) * pi(b|s) * (Q_h(s, b) - sum_a pi(a|s) Q_h(s, a))
        where d_h is the step-h state occupancy and Q_h(s, a) the expected
        reward-to-go after taking a at s on step h.

    RETURNS:
        Flat vector in the same layout as params.theta
    """
    if not isinstance(params, PolicyParams):
        raise ValueError("exact_value_gradient needs softmax PolicyParams")
    pi = policy_matrix(params, mdp)
    p_pi = _policy_transition(pi, mdp)
    horizon = mdp.horizon

    occupancy = np.empty((horizon, mdp.num_states))
    occupancy[0] = mdp.initial_dist
    for h in range(1, horizon):
        occupancy[h] = occupancy[h - 1] @ p_pi

    values = np.empty((horizon, mdp.num_states))
    values[horizon - 1] = mdp.reward
    for h in range(horizon - 2, -1, -1):
        values[h] = mdp.reward + p_pi @ values[h + 1]

    grad = np.zeros((mdp.num_states, mdp.num_actions))
    for h in range(horizon - 1):
        q = mdp.transition @ values[h + 1]
        baseline = (pi * q).sum(axis=1, keepdims=True)
        grad += occupancy[h][:, None] * pi * (q - baseline)
    return grad.ravel()


def optimal_value(mdp: TabularMdp) -> float:
    """Finite-horizon optimum by value iteration (max over actions each step)."""
    values = mdp.reward.copy()
    for _ in range(mdp.horizon - 1):
        values = mdp.reward + np.max(mdp.transition @ values, axis=1)
    return float(mdp.initial_dist @ values)


# ============================================================================
# REWARD RANGE UTILITIES
# ============================================================================

def return_bounds(mdp: TabularMdp) -> Tuple[float, float]:
    """
    Smallest and largest return any trajectory can collect.

    Only transitions with positive probability count, and only start
    states in the support of the initial distribution.
    """
    support = mdp.transition > 0
    low = mdp.reward.copy()
    high = mdp.reward.copy()
    for _ in range(mdp.horizon - 1):
        low = mdp.reward + np.where(support, low[None, None, :], np.inf).min(axis=2).min(axis=1)
        high = mdp.reward + np.where(support, high[None, None, :], -np.inf).max(axis=2).max(axis=1)
    starts = mdp.initial_dist > 0
    return float(low[starts].min()), float(high[starts].max())


def normalize_rewards(mdp: TabularMdp) -> TabularMdp:
    """
    Map per-state rewards affinely into [0, 1] so every return lies in [0, H].

    Bounded returns are needed wherever a Hoeffding-type argument applies.
    A constant reward table maps to all zeros.
    """
    low, high = float(mdp.reward.min()), float(mdp.reward.max())
    if high == low:
        return mdp.with_reward(np.zeros(mdp.num_states))
    return mdp.with_reward((mdp.reward - low) / (high - low))


def step_indexed(mdp: TabularMdp) -> TabularMdp:
    """
    Extend the state space with the step index.

    State (s, h) gets index h * S + s. A stationary policy on the result is
    a step-indexed policy on the original. The last layer loops onto
    itself, which never affects returns.
    """
    S, A, H = mdp.num_states, mdp.num_actions, mdp.horizon
    transition = np.zeros((S * H, A, S * H))
    for h in range(H):
        target = min(h + 1, H - 1)
        transition[h * S:(h + 1) * S, :, target * S:(target + 1) * S] = mdp.transition
    initial = np.zeros(S * H)
    initial[:S] = mdp.initial_dist
    return TabularMdp(transition, np.tile(mdp.reward, H), initial, H,
                      seed=mdp.seed, name=f"{mdp.name}-step-indexed")
