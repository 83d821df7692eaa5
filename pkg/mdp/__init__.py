"""
MDP package for the ZSPO Toolkit

Provides the episodic tabular MDP, softmax policies, trajectory sampling,
exact and Monte-Carlo value oracles, the stochastic GridWorld testbed, and
YAML serialization.
"""

from .tabular import (
    TabularMdp,
    PolicyParams,
    Trajectory,
    Rollouts,
    SampleCounter,
    softmax_action_probs,
    policy_matrix,
    sample_rollouts,
    sample_trajectory,
    exact_value,
    monte_carlo_value,
    exact_value_gradient,
    optimal_value,
    return_bounds,
    normalize_rewards,
    step_indexed,
)
from .gridworld import GridWorldSpec, make_gridworld, make_gridworld_spec, cell_to_state, state_to_cell
from .serialization import save_mdp, load_mdp, save_gridworld_spec, load_gridworld_spec

__all__ = [
    'TabularMdp', 'PolicyParams', 'Trajectory', 'Rollouts', 'SampleCounter',
    'softmax_action_probs', 'policy_matrix', 'sample_rollouts', 'sample_trajectory',
    'exact_value', 'monte_carlo_value', 'exact_value_gradient', 'optimal_value',
    'return_bounds', 'normalize_rewards', 'step_indexed',
    'GridWorldSpec', 'make_gridworld', 'make_gridworld_spec', 'cell_to_state', 'state_to_cell',
    'save_mdp', 'load_mdp', 'save_gridworld_spec', 'load_gridworld_spec',
]
