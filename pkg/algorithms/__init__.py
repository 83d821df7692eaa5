"""
Training algorithms for the ZSPO Toolkit

    zspo          majority-vote sign ascent (the main method)
    zpg           zeroth-order policy gradient through an assumed inverse link
    rm-ppo        Bradley-Terry reward model followed by tabular PPO
    dpo           direct preference optimization against the initial policy
    online-dpo    DPO with the reference reset after every update
"""

from .common import (
    BASELINE_ALGORITHMS,
    BaselineConfig,
    BudgetError,
    BudgetMeter,
    ParameterTrace,
    evaluate_trace,
    iteration_budget,
    select_output_index,
)
from .zspo import (
    ZspoConfig,
    collect_votes,
    corollary_perturbation,
    estimate_ascent_direction,
    majority_sign,
    perturb,
    zspo_run,
)
from .zpg import clamp_preference, recover_return_differences, zpg_run
from .rm_ppo import RewardModel, monte_carlo_advantages, ppo_run, rm_ppo_run, rm_train
from .dpo import dpo_loss_and_grad, dpo_run

ALGORITHM_TAGS = ('zspo',) + BASELINE_ALGORITHMS

__all__ = [
    'ALGORITHM_TAGS', 'BASELINE_ALGORITHMS', 'BaselineConfig', 'BudgetError', 'BudgetMeter',
    'ParameterTrace', 'evaluate_trace', 'iteration_budget', 'select_output_index',
    'ZspoConfig', 'collect_votes', 'corollary_perturbation', 'estimate_ascent_direction',
    'majority_sign', 'perturb', 'zspo_run',
    'clamp_preference', 'recover_return_differences', 'zpg_run',
    'RewardModel', 'monte_carlo_advantages', 'ppo_run', 'rm_ppo_run', 'rm_train',
    'dpo_loss_and_grad', 'dpo_run',
]
