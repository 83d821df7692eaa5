"""
Unit Tests for the Comparison Algorithms

PURPOSE: Test ZPG's link inversion, reward-model fitting, the PPO update,
         DPO's loss and both DPO variants, plus the per-iteration budgets

RUN TESTS:
    python3 -m pytest tests/test_baselines.py -v
"""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from algorithms.common import BaselineConfig, iteration_budget
from algorithms.dpo import dpo_loss_and_grad, dpo_run, state_action_counts
from algorithms.rm_ppo import (
    RewardModel,
    monte_carlo_advantages,
    policy_total_variation,
    ppo_run,
    rm_ppo_run,
    rm_train,
)
from algorithms.zpg import clamp_preference, recover_return_differences, zpg_run, zpg_schedule
from mdp.gridworld import make_gridworld
from mdp.tabular import PolicyParams, SampleCounter, TabularMdp, exact_value, optimal_value, sample_rollouts
from optim.objectives import value_objective
from optim.zo_optim import finite_difference_gradient, run_ascent
from preference.links import LinkFunction, NonInvertibleLinkError
from preference.panel import Panel


def switch_mdp(horizon: int = 3) -> TabularMdp:
    """Two states; action 0 stays, action 1 switches. Rewards (0, 1), start in state 0."""
    transition = np.zeros((2, 2, 2))
    transition[0, 0, 0] = transition[1, 0, 1] = 1.0
    transition[0, 1, 1] = transition[1, 1, 0] = 1.0
    return TabularMdp(transition, [0.0, 1.0], [1.0, 0.0], horizon)


def goal_mdp() -> TabularMdp:
    """Action 1 always leads to the rewarding state 2, action 0 back to state 0. H = 5, best return 4."""
    transition = np.zeros((3, 2, 3))
    transition[:, 0, 0] = 1.0
    transition[:, 1, 2] = 1.0
    return TabularMdp(transition, [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 5)


LOGISTIC_PANEL = Panel(100, LinkFunction('logistic'))


class TestZpg(unittest.TestCase):
    """Link inversion and the ZPG loop."""

    def test_recovers_return_differences(self):
        """Matching links and a large panel recover the gap within 5%."""
        rng = np.random.default_rng(0)
        panel = Panel(10_000, LinkFunction('logistic'))
        recovered = recover_return_differences(LinkFunction('logistic'), panel, np.full(1000, 0.5), 0.001, rng)
        self.assertAlmostEqual(float(recovered.mean()), 0.5, delta=0.025)

    def test_mismatched_link_keeps_the_sign(self):
        rng = np.random.default_rng(1)
        panel = Panel(10_000, LinkFunction('linear', gamma=0.02))
        up = recover_return_differences(LinkFunction('logistic'), panel, np.full(200, 5.0), 0.001, rng)
        down = recover_return_differences(LinkFunction('logistic'), panel, np.full(200, -5.0), 0.001, rng)
        self.assertGreater(up.mean(), 0.0)
        self.assertLess(down.mean(), 0.0)

    def test_clamp_keeps_inverse_finite(self):
        clamped = clamp_preference(np.array([0.0, 0.5, 1.0]), 0.01)
        np.testing.assert_allclose(clamped, [0.01, 0.5, 0.99])
        self.assertTrue(np.all(np.isfinite(LinkFunction('logistic').inverse(clamped))))

    def test_step_link_cannot_be_assumed(self):
        config = BaselineConfig('zpg', 2, 4, LOGISTIC_PANEL)
        with self.assertRaises(NonInvertibleLinkError):
            zpg_run(make_gridworld(0), config, assumed_link=LinkFunction('step'),
                    rng=np.random.default_rng(0))

    def test_exact_differences_reduce_to_two_point_ascent(self):
        mdp = make_gridworld(2)
        config = BaselineConfig('zpg', 15, 10, LOGISTIC_PANEL, perturbation=0.05, learning_rate_scale=0.5)
        objective = value_objective(mdp)
        trace = zpg_run(mdp, config, rng=np.random.default_rng(4),
                        difference_oracle=lambda a, b, rng=None: objective(a) - objective(b))
        reference = run_ascent(objective, zpg_schedule(mdp, config), 'zo_sgd',
                               np.zeros(mdp.dimension), np.random.default_rng(4))
        np.testing.assert_allclose(trace.thetas, reference.thetas, rtol=1e-12, atol=1e-12)

    def test_budget(self):
        counter = SampleCounter()
        trace = zpg_run(make_gridworld(0), BaselineConfig('zpg', 3, 8, LOGISTIC_PANEL),
                        rng=np.random.default_rng(0), counter=counter)
        self.assertEqual(trace.trajectories_sampled, 3 * 16)
        self.assertEqual(trace.panel_queries, 3 * 8)


class TestRewardModel(unittest.TestCase):
    """Bradley-Terry reward fitting."""

    def test_learns_the_reward_gap(self):
        """Only r(1) - r(0) is identified; it should come out near the true 1."""
        model = rm_train(switch_mdp(), LOGISTIC_PANEL, num_pairs=100_000, epochs=5,
                         rng=np.random.default_rng(0), learning_rate=0.05)
        gap = model.reward_table[1] - model.reward_table[0]
        self.assertAlmostEqual(gap, 1.0, delta=0.05)

    def test_needs_pairs(self):
        with self.assertRaises(ValueError):
            rm_train(switch_mdp(), LOGISTIC_PANEL, num_pairs=0, rng=np.random.default_rng(0))

    def test_likelihood_ignores_constant_shift(self):
        """Both trajectories visit H states, so count differences sum to zero."""
        model = RewardModel([0.3, -1.2, 2.0])
        count_diff = np.array([[1.0, -2.0, 1.0], [0.0, 3.0, -3.0], [2.0, 0.0, -2.0]])
        fractions = np.array([0.2, 0.7, 0.5])
        self.assertAlmostEqual(model.log_likelihood(count_diff, fractions),
                               model.shifted(5.0).log_likelihood(count_diff, fractions), places=12)

    def test_rejects_non_finite_table(self):
        with self.assertRaises(ValueError):
            RewardModel([0.0, np.inf])


class TestPpo(unittest.TestCase):
    """Advantages and the PPO update."""

    def test_advantages(self):
        advantages = monte_carlo_advantages(np.array([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]]))
        np.testing.assert_allclose(advantages, [[1.0, 1.0], [-1.0, -1.0]])

    def test_reward_shift_leaves_advantages_unchanged(self):
        """Adding a constant to every learned reward cancels against the per-step baseline."""
        mdp = make_gridworld(2)
        model = RewardModel(np.random.default_rng(4).normal(size=mdp.num_states))
        states = sample_rollouts(mdp, PolicyParams.zeros(mdp), 64, np.random.default_rng(1)).states
        np.testing.assert_allclose(monte_carlo_advantages(model.shifted(7.5).trajectory_rewards(states)),
                                   monte_carlo_advantages(model.trajectory_rewards(states)), atol=1e-10)

    def test_constant_reward_leaves_policy_unchanged(self):
        mdp = make_gridworld(3)
        config = BaselineConfig('rm-ppo', 5, 16, LOGISTIC_PANEL)
        trace = ppo_run(mdp, RewardModel(np.ones(mdp.num_states)), config, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(trace.thetas, np.zeros_like(trace.thetas))

    def test_heavy_kl_keeps_policy_close(self):
        mdp = make_gridworld(3)
        config = BaselineConfig('rm-ppo', 20, 32, LOGISTIC_PANEL, kl_weight=1000.0, ppo_learning_rate=5e-4)
        reward_model = RewardModel(mdp.reward)
        trace = ppo_run(mdp, reward_model, config, rng=np.random.default_rng(0))
        self.assertLessEqual(policy_total_variation(mdp, trace.thetas[0], trace.final_theta), 0.05)

    def test_improves_on_true_reward(self):
        mdp = goal_mdp()
        config = BaselineConfig('rm-ppo', 300, 64, LOGISTIC_PANEL, kl_weight=0.01, ppo_learning_rate=0.5)
        trace = ppo_run(mdp, RewardModel(mdp.reward), config, rng=np.random.default_rng(0))
        self.assertAlmostEqual(trace.values[0], 2.0)
        self.assertGreaterEqual(trace.values[-1], 0.9 * optimal_value(mdp))

    def test_reward_model_must_match_mdp(self):
        config = BaselineConfig('rm-ppo', 2, 4, LOGISTIC_PANEL)
        with self.assertRaises(ValueError):
            ppo_run(make_gridworld(0), RewardModel([0.0, 1.0]), config, rng=np.random.default_rng(0))

    def test_rm_ppo_budget(self):
        counter = SampleCounter()
        config = BaselineConfig('rm-ppo', 3, 10, LOGISTIC_PANEL, rm_pairs=50, rm_batch_size=16, sgd_epochs=1)
        trace = rm_ppo_run(make_gridworld(0), config, rng=np.random.default_rng(0), counter=counter)
        self.assertEqual(trace.trajectories_sampled, 2 * 50 + 3 * 10)
        self.assertEqual(trace.panel_queries, 50)
        self.assertEqual(trace.diagnostics['pretraining_budget'], {'trajectories': 100, 'panel_queries': 50})


class TestDpo(unittest.TestCase):
    """DPO loss, gradient and the two variants."""

    def setUp(self):
        rng = np.random.default_rng(12)
        self.logits = rng.normal(size=(4, 3))
        self.reference = np.log(np.full((4, 3), 1.0 / 3.0))
        self.count_diff = rng.integers(-2, 3, size=(6, 4, 3)).astype(float)
        self.labels = rng.random(6)

    def test_neutral_labels_at_reference_have_zero_gradient(self):
        loss, grad = dpo_loss_and_grad(self.reference.copy(), self.reference, self.count_diff,
                                       np.full(6, 0.5), kl_weight=0.5)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)
        self.assertAlmostEqual(loss, np.log(2.0))

    def test_gradient_matches_finite_differences(self):
        def loss_of(flat):
            return dpo_loss_and_grad(flat.reshape(4, 3), self.reference, self.count_diff,
                                     self.labels, kl_weight=0.7)[0]

        _, grad = dpo_loss_and_grad(self.logits, self.reference, self.count_diff, self.labels, kl_weight=0.7)
        numeric = finite_difference_gradient(loss_of, self.logits.ravel(), step=1e-6)
        np.testing.assert_allclose(grad.ravel(), numeric, atol=1e-7)

    def test_state_action_counts(self):
        mdp = make_gridworld(1)
        rollouts = sample_rollouts(mdp, PolicyParams.zeros(mdp), 9, np.random.default_rng(0))
        counts = state_action_counts(rollouts, mdp.num_states, mdp.num_actions)
        self.assertEqual(counts.shape, (9, 25, 4))
        np.testing.assert_array_equal(counts.sum(axis=(1, 2)), np.full(9, mdp.horizon))

    def test_online_and_offline_split_after_first_update(self):
        """Both variants share iteration 1; only the online reference moves afterwards."""
        mdp = make_gridworld(5)
        offline = dpo_run(mdp, BaselineConfig('dpo', 3, 50, LOGISTIC_PANEL, dpo_learning_rate=0.5),
                          rng=np.random.default_rng(9))
        online = dpo_run(mdp, BaselineConfig('online-dpo', 3, 50, LOGISTIC_PANEL, dpo_learning_rate=0.5),
                         rng=np.random.default_rng(9))
        self.assertEqual(offline.algorithm, 'dpo')
        self.assertEqual(online.algorithm, 'online-dpo')
        np.testing.assert_array_equal(offline.thetas[1], online.thetas[1])
        self.assertFalse(np.array_equal(offline.thetas[2], online.thetas[2]))

    def test_inner_epochs_never_increase_the_loss(self):
        mdp = make_gridworld(5)
        for algorithm in ('dpo', 'online-dpo'):
            trace = dpo_run(mdp, BaselineConfig(algorithm, 4, 50, LOGISTIC_PANEL), rng=np.random.default_rng(3))
            losses = trace.diagnostics['losses']
            self.assertEqual(losses.shape, (4, 5))
            self.assertTrue(np.all(np.diff(losses, axis=1) <= 1e-12), algorithm)

    def test_budget(self):
        counter = SampleCounter()
        trace = dpo_run(make_gridworld(0), BaselineConfig('dpo', 4, 6, LOGISTIC_PANEL),
                        rng=np.random.default_rng(0), counter=counter)
        self.assertEqual(trace.trajectories_sampled, 4 * 12)
        self.assertEqual(trace.panel_queries, 4 * 6)


class TestBaselineConfig(unittest.TestCase):

    def test_declared_budgets(self):
        self.assertEqual(iteration_budget('zspo', 200, 3), {'trajectories': 1200, 'panel_queries': 200})
        self.assertEqual(iteration_budget('dpo', 200), {'trajectories': 400, 'panel_queries': 200})
        self.assertEqual(iteration_budget('rm-ppo', 200), {'trajectories': 200, 'panel_queries': 0})
        with self.assertRaises(ValueError):
            iteration_budget('sft', 10)

    def test_validation(self):
        with self.assertRaises(ValueError):
            BaselineConfig('reinforce', 2, 4, LOGISTIC_PANEL)
        with self.assertRaises(ValueError):
            BaselineConfig('dpo', 2, 4, LOGISTIC_PANEL, trim=0.5)
        with self.assertRaises(ValueError):
            BaselineConfig('dpo', 0, 4, LOGISTIC_PANEL)

    def test_exact_value_of_goal_mdp(self):
        mdp = goal_mdp()
        self.assertAlmostEqual(exact_value(mdp, PolicyParams.zeros(mdp)), 2.0)


if __name__ == '__main__':
    unittest.main()
