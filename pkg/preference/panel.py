"""
Panels - Simulated panelists and majority-vote preference queries

PURPOSE: Produce the preference bits every algorithm learns from.

    sample_panelist_feedback    one panelist compares two trajectory batches
    panel_vote                  K panelists compare, strict majority wins
    panel_vote_fractions        vectorised k/K fractions for many pairs at once

A panelist prefers batch 1 with probability sigma(mean_1 - mean_0), where
sigma is the panel's link. Panelists are independent given the batches, so
the number of "1" votes among K panelists is Binomial(K, sigma(gap)); the
vectorised paths draw that count directly.

TIE RULE: With an even panel an exact K/2 split returns 0.

USAGE:
    panel = Panel(num_panelists=100, link=LinkFunction('logistic'))
    batch1 = TrajectoryBatch.from_rollouts(sample_rollouts(mdp, theta_prime, D, rng))
    batch0 = TrajectoryBatch.from_rollouts(sample_rollouts(mdp, theta, D, rng))
    vote = panel_vote(panel, batch1, batch0, rng)
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from mdp.tabular import Rollouts, Trajectory
from preference.links import LinkFunction


@dataclass(frozen=True)
class Panel:
    """K panelists sharing one link function."""

    num_panelists: int
    link: LinkFunction

    def __post_init__(self):
        if int(self.num_panelists) != self.num_panelists or self.num_panelists < 1:
            raise ValueError(f"num_panelists must be a positive integer, got {self.num_panelists}")
        object.__setattr__(self, 'num_panelists', int(self.num_panelists))

    def to_dict(self) -> dict:
        return {'kind': self.link.kind, 'gamma': self.link.gamma, 'K': self.num_panelists}

    @classmethod
    def from_dict(cls, data: dict) -> 'Panel':
        """Build from the config layout {kind, gamma, K}."""
        return cls(num_panelists=int(data.get('K', 1)), link=LinkFunction.from_dict(data))


@dataclass(frozen=True)
class TrajectoryBatch:
    """
    PURPOSE: D trajectories judged together by their average return

    mean_return is derived from the members; passing a different value is
    rejected.
    """

    trajectories: Tuple[Trajectory, ...]
    mean_return: float = None

    def __post_init__(self):
        trajectories = tuple(self.trajectories)
        if not trajectories:
            raise ValueError("TrajectoryBatch needs at least one trajectory")
        mean = float(np.mean([t.return_value for t in trajectories]))
        if self.mean_return is not None and not np.isclose(self.mean_return, mean, rtol=1e-12, atol=1e-12):
            raise ValueError(f"mean_return {self.mean_return} does not match member returns ({mean})")
        object.__setattr__(self, 'trajectories', trajectories)
        object.__setattr__(self, 'mean_return', mean)

    def __len__(self) -> int:
        return len(self.trajectories)

    @classmethod
    def from_rollouts(cls, rollouts: Rollouts) -> 'TrajectoryBatch':
        return cls(tuple(rollouts.to_trajectories()))


# =============================================================================
# SINGLE QUERIES
# =============================================================================

def _require_nonempty(*batches: TrajectoryBatch) -> None:
    for batch in batches:
        if batch is None or len(batch) == 0:
            raise ValueError("preference queries need nonempty batches")


def sample_panelist_feedback(link: LinkFunction, batch1: TrajectoryBatch,
                             batch0: TrajectoryBatch, rng: np.random.Generator) -> int:
    """One panelist's bit: 1 with probability sigma(mean(batch1) - mean(batch0))."""
    _require_nonempty(batch1, batch0)
    p = link.evaluate(batch1.mean_return - batch0.mean_return)
    return int(rng.random() < p)


def majority_from_counts(ones, num_panelists: int):
    """
    Strict-majority rule: 1 iff more than K/2 panelists voted 1.

    Works on scalars and arrays of counts.
    """
    result = 2 * np.asarray(ones) > num_panelists
    return result.astype(np.int8) if np.ndim(result) else int(result)


def panel_vote(panel: Panel, batch1: TrajectoryBatch, batch0: TrajectoryBatch,
               rng: np.random.Generator) -> int:
    """Majority vote of the whole panel on one batch pair."""
    _require_nonempty(batch1, batch0)
    p = panel.link.evaluate(batch1.mean_return - batch0.mean_return)
    ones = rng.binomial(panel.num_panelists, p)
    return majority_from_counts(ones, panel.num_panelists)


# =============================================================================
# VECTORISED QUERIES
# =============================================================================

def panel_vote_counts(panel: Panel, gaps: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Number of "1" votes for each return gap (mean_1 - mean_0)."""
    p = np.atleast_1d(panel.link.evaluate(np.asarray(gaps, dtype=float)))
    return rng.binomial(panel.num_panelists, p)


def panel_votes_from_gaps(panel: Panel, gaps: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Majority bits o_n for each gap; same draws as panel_vote_counts."""
    return majority_from_counts(panel_vote_counts(panel, gaps, rng), panel.num_panelists)


def panel_vote_fractions(panel: Panel, gaps: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Fraction k/K of panelists preferring the first member of each pair."""
    return panel_vote_counts(panel, gaps, rng) / panel.num_panelists
