"""
Distinguishability Reports - When do batched preferences point the right way?

PURPOSE: Quantify whether panelists comparing D-trajectory batches prefer
         the better of two policies, and by how much.

    expected_deviation     Monte-Carlo E[varsigma(mean_1 - mean_0)] over batch pairs
    definition_check       compares that estimate with 1/2 varsigma(gap / 2)
    epsilon_zero_bound     closed-form upper bound on the distinguishability gap
    two_step_example       5-state, H = 2 MDP where single-trajectory preferences
                           can favour the worse policy
    sign_threshold         smallest epsilon at which they stop doing so

THE TWO-STEP EXAMPLE:
    From s0 three actions lead to
        a1 -> s1 (reward 1)
        a2 -> s2 (reward 2)
        a3 -> s3 (reward 5) w.p. 0.2, s4 (reward 0) w.p. 0.8      ('skewed')
        a3 -> s3 (reward 2) w.p. 0.5, s4 (reward 0) w.p. 0.5      ('balanced')
    pi0 always picks a1 (V = 1); pi1 picks a2 w.p. eps and a3 otherwise
    (V = 1 + eps in both variants). Under the step link the skewed variant
    prefers pi1's trajectory with probability 0.8 eps + 0.2, which is below
    1/2 until eps > 3/8.

USAGE:
    mdp, pi0, pi1 = two_step_example(0.5)
    report = definition_check(mdp, pi0, pi1, LinkFunction('step'), 1, 10_000, rng)
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import bisect

from mdp.tabular import Policy, TabularMdp, exact_value, policy_matrix, sample_rollouts
from preference.links import LinkFunction

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
BISECTION_TOLERANCE = 1e-9
# |f| below this at an end of [0, 1] counts as a root there
ROOT_TOLERANCE = 1e-12

SWEEP_COLUMNS = ['link', 'gamma', 'D', 'gap', 'est', 'se', 'rhs', 'holds']

EXAMPLE_VARIANTS = ('skewed', 'balanced')


@dataclass(frozen=True)
class DistinguishabilityReport:
    """
    PURPOSE: Outcome of one definition_check

    FIELDS:
        value_gap: V(pi1) - V(pi0)
        expected_deviation / std_error: Monte-Carlo estimate of E[varsigma(mean gap)]
        rhs: 1/2 varsigma(value_gap / 2)
        holds: estimate + 3 std_error >= rhs
        sign_consistent: the estimate has the sign of value_gap
    """

    value_gap: float
    expected_deviation: float
    std_error: float
    rhs: float
    holds: bool
    sign_consistent: bool
    link: str
    gamma: float
    batch_size: int
    n_samples: int

    def to_row(self) -> dict:
        """Row in the distinguish sweep CSV layout."""
        return {
            'link': self.link, 'gamma': self.gamma, 'D': self.batch_size,
            'gap': self.value_gap, 'est': self.expected_deviation, 'se': self.std_error,
            'rhs': self.rhs, 'holds': self.holds,
        }

    def to_dict(self) -> dict:
        return asdict(self)


# =============================================================================
# MONTE-CARLO CHECKS
# =============================================================================

def expected_deviation(mdp: TabularMdp, pi0: Policy, pi1: Policy, link: LinkFunction,
                       batch_size: int, n_samples: int,
                       rng: np.random.Generator) -> Tuple[float, float]:
    """
    Monte-Carlo E[varsigma(mean_1 - mean_0)] over n_samples batch pairs.

    Batch 1 comes from pi1 and batch 0 from pi0, D trajectories each.

    RETURNS:
        (estimate, std_error)
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}, got {n_samples}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = n_samples * batch_size
    returns1 = sample_rollouts(mdp, pi1, n, rng).returns.reshape(n_samples, batch_size)
    returns0 = sample_rollouts(mdp, pi0, n, rng).returns.reshape(n_samples, batch_size)
    deviations = np.atleast_1d(link.deviation(returns1.mean(axis=1) - returns0.mean(axis=1)))
    return float(deviations.mean()), float(deviations.std(ddof=1) / np.sqrt(n_samples))


def definition_check(mdp: TabularMdp, pi0: Policy, pi1: Policy, link: LinkFunction,
                     batch_size: int, n_samples: int,
                     rng: np.random.Generator) -> DistinguishabilityReport:
    """
    Check E[varsigma(mean_1 - mean_0)] >= 1/2 varsigma((V(pi1) - V(pi0)) / 2).

    The estimate gets a 3-standard-error margin. Identical policies satisfy
    the inequality with equality, so they always hold.
    """
    gap = exact_value(mdp, pi1) - exact_value(mdp, pi0)
    estimate, std_error = expected_deviation(mdp, pi0, pi1, link, batch_size, n_samples, rng)
    rhs = 0.5 * float(link.deviation(gap / 2.0))

    identical = np.array_equal(policy_matrix(pi0, mdp), policy_matrix(pi1, mdp))
    holds = identical or estimate + 3.0 * std_error >= rhs
    sign_consistent = gap == 0 or np.sign(estimate) == np.sign(gap)

    report = DistinguishabilityReport(
        value_gap=float(gap), expected_deviation=estimate, std_error=std_error, rhs=rhs,
        holds=bool(holds), sign_consistent=bool(sign_consistent), link=link.kind,
        gamma=link.gamma, batch_size=int(batch_size), n_samples=int(n_samples),
    )
    logger.debug("definition_check: gap=%.4g est=%.4g se=%.2g rhs=%.4g holds=%s",
                 gap, estimate, std_error, rhs, report.holds)
    return report


def append_to_sweep(report: DistinguishabilityReport, path: Union[str, Path]) -> str:
    """Append one report row to a sweep CSV, writing the header for a new file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([report.to_row()], columns=SWEEP_COLUMNS)
    frame.to_csv(path, mode='a', header=not path.exists(), index=False)
    return str(path)


# =============================================================================
# CLOSED-FORM BOUND
# =============================================================================

def epsilon_zero_bound(link: LinkFunction, horizon: float, batch_size: int) -> float:
    """
    eps_0 = (4 H / sqrt(D)) * sqrt(2 log(2 / varsigma(H / sqrt(D)))).

    Upper bound on the distinguishability gap for returns in [0, H]; it
    shrinks like H / sqrt(D) up to the log factor.

    RAISES:
        ValueError for links that are not strictly increasing, or when
        varsigma(H / sqrt(D)) is not positive
    """
    if not link.is_strictly_increasing:
        raise ValueError(f"epsilon_zero_bound needs a strictly increasing link, got '{link.kind}'")
    if horizon <= 0 or batch_size < 1:
        raise ValueError(f"need horizon > 0 and batch_size >= 1, got {horizon}, {batch_size}")
    scale = horizon / np.sqrt(batch_size)
    dev = float(link.deviation(scale))
    if dev <= 0:
        raise ValueError(f"varsigma({scale:.4g}) = {dev} is not positive; the link is degenerate")
    return float(4.0 * scale * np.sqrt(2.0 * np.log(2.0 / dev)))


# =============================================================================
# TWO-STEP EXAMPLE
# =============================================================================

def _example_outcomes(epsilon: float, variant: str):
    """
    (probabilities, return gaps) of r(tau1) - r(tau0) for single trajectories.

    tau0 always earns 1; tau1 earns 2 (a2), the good a3 leaf, or 0.
    """
    if variant == 'skewed':
        return np.array([epsilon, 0.2 * (1.0 - epsilon), 0.8 * (1.0 - epsilon)]), np.array([1.0, 4.0, -1.0])
    return np.array([epsilon, 0.5 * (1.0 - epsilon), 0.5 * (1.0 - epsilon)]), np.array([1.0, 1.0, -1.0])


def _check_example_args(epsilon: float, variant: str) -> None:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if variant not in EXAMPLE_VARIANTS:
        raise ValueError(f"Unknown variant '{variant}'. Valid: {', '.join(EXAMPLE_VARIANTS)}")


def two_step_example(epsilon: float,
                     variant: str = 'skewed') -> Tuple[TabularMdp, np.ndarray, np.ndarray]:
    """
    Build the example MDP and its two fixed policies.

    RETURNS:
        (mdp, pi0, pi1) with pi0, pi1 raw (5, 3) policy matrices
    """
    _check_example_args(epsilon, variant)
    num_states, num_actions = 5, 3
    good_leaf, good_probability = (5.0, 0.2) if variant == 'skewed' else (2.0, 0.5)

    transition = np.zeros((num_states, num_actions, num_states))
    transition[0, 0, 1] = 1.0
    transition[0, 1, 2] = 1.0
    transition[0, 2, 3] = good_probability
    transition[0, 2, 4] = 1.0 - good_probability
    for leaf in range(1, num_states):
        transition[leaf, :, leaf] = 1.0

    reward = np.array([0.0, 1.0, 2.0, good_leaf, 0.0])
    initial = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    mdp = TabularMdp(transition, reward, initial, horizon=2, name=f"two-step-{variant}")

    pi0 = np.full((num_states, num_actions), 1.0 / num_actions)
    pi1 = pi0.copy()
    pi0[0] = [1.0, 0.0, 0.0]
    pi1[0] = [0.0, epsilon, 1.0 - epsilon]
    return mdp, pi0, pi1


def preference_probability(link: LinkFunction, epsilon: float, variant: str = 'skewed') -> float:
    """Exact P(tau1 preferred over tau0) by enumerating the three outcomes."""
    _check_example_args(epsilon, variant)
    probs, gaps = _example_outcomes(epsilon, variant)
    return float(probs @ np.atleast_1d(link.evaluate(gaps)))


def example_expected_deviation(link: LinkFunction, epsilon: float, variant: str = 'skewed') -> float:
    """Exact E[varsigma(r(tau1) - r(tau0))] on the example with D = 1."""
    _check_example_args(epsilon, variant)
    probs, gaps = _example_outcomes(epsilon, variant)
    return float(probs @ np.atleast_1d(link.deviation(gaps)))


def sign_threshold(link: LinkFunction, variant: str = 'skewed',
                   xtol: float = BISECTION_TOLERANCE) -> float:
    """
    epsilon at which the exact expected deviation crosses zero.

    Bisection on [0, 1] over the 3-outcome enumeration.

    RAISES:
        ValueError when the expected deviation keeps one sign on [0, 1]
    """
    def f(epsilon: float) -> float:
        return example_expected_deviation(link, epsilon, variant)

    low, high = f(0.0), f(1.0)
    if abs(low) <= ROOT_TOLERANCE:
        return 0.0
    if abs(high) <= ROOT_TOLERANCE:
        return 1.0
    if low * high > 0:
        raise ValueError(
            f"no sign change on [0, 1] for {link.kind} (gamma={link.gamma}): "
            f"f(0)={low:.4g}, f(1)={high:.4g}"
        )
    return float(bisect(f, 0.0, 1.0, xtol=xtol))
