"""
Built-in Objectives - Test functions for the zero-order optimizers

PURPOSE: Closed-form objectives with known gradients and smoothness
         constants, used by the zo-bench command and the optimizer tests.

    concave_quadratic    f = -c ||theta - center||^2                 L = 2c
    smoothed_piecewise   f = -sum_i huber_delta(theta_i - center_i)   L = 1
    linear_objective     f = <a, theta>                              L = 0
    value_objective      f = V(pi_theta) on a tabular MDP             exact DP

Every objective accepts an optional noise level; noisy draws are added only
when a random stream is passed, so the noise-free value stays available.
"""

from typing import Optional

import numpy as np

from optim.zo_optim import ObjectiveOracle


def _noisy(value: float, noise: float, rng: Optional[np.random.Generator]) -> float:
    if noise > 0 and rng is not None:
        return value + noise * rng.standard_normal()
    return value


def concave_quadratic(dimension: int, center: Optional[np.ndarray] = None,
                      curvature: float = 1.0, noise: float = 0.0) -> ObjectiveOracle:
    """-c ||theta - center||^2; center defaults to the all-ones vector."""
    if curvature <= 0:
        raise ValueError(f"curvature must be > 0, got {curvature}")
    target = np.ones(dimension) if center is None else np.asarray(center, dtype=float)

    def evaluate(theta, rng=None):
        return _noisy(-curvature * float(np.sum((theta - target) ** 2)), noise, rng)

    def gradient(theta):
        return -2.0 * curvature * (np.asarray(theta, dtype=float) - target)

    return ObjectiveOracle(dimension, evaluate, gradient, smoothness=2.0 * curvature,
                           name='quadratic')


def smoothed_piecewise(dimension: int, center: Optional[np.ndarray] = None,
                       delta: float = 1.0, noise: float = 0.0) -> ObjectiveOracle:
    """
    Negative Huber loss around center.

    Quadratic within delta of the center on each coordinate, linear beyond,
    so far from the optimum the gradient has constant magnitude.
    """
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    target = np.ones(dimension) if center is None else np.asarray(center, dtype=float)

    def evaluate(theta, rng=None):
        x = np.abs(theta - target)
        loss = np.where(x <= delta, 0.5 * x ** 2, delta * (x - 0.5 * delta))
        return _noisy(-float(np.sum(loss)), noise, rng)

    def gradient(theta):
        return -np.clip(np.asarray(theta, dtype=float) - target, -delta, delta)

    return ObjectiveOracle(dimension, evaluate, gradient, smoothness=1.0, name='piecewise')


def linear_objective(a: np.ndarray) -> ObjectiveOracle:
    a = np.asarray(a, dtype=float)

    def evaluate(theta, rng=None):
        return float(a @ theta)

    return ObjectiveOracle(a.shape[0], evaluate, lambda theta: a.copy(), smoothness=0.0,
                           name='linear')


def value_objective(mdp) -> ObjectiveOracle:
    """V(pi_theta) of a tabular MDP with its exact policy gradient."""
    from mdp.tabular import PolicyParams, exact_value, exact_value_gradient

    def evaluate(theta, rng=None):
        return exact_value(mdp, PolicyParams.for_mdp(mdp, theta))

    def gradient(theta):
        return exact_value_gradient(mdp, PolicyParams.for_mdp(mdp, theta))

    return ObjectiveOracle(mdp.dimension, evaluate, gradient, name=f"value-{mdp.name}")


BUILTIN_OBJECTIVES = {
    'quadratic': concave_quadratic,
    'piecewise': smoothed_piecewise,
}


def make_objective(name: str, dimension: int, noise: float = 0.0) -> ObjectiveOracle:
    """Look up a built-in objective by its zo-bench name."""
    if name not in BUILTIN_OBJECTIVES:
        raise ValueError(f"Unknown objective '{name}'. Valid: {', '.join(BUILTIN_OBJECTIVES)}")
    return BUILTIN_OBJECTIVES[name](dimension, noise=noise)
