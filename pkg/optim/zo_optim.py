"""
Zeroth-Order Optimizers - Gradient-free ascent on black-box objectives

PURPOSE: Maximise f(theta) when only function values (or only the sign of a
         difference of values) can be observed.

METHODS:
    zo_sgd         g = (f(theta + mu v) - f(theta)) / mu * v          two-point estimator
    zo_sign_sgd    g = sign(mean of q zo_sgd estimates)               element-wise sign
    zspo_sign      g = sign(f(theta + mu v) - f(theta)) * v           sign of the difference

    v ~ N(0, I_d) in every case. The ascent step is theta <- theta + alpha_t g
    with alpha_t = c * sqrt(H_eff / (d t)), t = 1, 2, ...

R EQUIVALENT: optim() with a custom gradient-free method, or the SPSA
              helpers in the 'optimx' family

RANDOM STREAM CONTRACT: each iteration draws v first, then whatever the
objective or sign oracle draws. The preference-driven trainer in
algorithms.zspo follows the same order, so injecting an exact sign oracle
there reproduces run_ascent(method='zspo_sign') draw for draw.

USAGE:
    objective = concave_quadratic(20)
    schedule = ScheduleConfig(learning_rate_scale=1.0, perturbation=1e-3,
                              horizon_constant=1.0, iterations=5000)
    trace = run_ascent(objective, schedule, 'zspo_sign', np.zeros(20), rng)
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

logger = logging.getLogger(__name__)

# ||theta|| beyond this aborts the run
DIVERGENCE_NORM = 1e12

METHODS = ('zo_sgd', 'zo_sign_sgd', 'zspo_sign')

# compare(theta_prime, theta, rng) -> -1, 0 or +1
SignOracle = Callable[[np.ndarray, np.ndarray, Optional[np.random.Generator]], int]


class DivergenceError(RuntimeError):
    """Raised when the parameter norm passes DIVERGENCE_NORM."""

    def __init__(self, iteration: int, norm: float, method: str = ''):
        self.iteration = iteration
        self.norm = norm
        self.method = method
        label = f"{method} " if method else ''
        super().__init__(
            f"{label}diverged at iteration {iteration}: ||theta|| = {norm:.3e} > {DIVERGENCE_NORM:.0e}"
        )


# ============================================================================
# ORACLES AND SCHEDULES
# ============================================================================

@dataclass(frozen=True)
class ObjectiveOracle:
    """
    PURPOSE: Black-box objective f: R^d -> R

    PARAMETERS:
        dimension: d
        evaluate: evaluate(theta, rng) -> float. With rng=None the oracle must
                  return its noise-free value (used for trace recording).
        gradient: Optional exact gradient, used only by tests and traces
        smoothness: Optional smoothness constant L of f
        name: Label used in CSV traces
    """

    dimension: int
    evaluate: Callable[[np.ndarray, Optional[np.random.Generator]], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smoothness: Optional[float] = None
    name: str = 'objective'

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")

    def __call__(self, theta: np.ndarray, rng: Optional[np.random.Generator] = None) -> float:
        return float(self.evaluate(np.asarray(theta, dtype=float), rng))


@dataclass(frozen=True)
class ScheduleConfig:
    """
    PURPOSE: Step-size and perturbation settings shared by all ascent methods

    learning_rate_scale may be 0, which freezes theta (useful in tests).
    """

    learning_rate_scale: float = 1.0
    perturbation: float = 1e-2
    horizon_constant: float = 1.0
    iterations: int = 100

    def __post_init__(self):
        if self.learning_rate_scale < 0:
            raise ValueError(f"learning_rate_scale must be >= 0, got {self.learning_rate_scale}")
        if self.perturbation <= 0:
            raise ValueError(f"perturbation must be > 0, got {self.perturbation}")
        if self.horizon_constant <= 0:
            raise ValueError(f"horizon_constant must be > 0, got {self.horizon_constant}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")

    def learning_rate(self, t: int, dimension: int) -> float:
        """alpha_t = c * sqrt(H_eff / (d t)) for 1-based t."""
        if t < 1:
            raise ValueError(f"iterations are numbered from 1, got t={t}")
        return self.learning_rate_scale * np.sqrt(self.horizon_constant / (dimension * t))

    def learning_rates(self, dimension: int) -> np.ndarray:
        t = np.arange(1, self.iterations + 1)
        return self.learning_rate_scale * np.sqrt(self.horizon_constant / (dimension * t))


@dataclass
class AscentTrace:
    """
    Output of run_ascent.

    thetas has T + 1 rows (theta_1 .. theta_{T+1}); grad_norms is None when
    the objective has no gradient oracle.
    """

    method: str
    thetas: np.ndarray
    learning_rates: np.ndarray
    f_values: Optional[np.ndarray]
    grad_norms: Optional[np.ndarray]

    @property
    def iterations(self) -> int:
        return self.thetas.shape[0] - 1

    @property
    def final_theta(self) -> np.ndarray:
        return self.thetas[-1]


# ============================================================================
# DIRECTION ESTIMATORS
# ============================================================================

def _check_mu(mu: float) -> None:
    if mu <= 0:
        raise ValueError(f"perturbation mu must be > 0, got {mu}")


def _finite(value: float, where: str) -> float:
    if not np.isfinite(value):
        raise ValueError(f"objective returned a non-finite value at {where}")
    return value


def zo_sgd_direction(oracle: ObjectiveOracle, theta: np.ndarray, mu: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Two-point estimator ((f(theta + mu v) - f(theta)) / mu) v."""
    _check_mu(mu)
    theta = np.asarray(theta, dtype=float)
    v = rng.standard_normal(theta.shape[0])
    f_plus = _finite(oracle(theta + mu * v, rng), 'theta + mu v')
    f_base = _finite(oracle(theta, rng), 'theta')
    return ((f_plus - f_base) / mu) * v


def zspo_sign_direction(compare: SignOracle, theta: np.ndarray, mu: float,
                        rng: np.random.Generator) -> np.ndarray:
    """
    Sign-of-difference estimator compare(theta + mu v, theta) * v.

    A tie (compare returns 0) yields the zero vector.
    """
    _check_mu(mu)
    theta = np.asarray(theta, dtype=float)
    v = rng.standard_normal(theta.shape[0])
    sign = int(compare(theta + mu * v, theta, rng))
    if sign not in (-1, 0, 1):
        raise ValueError(f"sign oracle must return -1, 0 or 1, got {sign}")
    return sign * v


def zo_sign_sgd_direction(oracle: ObjectiveOracle, theta: np.ndarray, mu: float, q: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Element-wise sign of the average of q two-point estimates."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    total = np.zeros(np.asarray(theta).shape[0])
    for _ in range(q):
        total += zo_sgd_direction(oracle, theta, mu, rng)
    return np.sign(total / q)


def exact_sign_oracle(oracle: ObjectiveOracle) -> SignOracle:
    """Sign oracle from exact (noise-free) objective values."""

    def compare(theta_prime: np.ndarray, theta: np.ndarray,
                rng: Optional[np.random.Generator] = None) -> int:
        return int(np.sign(oracle(theta_prime) - oracle(theta)))

    return compare


# ============================================================================
# ASCENT LOOP
# ============================================================================

def check_divergence(theta: np.ndarray, iteration: int, method: str = '') -> None:
    """Raise DivergenceError when ||theta|| exceeds DIVERGENCE_NORM."""
    norm = float(np.linalg.norm(theta))
    if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
        raise DivergenceError(iteration, norm, method)


def run_ascent(objective: Optional[ObjectiveOracle], schedule: ScheduleConfig, method: str,
               theta0: np.ndarray, rng: np.random.Generator,
               sign_oracle: Optional[SignOracle] = None, q: int = 10) -> AscentTrace:
    """
    Iterate one of the three direction estimators.

    PARAMETERS:
        objective: Value oracle. May be None for zspo_sign when sign_oracle is given.
        schedule: Step sizes, perturbation and T
        method: 'zo_sgd', 'zo_sign_sgd' or 'zspo_sign'
        theta0: Starting point theta_1
        rng: numpy Generator driving every draw
        sign_oracle: Comparison oracle for zspo_sign; defaults to the exact
                     sign of objective differences
        q: Perturbations averaged per step by zo_sign_sgd

    RETURNS:
        AscentTrace with the full parameter path, plus noise-free f values and
        gradient norms whenever the objective provides them

    RAISES:
        DivergenceError if ||theta|| > 1e12
    """
    if method not in METHODS:
        raise ValueError(f"Unknown method '{method}'. Valid: {', '.join(METHODS)}")
    if objective is None and (method != 'zspo_sign' or sign_oracle is None):
        raise ValueError(f"method '{method}' needs an objective oracle")

    theta = np.array(theta0, dtype=float)
    dimension = theta.shape[0]
    if objective is not None and objective.dimension != dimension:
        raise ValueError(f"theta0 has dimension {dimension}, objective expects {objective.dimension}")

    compare = sign_oracle if sign_oracle is not None else (
        exact_sign_oracle(objective) if objective is not None else None)
    mu = schedule.perturbation
    rates = schedule.learning_rates(dimension)

    thetas = np.empty((schedule.iterations + 1, dimension))
    thetas[0] = theta
    for t in range(1, schedule.iterations + 1):
        if method == 'zo_sgd':
            direction = zo_sgd_direction(objective, theta, mu, rng)
        elif method == 'zo_sign_sgd':
            direction = zo_sign_sgd_direction(objective, theta, mu, q, rng)
        else:
            direction = zspo_sign_direction(compare, theta, mu, rng)
        theta = theta + rates[t - 1] * direction
        check_divergence(theta, t, method)
        thetas[t] = theta

    f_values = grad_norms = None
    if objective is not None:
        f_values = np.array([objective(th) for th in thetas])
        if objective.gradient is not None:
            grad_norms = np.array([np.linalg.norm(objective.gradient(th)) for th in thetas])

    logger.debug("%s: %d iterations, final ||theta|| = %.4g",
                 method, schedule.iterations, np.linalg.norm(theta))
    return AscentTrace(method=method, thetas=thetas, learning_rates=rates,
                       f_values=f_values, grad_norms=grad_norms)


# ============================================================================
# FINITE DIFFERENCES
# ============================================================================

def finite_difference_gradient(oracle: Callable[[np.ndarray], float], theta: np.ndarray,
                               step: float = 1e-5) -> np.ndarray:
    """Central differences (f(theta + h e_i) - f(theta - h e_i)) / 2h per coordinate."""
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.shape[0]):
        offset = np.zeros_like(theta)
        offset[i] = step
        grad[i] = (oracle(theta + offset) - oracle(theta - offset)) / (2.0 * step)
    return grad
