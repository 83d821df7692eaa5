"""
Zeroth-order optimization package for the ZSPO Toolkit
"""

from .zo_optim import (
    DIVERGENCE_NORM,
    METHODS,
    DivergenceError,
    ObjectiveOracle,
    ScheduleConfig,
    AscentTrace,
    zo_sgd_direction,
    zspo_sign_direction,
    zo_sign_sgd_direction,
    exact_sign_oracle,
    check_divergence,
    run_ascent,
    finite_difference_gradient,
)
from .objectives import (
    BUILTIN_OBJECTIVES,
    concave_quadratic,
    smoothed_piecewise,
    linear_objective,
    value_objective,
    make_objective,
)

__all__ = [
    'DIVERGENCE_NORM', 'METHODS', 'DivergenceError', 'ObjectiveOracle', 'ScheduleConfig',
    'AscentTrace', 'zo_sgd_direction', 'zspo_sign_direction', 'zo_sign_sgd_direction',
    'exact_sign_oracle', 'check_divergence', 'run_ascent', 'finite_difference_gradient',
    'BUILTIN_OBJECTIVES', 'concave_quadratic', 'smoothed_piecewise', 'linear_objective',
    'value_objective', 'make_objective',
]
