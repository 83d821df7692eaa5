"""
Reports package for the ZSPO Toolkit

Distinguishability analysis of batched preferences.
"""

from .distinguishability import (
    DistinguishabilityReport,
    SWEEP_COLUMNS,
    append_to_sweep,
    definition_check,
    epsilon_zero_bound,
    example_expected_deviation,
    expected_deviation,
    preference_probability,
    sign_threshold,
    two_step_example,
)

__all__ = [
    'DistinguishabilityReport', 'SWEEP_COLUMNS', 'append_to_sweep', 'definition_check',
    'epsilon_zero_bound', 'example_expected_deviation', 'expected_deviation',
    'preference_probability', 'sign_threshold', 'two_step_example',
]
