"""
Preference package for the ZSPO Toolkit

Link functions, simulated panelists and majority-vote panels.
"""

from .links import (
    LINK_KINDS,
    LinkFunction,
    NonInvertibleLinkError,
    link_eval,
    deviation,
    inverse_link,
)
from .panel import (
    Panel,
    TrajectoryBatch,
    sample_panelist_feedback,
    majority_from_counts,
    panel_vote,
    panel_vote_counts,
    panel_votes_from_gaps,
    panel_vote_fractions,
)

__all__ = [
    'LINK_KINDS', 'LinkFunction', 'NonInvertibleLinkError', 'link_eval', 'deviation', 'inverse_link',
    'Panel', 'TrajectoryBatch', 'sample_panelist_feedback', 'majority_from_counts', 'panel_vote',
    'panel_vote_counts', 'panel_votes_from_gaps', 'panel_vote_fractions',
]
