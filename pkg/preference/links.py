"""
Link Functions - Map return differences to preference probabilities

PURPOSE: The panelist model. A link sigma(x) turns the return gap between
         two trajectories (or batch averages) into the probability that the
         first one is preferred.

SUPPORTED KINDS:
    logistic        sigma(x) = 1 / (1 + exp(-gamma x))        (Bradley-Terry)
    linear          sigma(x) = clamp(gamma x + 1/2, 0, 1)
    step            1 if x > 0, 0 if x < 0, 1/2 at x = 0      (limit of logistic)
    probit          sigma(x) = Phi(gamma x)                    (extension)

Every kind satisfies sigma(0) = 1/2 and sigma(-x) = 1 - sigma(x). The
deviation function is varsigma(x) = sigma(x) - 1/2.

R EQUIVALENT: plogis / pnorm with a scale argument, plus qlogis / qnorm
              for the inverses

USAGE:
    link = LinkFunction('logistic', gamma=1.0)
    link_eval(link, np.log(3))      # 0.75
    inverse_link(link, 0.75)        # log(3)
"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

LINK_KINDS = ('logistic', 'linear', 'step', 'probit')
LINK_ALIASES = {'linear_clamped': 'linear', 'bradley_terry': 'logistic'}

ArrayLike = Union[float, np.ndarray]


class NonInvertibleLinkError(ValueError):
    """Raised when a probability cannot be mapped back through a link."""


@dataclass(frozen=True)
class LinkFunction:
    """
    PURPOSE: Immutable description of one panelist link

    PARAMETERS:
        kind: One of LINK_KINDS
        gamma: Expertise scale (> 0); larger means sharper preferences

    EXAMPLE:
        LinkFunction('linear', gamma=1 / 50)
    """

    kind: str
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', LINK_ALIASES.get(self.kind, self.kind))
        if self.kind not in LINK_KINDS:
            raise ValueError(f"Unknown link kind '{self.kind}'. Valid: {', '.join(LINK_KINDS)}")
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError(f"gamma must be a positive finite number, got {self.gamma}")
        object.__setattr__(self, 'gamma', float(self.gamma))

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        """sigma(x); works elementwise on arrays."""
        z = self.gamma * np.asarray(x, dtype=float)
        if self.kind == 'logistic':
            out = expit(z)
        elif self.kind == 'linear':
            out = np.clip(z + 0.5, 0.0, 1.0)
        elif self.kind == 'probit':
            out = norm.cdf(z)
        else:
            out = np.where(z > 0, 1.0, np.where(z < 0, 0.0, 0.5))
        return out if np.ndim(out) else float(out)

    def deviation(self, x: ArrayLike) -> ArrayLike:
        """varsigma(x) = sigma(x) - 1/2, in [-1/2, 1/2]."""
        return self.evaluate(x) - 0.5

    def inverse(self, p: ArrayLike) -> ArrayLike:
        """
        x with sigma(x) = p.

        Only the open range (0, 1) is invertible, and only for strictly
        increasing kinds; the linear link inverts inside its unclamped band.
        """
        if self.kind == 'step':
            raise NonInvertibleLinkError("The step link is flat away from 0 and cannot be inverted")
        p_arr = np.asarray(p, dtype=float)
        if np.any(~np.isfinite(p_arr)) or np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
            raise NonInvertibleLinkError(
                f"{self.kind} link is only invertible on the open interval (0, 1)"
            )
        if self.kind == 'logistic':
            out = logit(p_arr) / self.gamma
        elif self.kind == 'probit':
            out = norm.ppf(p_arr) / self.gamma
        else:
            out = (p_arr - 0.5) / self.gamma
        return out if np.ndim(out) else float(out)

    # ------------------------------------------------------------------
    # Properties used by the analysis code
    # ------------------------------------------------------------------

    @property
    def is_invertible(self) -> bool:
        return self.kind != 'step'

    @property
    def is_strictly_increasing(self) -> bool:
        """Strictly increasing near the origin (everything but step)."""
        return self.kind != 'step'

    @property
    def slope_at_zero(self) -> float:
        """sigma'(0); infinite for the step link."""
        if self.kind == 'logistic':
            return self.gamma / 4.0
        if self.kind == 'linear':
            return self.gamma
        if self.kind == 'probit':
            return self.gamma / np.sqrt(2.0 * np.pi)
        return np.inf

    @property
    def lipschitz_constant(self) -> float:
        """Largest slope of sigma; for every kind but step it is attained at 0."""
        return self.slope_at_zero

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'gamma': self.gamma}

    @classmethod
    def from_dict(cls, data: dict) -> 'LinkFunction':
        return cls(kind=data['kind'], gamma=float(data.get('gamma', 1.0)))


# =============================================================================
# FUNCTIONAL INTERFACE
# =============================================================================

def link_eval(link: LinkFunction, x: ArrayLike) -> ArrayLike:
    """Preference probability sigma(x)."""
    return link.evaluate(x)


def deviation(link: LinkFunction, x: ArrayLike) -> ArrayLike:
    """Deviation varsigma(x) = sigma(x) - 1/2."""
    return link.deviation(x)


def inverse_link(link: LinkFunction, p: ArrayLike) -> ArrayLike:
    """sigma^{-1}(p); raises NonInvertibleLinkError outside the invertible range."""
    return link.inverse(p)
