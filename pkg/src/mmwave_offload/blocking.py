"""Line-of-sight blocking by random rectangular obstacles.

Obstacle centers form a planar Poisson process of density mu; with mean
obstacle length and width E[X], E[W], the chance that a path of length d
stays clear is exp(-beta*d - q), with beta = 2*mu*(E[W]+E[X])/pi and
q = mu*E[W]*E[X].  Only the means matter.  Blocking events on distinct
links are treated as independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDeployment, InvalidDistance
from .geometry import PER_KM2, Deployment

__all__ = ["BlockageEnv", "p_on", "link_blocking_probs"]


@dataclass(frozen=True)
class BlockageEnv:
    """Rectangular-blocker environment.

    ``mu`` is the obstacle density in 1/m^2 (use :meth:`from_per_km2` for
    the km^2 convention); ``mean_w`` and ``mean_x`` are the mean obstacle
    width and length in meters.  The derived coefficients are recomputed
    on access so they can never go stale.
    """

    mu: float
    mean_w: float
    mean_x: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.mean_w <= 0 or self.mean_x <= 0:
            raise ValueError("mean obstacle sizes must be positive")

    @classmethod
    def from_per_km2(cls, mu_per_km2: float, mean_w: float, mean_x: float):
        return cls(mu_per_km2 * PER_KM2, mean_w, mean_x)

    @property
    def beta(self) -> float:
        """Per-meter blocking exponent, 2*mu*(E[W]+E[X])/pi."""
        return 2.0 * self.mu * (self.mean_w + self.mean_x) / math.pi

    @property
    def q(self) -> float:
        """Distance-free blocking exponent, mu*E[W]*E[X]."""
        return self.mu * self.mean_w * self.mean_x


def p_on(env: BlockageEnv, d) -> np.ndarray | float:
    """Probability that a link of length ``d`` meters is unobstructed."""
    ds = np.asarray(d, dtype=float)
    if np.any(ds <= 0):
        raise InvalidDistance("link distance must be positive")
    out = np.exp(-env.beta * ds - env.q)
    return float(out) if np.isscalar(d) else out


def link_blocking_probs(env: BlockageEnv, dep: Deployment, n_links: int) -> np.ndarray:
    """Blocking probabilities of the ``n_links`` nearest APs, ascending.

    Ascending distances give ascending blocking probabilities, matching
    the convention that the best link is also the most reliable.
    """
    if dep.n_aps == 0:
        raise EmptyDeployment("deployment has no access points")
    if not 1 <= n_links <= dep.n_aps:
        raise ValueError(f"n_links must be in [1, {dep.n_aps}]")
    return 1.0 - p_on(env, dep.distances[:n_links])
