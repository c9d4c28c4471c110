"""Average-power minimization against intermittent (on/off) links.

Short blocking events reduce the average rate, so the transmitter
compensates by solving: minimize expected power over the on/off link
states subject to the expected rate meeting the latency-derived target.
The problem is convex; in the interior the optimal power on an open link
is state-independent, gamma/ln2 - 1/a_i for a single water level gamma.
For two links gamma has a closed form; in general it is found by
bisection on the strictly increasing average-rate curve.  A full
active-set enumeration of the two-link KKT system covers binding power
caps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import BisectionNoBracket, DegenerateAllBlocked, Infeasible

__all__ = [
    "LinkStateSpace",
    "OverprovisionSolution",
    "solve_two_link_closed_form",
    "solve_waterfill",
    "two_link_active_set",
]

LN2 = math.log(2.0)
MAX_STATES_LINKS = 20


@dataclass(frozen=True)
class LinkStateSpace:
    """All 2^N on/off subsets of N independently blocked links."""

    probs: np.ndarray
    open_masks: np.ndarray  # (2^N, N) bool, True = link open in that state
    state_probs: np.ndarray  # (2^N,)

    @classmethod
    def from_probs(cls, probs) -> "LinkStateSpace":
        p = np.asarray(probs, dtype=float)
        n = p.size
        if n > MAX_STATES_LINKS:
            raise ValueError(f"state space capped at {MAX_STATES_LINKS} links")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("blocking probabilities must lie in [0, 1]")
        idx = np.arange(2 ** n)
        masks = (idx[:, None] >> np.arange(n)[None, :]) & 1 == 1
        sp = np.prod(np.where(masks, 1.0 - p, p), axis=1)
        return cls(p, masks, sp)

    def average_rate(self, gains, per_link_power) -> float:
        """Expected rate when open links always use the given powers."""
        r = np.log2(1.0 + np.asarray(gains) * np.asarray(per_link_power))
        return float(self.state_probs @ (self.open_masks @ r))

    def average_power(self, per_link_power) -> float:
        """Expected total power; the all-blocked state spends nothing."""
        p = np.asarray(per_link_power, dtype=float)
        return float(self.state_probs @ (self.open_masks @ p))


@dataclass(frozen=True)
class OverprovisionSolution:
    """Outcome of one average-power solve.

    ``budget_status`` is "interior" when no power cap binds, "boundary"
    when an active-set solution sits on a cap, and "infeasible" when the
    unconstrained optimum violates a supplied cap (the unconstrained
    powers are still attached).  ``per_link_power`` is the
    state-independent power per open link; for cap-binding two-link
    solutions the powers differ per state and live in ``state_powers``
    keyed by (link1_open, link2_open).
    """

    water_level: float
    per_link_power: np.ndarray | None
    average_power: float
    average_rate: float
    budget_status: str
    state_powers: dict | None = None


def _marginal_rate(gains: np.ndarray, weights: np.ndarray, gamma: float) -> float:
    """Average rate at water level gamma with state-independent powers.

    Equals the full expectation over link states because, with independent
    blocking, each link contributes its own open probability.
    """
    p = np.maximum(gamma / LN2 - 1.0 / gains, 0.0)
    return float(weights @ np.log2(1.0 + gains * p))


def solve_waterfill(
    gains: ChannelSet,
    probs,
    rate: float,
    p_max: float | None = None,
) -> OverprovisionSolution:
    """Water-filling solve of the average-rate-constrained power minimum.

    Bisects the water level until the average rate meets the target; the
    per-link power clamps at zero for links too weak to be worth opening.
    A supplied cap is checked afterwards: if the unconstrained optimum
    breaks it in any state, the solution is flagged infeasible.
    """
    g = gains.gains
    p = np.asarray(probs, dtype=float)
    if p.shape != g.shape:
        raise ValueError("probs must match gains in length")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("blocking probabilities must lie in [0, 1]")
    if np.all(p >= 1.0):
        raise DegenerateAllBlocked("every link is always blocked")
    if rate <= 0:
        raise ValueError("rate must be positive")
    w = 1.0 - p

    hi = LN2 * math.exp(min(rate * g.size, 500.0) * LN2) / float(g.min())
    doublings = 0
    while _marginal_rate(g, w, hi) < rate:
        hi *= 2.0
        doublings += 1
        if doublings > 200 or not math.isfinite(hi):
            raise BisectionNoBracket("average rate never reaches the target")
    # shrink the generous upper bound exponentially, then bisect; the
    # bracket ends within a relative 2^-200 of the crossing, which the
    # rate tolerance alone would not guarantee when a power sits near zero
    halvings = 0
    while halvings < 5000 and _marginal_rate(g, w, hi / 2.0) >= rate:
        hi /= 2.0
        halvings += 1
    lo = hi / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _marginal_rate(g, w, mid) < rate:
            lo = mid
        else:
            hi = mid
    gamma = hi

    powers = np.maximum(gamma / LN2 - 1.0 / g, 0.0)
    avg_rate = _marginal_rate(g, w, gamma)
    avg_power = float(w @ powers)
    status = "interior"
    if p_max is not None and math.isfinite(p_max):
        # worst-case state power is the all-open sum; single-link states
        # are subsets of it
        if powers.sum() > p_max + 1e-12:
            status = "infeasible"
    return OverprovisionSolution(gamma, powers, avg_power, avg_rate, status)


def solve_two_link_closed_form(
    a1: float,
    a2: float,
    p1: float,
    p2: float,
    rate: float,
    p_max: float | None = None,
) -> OverprovisionSolution:
    """Two-link solve through the explicit water-level formula.

    gamma = ln2 * 2^[(rate - sum_i (1-P_i) log2 a_i) / (2 - P1 - P2)],
    valid while both powers stay non-negative and any cap stays slack;
    otherwise the active-set enumeration takes over.
    """
    if not (a1 >= a2 > 0):
        raise ValueError("need a1 >= a2 > 0")
    for v in (p1, p2):
        if not 0.0 <= v <= 1.0:
            raise ValueError("blocking probabilities must lie in [0, 1]")
    if p1 + p2 >= 2.0:
        raise DegenerateAllBlocked("both links are always blocked")
    if rate <= 0:
        raise ValueError("rate must be positive")

    w = np.array([1.0 - p1, 1.0 - p2])
    g = np.array([a1, a2])
    exponent = (rate - float(w @ np.log2(g))) / (2.0 - p1 - p2)
    gamma = LN2 * 2.0 ** exponent
    powers = gamma / LN2 - 1.0 / g

    cap_slack = True
    if p_max is not None and math.isfinite(p_max):
        cap_slack = (
            powers.max(initial=0.0) <= p_max + 1e-12
            and powers.sum() <= p_max + 1e-12
        )
    if np.all(powers >= 0.0) and cap_slack:
        avg_rate = float(w @ np.log2(1.0 + g * powers))
        return OverprovisionSolution(
            gamma, powers, float(w @ powers), avg_rate, "interior"
        )
    cap = math.inf if p_max is None else p_max
    return two_link_active_set(a1, a2, p1, p2, rate, cap)


_FREE, _ZERO, _CAP = 0, 1, 2


def two_link_active_set(
    a1: float,
    a2: float,
    p1: float,
    p2: float,
    rate: float,
    p_max: float,
) -> OverprovisionSolution:
    """Enumerate the two-link KKT active sets and keep the cheapest point.

    Four power variables (each link alone, both links together), three
    caps (two single-state caps, one shared both-open cap), plus
    non-negativity.  Every candidate active set pins the capped and zeroed
    variables, leaving a closed-form water level for the free ones; the
    best primal-feasible candidate is the optimum of the convex program.
    """
    if not (a1 >= a2 > 0):
        raise ValueError("need a1 >= a2 > 0")
    if p1 + p2 >= 2.0:
        raise DegenerateAllBlocked("both links are always blocked")
    if rate <= 0:
        raise ValueError("rate must be positive")
    if p_max <= 0:
        raise Infeasible("power cap must be positive")

    both = (1.0 - p1) * (1.0 - p2)
    weights = np.array([(1.0 - p1) * p2, p1 * (1.0 - p2), both, both])
    gains = np.array([a1, a2, a1, a2])
    w_open = np.array([1.0 - p1, 1.0 - p2])

    finite_cap = math.isfinite(p_max)
    single_states = (_FREE, _ZERO, _CAP) if finite_cap else (_FREE, _ZERO)
    joint_states = [(_FREE, _FREE, False), (_FREE, _ZERO, False),
                    (_ZERO, _FREE, False), (_ZERO, _ZERO, False)]
    if finite_cap:
        joint_states += [(_FREE, _FREE, True), (_FREE, _ZERO, True),
                         (_ZERO, _FREE, True)]

    best = None
    for s0, s1, (j0, j1, sum_cap) in itertools.product(
        single_states, single_states, joint_states
    ):
        states = [s0, s1, j0, j1]
        # zero-probability states contribute nothing; force their vars off
        states = [_ZERO if weights[i] == 0.0 else states[i] for i in range(4)]

        powers = np.zeros(4)
        fixed_rate = 0.0
        free = []
        ok = True
        for i, st in enumerate(states[:2]):
            if st == _CAP:
                powers[i] = p_max
                fixed_rate += weights[i] * math.log2(1.0 + gains[i] * p_max)
            elif st == _FREE:
                free.append(i)
        if sum_cap:
            if states[2] == _FREE and states[3] == _FREE:
                level = (p_max + 1.0 / a1 + 1.0 / a2) / 2.0
                powers[2] = level - 1.0 / a1
                powers[3] = level - 1.0 / a2
                if powers[2] < -1e-12 or powers[3] < -1e-12:
                    ok = False
                else:
                    fixed_rate += weights[2] * math.log2(a1 * level)
                    fixed_rate += weights[3] * math.log2(a2 * level)
            elif states[2] == _FREE:  # p22 pinned to zero, p12 takes the cap
                powers[2] = p_max
                fixed_rate += weights[2] * math.log2(1.0 + a1 * p_max)
            elif states[3] == _FREE:
                powers[3] = p_max
                fixed_rate += weights[3] * math.log2(1.0 + a2 * p_max)
            else:
                ok = False  # both zero cannot sit on a positive cap
        else:
            for i in (2, 3):
                if states[i] == _FREE:
                    free.append(i)
        if not ok:
            continue

        w_free = float(weights[list(free)].sum()) if free else 0.0
        gamma = math.nan
        if free:
            if w_free <= 0.0:
                continue
            c = fixed_rate + float(
                sum(weights[i] * math.log2(gains[i]) for i in free)
            )
            gamma = LN2 * 2.0 ** ((rate - c) / w_free)
            for i in free:
                powers[i] = gamma / LN2 - 1.0 / gains[i]
            if min(powers[i] for i in free) < -1e-12:
                continue

        # primal feasibility of whatever was not pinned by this active set
        if finite_cap:
            if powers[0] > p_max + 1e-9 or powers[1] > p_max + 1e-9:
                continue
            if not sum_cap and powers[2] + powers[3] > p_max + 1e-9:
                continue
        avg_rate = float(
            sum(
                weights[i] * math.log2(1.0 + gains[i] * max(powers[i], 0.0))
                for i in range(4)
            )
        )
        if avg_rate < rate - 1e-9:
            continue
        avg_power = float(weights @ np.maximum(powers, 0.0))
        if best is None or avg_power < best[0]:
            binding = sum_cap or _CAP in states[:2]
            best = (avg_power, gamma, powers.copy(), avg_rate, binding)

    if best is None:
        raise Infeasible("no active set meets the rate target within the cap")

    avg_power, gamma, powers, avg_rate, binding = best
    powers = np.maximum(powers, 0.0)
    state_powers = {
        (1, 0): np.array([powers[0], 0.0]),
        (0, 1): np.array([0.0, powers[1]]),
        (1, 1): np.array([powers[2], powers[3]]),
    }
    state_free = (
        powers[0] == powers[2] and powers[1] == powers[3]
    )
    return OverprovisionSolution(
        gamma,
        powers[:2] if state_free else None,
        avg_power,
        avg_rate,
        "boundary" if binding else "interior",
        state_powers=state_powers,
    )
