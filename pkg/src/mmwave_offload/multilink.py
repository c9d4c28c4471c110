"""Transmit-power-minimal split of an uplink across parallel mmWave links.

Splitting n_b bits over N links at per-link rates R_i keeps the latency
budget iff every link finishes together (n_i / R_i constant) and the rates
sum to the single-link minimum rate.  Under that constraint the total
power sum of (2^R_i - 1)/a_i has a closed-form minimizer, and the number
of links worth using is decided by a non-decreasing threshold sequence on
the gain ratios: link N+1 joins only while 2^R_min exceeds
a_1*...*a_N / a_{N+1}^N.

A brute-force simplex search (:func:`grid_oracle`) is kept as an
independent check of the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, OffloadTask, r_min, single_link_min_power
from .errors import BudgetExceeded, OracleTooLarge

__all__ = [
    "AllocationPlan",
    "two_link_allocate",
    "optimal_link_count",
    "allocate",
    "allocate_for_rate",
    "link_count_thresholds",
    "total_power_closed_form",
    "grid_oracle",
]


@dataclass(frozen=True)
class AllocationPlan:
    """Rates, bit counts, and powers over the links actually used.

    ``bits`` are integers: the ideal real-valued counts n_b * R_i / R_min
    are floored on every link but the first, and the remainder goes to the
    first (best) link, so the bits always sum to n_b exactly.
    """

    links_used: int
    rates: np.ndarray
    bits: np.ndarray
    powers: np.ndarray
    total_power: float

    def __post_init__(self):
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=float))
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=np.int64))
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float))


def link_count_thresholds(gains: ChannelSet) -> np.ndarray:
    """log2 of the gain-ratio thresholds a_1*...*a_{k-1} / a_k^{k-1}.

    Entry k-1 (0-based) is the threshold for using k links; the sequence is
    non-decreasing, so a linear scan finds the optimal link count.
    """
    lg = np.log2(gains.gains)
    prefix = np.concatenate([[0.0], np.cumsum(lg[:-1])])
    k = np.arange(1, lg.size + 1)
    return prefix - (k - 1) * lg


def optimal_link_count(gains: ChannelSet, rate: float) -> int:
    """Number of best links that minimizes total transmit power.

    Largest N with log2-threshold strictly below the target rate; the
    (N+1)-th threshold is treated as +inf past the last available link,
    making the answer unique with the left inequality strict and the right
    one non-strict.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    thresholds = link_count_thresholds(gains)
    below = thresholds < rate
    # thresholds[0] == 0 < rate always; scan stops at the first failure
    n = 1
    while n < len(gains) and below[n]:
        n += 1
    return n


def _rates_for(gains: np.ndarray, n: int, rate: float) -> np.ndarray:
    """Power-optimal per-link rates over the best ``n`` links (log space)."""
    lg = np.log2(gains[:n])
    return rate / n + lg - lg.sum() / n


def _round_bits(n_bits: int, rates: np.ndarray, rate_total: float) -> np.ndarray:
    """Floor-plus-remainder integer split of ``n_bits`` proportional to rates."""
    real = n_bits * rates / rate_total
    bits = np.floor(real).astype(np.int64)
    bits[0] = n_bits - bits[1:].sum()
    return bits


def total_power_closed_form(gains: np.ndarray, n: int, rate: float) -> float:
    """Closed-form minimum total power over the best ``n`` links."""
    g = np.asarray(gains, dtype=float)[:n]
    geo = math.exp((rate * math.log(2.0) - np.log(g).sum()) / n)
    return n * geo - float((1.0 / g).sum())


def allocate_for_rate(
    gains: ChannelSet,
    rate: float,
    n_bits: int,
    budget: float | None = None,
) -> AllocationPlan:
    """Power-minimal allocation for an explicit minimum-rate target."""
    n = optimal_link_count(gains, rate)
    rates = _rates_for(gains.gains, n, rate)
    powers = (2.0 ** rates - 1.0) / gains.gains[:n]
    total = float(powers.sum())
    if budget is not None and total > budget:
        raise BudgetExceeded(f"total power {total} W exceeds budget {budget} W")
    bits = _round_bits(n_bits, rates, rate)
    return AllocationPlan(n, rates, bits, powers, total)


def allocate(
    gains: ChannelSet,
    task: OffloadTask,
    budget: float | None = None,
) -> AllocationPlan:
    """Power-minimal allocation meeting the task's latency budget."""
    return allocate_for_rate(gains, r_min(task), task.n_bits, budget)


def two_link_allocate(a1: float, a2: float, rate: float, n_bits: int) -> AllocationPlan:
    """Two-link special case with the explicit rate split.

    Uses both links only when 2^rate exceeds a1/a2 (strictly); otherwise
    everything rides the best link.  In the two-link branch the total power
    is strictly below the single-link minimum.
    """
    if not (a1 >= a2 > 0):
        raise ValueError("need a1 >= a2 > 0")
    if rate <= 0:
        raise ValueError("rate must be positive")
    ratio = math.log2(a1 / a2)
    if rate > ratio:  # 2^rate > a1/a2, strict
        r1 = rate / 2.0 + ratio / 2.0
        rates = np.array([r1, rate - r1])
        powers = (2.0 ** rates - 1.0) / np.array([a1, a2])
        bits = _round_bits(n_bits, rates, rate)
        return AllocationPlan(2, rates, bits, powers, float(powers.sum()))
    p = single_link_min_power(a1, rate)
    return AllocationPlan(
        1, np.array([rate]), np.array([n_bits]), np.array([p]), p
    )


def grid_oracle(
    gains: ChannelSet,
    rate: float,
    step: float,
    max_points: int = 200_000_000,
) -> float:
    """Brute-force minimum total power over a rate-simplex grid.

    Enumerates every split with links 2..N on multiples of ``step`` and
    link 1 taking the remainder, so the single-link point is always on the
    grid.  Independent of the closed forms; used to verify them.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if rate <= 0:
        raise ValueError("rate must be positive")
    g = gains.gains
    n = g.size
    if n > 4:
        raise OracleTooLarge("grid oracle supports at most 4 links")
    k_max = int(math.floor(rate / step + 1e-12))
    n_points = math.comb(k_max + n - 1, n - 1)
    if n_points > max_points:
        raise OracleTooLarge(
            f"{n_points} grid points exceed the budget of {max_points}"
        )

    if n == 1:
        return single_link_min_power(g[0], rate)

    steps = np.arange(k_max + 1) * step
    # power of link 1 indexed by the total step count of the other links
    p1 = (2.0 ** (rate - steps) - 1.0) / g[0]
    p_link = [(2.0 ** steps - 1.0) / g[i] for i in range(1, n)]

    if n == 2:
        return float((p_link[0] + p1).min())

    best = math.inf
    if n == 3:
        for k3 in range(k_max + 1):
            m = k_max - k3
            tot = p_link[1][k3] + p_link[0][: m + 1] + p1[k3 : k3 + m + 1]
            best = min(best, float(tot.min()))
        return best

    # n == 4: chunk the outer coordinate, broadcast the inner two
    for k4 in range(k_max + 1):
        m = k_max - k4
        k3 = np.arange(m + 1)
        # sums k3 + k2 <= m; build as a (m+1, m+1) lower-triangular mask
        s = k3[:, None] + k3[None, :]
        ok = s <= m
        tot = np.where(
            ok,
            p_link[2][k4]
            + p_link[1][k3][:, None]
            + p_link[0][k3][None, :]
            + p1[np.minimum(s + k4, k_max)],
            np.inf,
        )
        best = min(best, float(tot.min()))
    return best
