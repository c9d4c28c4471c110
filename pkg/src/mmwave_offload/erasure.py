"""Asymmetric block-erasure channel: outage, bounds, and coding analysis.

A codeword of n_c bits rides N links as blocks of n_1 >= ... >= n_N bits;
block i is erased independently with probability P_1 <= ... <= P_N.
Outage is the event that the surviving blocks carry strictly fewer bits
than the information content n_c * R_C, making decoding impossible for
any code.  Exhaustive pattern enumeration gives the exact outage; a pair
of order-statistics bounds sandwiches it without enumeration.  For
explicit binary codes the module computes block diversity, a generalized
Singleton bound on it, and the exact maximum-likelihood word error
probability through GF(2) rank computations.

Planners tie this back to rate allocation: the uncoded planner keeps the
largest power-optimal link subset meeting an outage target, the coded one
buys outage margin with redundancy, scanning the coding rate downward and
paying the higher rate target in transmit power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import (
    CodeTooLarge,
    NoFeasibleRate,
    OutageUnreachable,
    TooManyBlocks,
)
from .multilink import AllocationPlan, _rates_for, allocate_for_rate, optimal_link_count

__all__ = [
    "BlockCodeSpec",
    "ErasurePattern",
    "LinearCode",
    "CodedPlan",
    "UncodedPlan",
    "exact_outage",
    "outage_bounds",
    "singleton_bound",
    "block_diversity",
    "word_error_probability",
    "uncoded_outage",
    "plan_uncoded",
    "plan_coded",
    "coded_plan_at_rate",
    "load_code",
    "gf2_rank",
]

MAX_ENUM_BLOCKS = 25
_CHUNK = 1 << 18


@dataclass(frozen=True)
class BlockCodeSpec:
    """Block structure and erasure statistics of one coded transmission."""

    block_lengths: np.ndarray
    erasure_probs: np.ndarray
    rate: float

    def __post_init__(self):
        n = np.asarray(self.block_lengths, dtype=np.int64)
        p = np.asarray(self.erasure_probs, dtype=float)
        object.__setattr__(self, "block_lengths", n)
        object.__setattr__(self, "erasure_probs", p)
        if n.size == 0 or n.size != p.size:
            raise ValueError("need equally many block lengths and erasure probs")
        if np.any(n < 0):
            raise ValueError("block lengths must be >= 0")
        if np.any(np.diff(n) > 0):
            raise ValueError("block lengths must be sorted non-increasing")
        if np.any((p < 0) | (p > 1)):
            raise ValueError("erasure probs must lie in [0, 1]")
        if np.any(np.diff(p) < 0):
            raise ValueError("erasure probs must be sorted non-decreasing")
        if not 0.0 < self.rate <= 1.0:
            raise ValueError("code rate must lie in (0, 1]")

    @property
    def n_blocks(self) -> int:
        return self.block_lengths.size

    @property
    def n_c(self) -> int:
        return int(self.block_lengths.sum())

    @property
    def info_bits(self) -> float:
        return self.n_c * self.rate


@dataclass(frozen=True)
class ErasurePattern:
    """One on/off erasure outcome; bit i set means block i was lost."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.int8)
        if np.any((b != 0) & (b != 1)):
            raise ValueError("pattern entries must be 0 or 1")
        object.__setattr__(self, "bits", b)

    def matches(self, spec: BlockCodeSpec) -> bool:
        return self.bits.size == spec.n_blocks


@dataclass(frozen=True)
class LinearCode:
    """Binary linear code with an explicit generator and block boundaries."""

    generator: np.ndarray
    block_lengths: np.ndarray

    def __post_init__(self):
        g = (np.asarray(self.generator) & 1).astype(np.uint8)
        n = np.asarray(self.block_lengths, dtype=np.int64)
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "block_lengths", n)
        if g.ndim != 2:
            raise ValueError("generator must be a 2-D binary matrix")
        if n.sum() != g.shape[1]:
            raise ValueError("block lengths must sum to the code length")
        if gf2_rank(g) != g.shape[0]:
            raise ValueError("generator rows must be independent over GF(2)")

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def n_c(self) -> int:
        return self.generator.shape[1]

    @property
    def n_blocks(self) -> int:
        return self.block_lengths.size

    @property
    def rate(self) -> float:
        return self.k / self.n_c

    def block_columns(self, i: int) -> np.ndarray:
        starts = np.concatenate([[0], np.cumsum(self.block_lengths)])
        return np.arange(starts[i], starts[i + 1])

    def induced_spec(self, erasure_probs) -> BlockCodeSpec:
        return BlockCodeSpec(self.block_lengths, erasure_probs, self.rate)

    @classmethod
    def from_text(cls, text: str) -> "LinearCode":
        """Parse the plain-text format: "k n_c N", block lengths, k 0/1 rows."""
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if len(lines) < 2:
            raise ValueError("truncated code description")
        k, n_c, n_blocks = (int(v) for v in lines[0].split())
        lengths = np.array([int(v) for v in lines[1].split()], dtype=np.int64)
        if lengths.size != n_blocks:
            raise ValueError("block length count disagrees with the header")
        if len(lines) != 2 + k:
            raise ValueError(f"expected {k} generator rows, got {len(lines) - 2}")
        rows = []
        for ln in lines[2:]:
            if len(ln) != n_c or set(ln) - {"0", "1"}:
                raise ValueError("generator rows must be n_c characters of 0/1")
            rows.append([int(ch) for ch in ln])
        return cls(np.array(rows, dtype=np.uint8), lengths)

    def to_text(self) -> str:
        head = f"{self.k} {self.n_c} {self.n_blocks}"
        lens = " ".join(str(int(v)) for v in self.block_lengths)
        rows = ["".join(str(int(v)) for v in row) for row in self.generator]
        return "\n".join([head, lens, *rows]) + "\n"


def load_code(path) -> LinearCode:
    """Load a LinearCode from a plain-text generator file."""
    with open(path, "r", encoding="ascii") as fh:
        return LinearCode.from_text(fh.read())


def gf2_rank(m) -> int:
    """Rank of a binary matrix over GF(2) by XOR elimination."""
    a = (np.asarray(m) & 1).astype(np.uint8)
    if a.ndim != 2 or a.shape[1] == 0 or a.shape[0] == 0:
        return 0
    a = a.copy()
    rank = 0
    rows, cols = a.shape
    for c in range(cols):
        hits = np.nonzero(a[rank:, c])[0]
        if hits.size == 0:
            continue
        piv = rank + hits[0]
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        sel = a[:, c] == 1
        sel[rank] = False
        a[sel] ^= a[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def _pattern_bits(idx: np.ndarray, n: int) -> np.ndarray:
    return (idx[:, None] >> np.arange(n)[None, :]) & 1


def exact_outage(spec: BlockCodeSpec, info_bits: float | None = None) -> float:
    """Exact outage by enumerating all 2^N erasure patterns.

    ``info_bits`` overrides the decoding threshold; the comparison is
    strict, so receiving exactly the information content is not outage.
    """
    n = spec.n_blocks
    if n > MAX_ENUM_BLOCKS:
        raise TooManyBlocks(f"enumeration capped at {MAX_ENUM_BLOCKS} blocks")
    threshold = spec.info_bits if info_bits is None else info_bits
    lengths = spec.block_lengths.astype(float)
    p = spec.erasure_probs
    total = 0.0
    for start in range(0, 1 << n, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 1 << n))
        bits = _pattern_bits(idx, n)
        received = (1 - bits) @ lengths
        prob = np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)
        total += float(prob[received < threshold].sum())
    return total


def _tail_index(lengths: np.ndarray, threshold: float) -> int:
    """The 1-based index l with sum(n_{l+1}..n_N) < threshold <= sum(n_l..n_N)."""
    n = lengths.size
    suffix = np.concatenate([np.cumsum(lengths[::-1])[::-1], [0]])
    for ell in range(1, n + 1):
        if suffix[ell] < threshold <= suffix[ell - 1]:
            return ell
    raise ValueError("threshold outside (0, n_c]")


def outage_bounds(spec: BlockCodeSpec) -> tuple[float, float]:
    """Order-statistics sandwich on the exact outage probability.

    Receiving at most j blocks (j = longest prefix short of the threshold)
    is always outage; receiving more than N - l blocks never is.  Each
    count is weighted by its most (least) favorable probability, giving a
    lower and an upper bound that collapse when j = 0 and l = N.
    """
    n = spec.n_blocks
    lengths = spec.block_lengths
    threshold = spec.info_bits
    p = spec.erasure_probs
    q = 1.0 - p

    prefix_len = np.concatenate([[0], np.cumsum(lengths)])
    j = int(np.searchsorted(prefix_len, threshold, side="left")) - 1
    ell = _tail_index(lengths, threshold)

    prefix_p = np.concatenate([[1.0], np.cumprod(p)])
    prefix_q = np.concatenate([[1.0], np.cumprod(q)])
    suffix_p = np.concatenate([[1.0], np.cumprod(p[::-1])])
    suffix_q = np.concatenate([[1.0], np.cumprod(q[::-1])])

    lower = sum(
        math.comb(n, u) * prefix_p[n - u] * suffix_q[u] for u in range(0, j + 1)
    )
    upper = sum(
        math.comb(n, u) * prefix_q[u] * suffix_p[n - u] for u in range(0, n - ell + 1)
    )
    return float(lower), float(upper)


def singleton_bound(spec: BlockCodeSpec) -> int:
    """Upper bound on block diversity for the given block structure."""
    n = spec.n_blocks
    threshold = spec.info_bits
    ell = _tail_index(spec.block_lengths, threshold)
    m = float(spec.block_lengths[ell - 1 :].sum()) / (n - ell + 1)
    return int(math.floor(1.0 + n - threshold / m))


def block_diversity(code: LinearCode) -> int:
    """Minimum number of blocks any nonzero codeword touches.

    By linearity this equals the pairwise definition (fewest blocks in
    which two distinct codewords differ).  Brute force over all nonzero
    messages.
    """
    if code.k > 20 and code.n_c > 24:
        raise CodeTooLarge("diversity brute force capped at k <= 20 or n_c <= 24")
    starts = np.concatenate([[0], np.cumsum(code.block_lengths)])[:-1]
    best = code.n_blocks
    total = 1 << code.k
    for lo in range(1, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total))
        msgs = _pattern_bits(idx, code.k)
        words = (msgs @ code.generator.astype(np.int64)) & 1
        touched = np.add.reduceat(words, starts, axis=1) > 0
        best = min(best, int(touched.sum(axis=1).min()))
    return best


def word_error_probability(code: LinearCode, probs) -> float:
    """Exact ML word error over erasure patterns.

    For a pattern e the decoder sees every codeword supported on the
    erased blocks as equally likely; with 2^(k - rank) such candidates it
    guesses right with probability 2^(rank - k).
    """
    p = np.asarray(probs, dtype=float)
    n = code.n_blocks
    if p.size != n:
        raise ValueError("need one erasure probability per block")
    if n > 20 or code.k > 20:
        raise CodeTooLarge("pattern enumeration capped at 20 blocks / k <= 20")
    cols = [code.block_columns(i) for i in range(n)]
    total = 0.0
    for pattern in range(1 << n):
        bits = [(pattern >> i) & 1 for i in range(n)]
        prob = float(np.prod([p[i] if bits[i] else 1.0 - p[i] for i in range(n)]))
        keep = [cols[i] for i in range(n) if not bits[i]]
        sub = (
            code.generator[:, np.concatenate(keep)]
            if keep
            else np.zeros((code.k, 0), dtype=np.uint8)
        )
        rank = gf2_rank(sub)
        total += prob * (1.0 - 2.0 ** (rank - code.k))
    return total


def uncoded_outage(probs, n_links: int) -> float:
    """Chance that at least one of the first ``n_links`` links is blocked."""
    p = np.asarray(probs, dtype=float)
    if not 1 <= n_links <= p.size:
        raise ValueError(f"n_links must be in [1, {p.size}]")
    return float(1.0 - np.prod(1.0 - p[:n_links]))


@dataclass(frozen=True)
class UncodedPlan:
    """Largest power-optimal link subset meeting the outage target."""

    plan: AllocationPlan
    n_star: int
    outage: float

    @property
    def n_links(self) -> int:
        return self.plan.links_used


@dataclass(frozen=True)
class CodedPlan:
    """Coded transmission at the largest coding rate meeting the target."""

    code_rate: float
    n_links: int
    rates: np.ndarray
    block_bits: np.ndarray
    total_power: float
    outage: float


def plan_uncoded(
    gains: ChannelSet,
    probs,
    rate: float,
    n_bits: int,
    p_out_target: float,
) -> UncodedPlan:
    """Keep as many of the power-optimal links as the outage target allows.

    Uncoded outage grows with every extra link, so the plan uses the
    largest N <= N* staying at or under the target; if even the best link
    alone misses it, no uncoded plan exists.
    """
    p = np.asarray(probs, dtype=float)
    if p.size != len(gains):
        raise ValueError("need one blocking probability per link")
    n_star = optimal_link_count(gains, rate)
    if uncoded_outage(p, 1) > p_out_target:
        raise OutageUnreachable(
            f"best link alone has outage {uncoded_outage(p, 1):.4g} > {p_out_target}"
        )
    n_use = 1
    while n_use < n_star and uncoded_outage(p, n_use + 1) <= p_out_target:
        n_use += 1
    plan = allocate_for_rate(gains.head(n_use), rate, n_bits)
    return UncodedPlan(plan, n_star, uncoded_outage(p, n_use))


def coded_plan_at_rate(
    gains: ChannelSet,
    probs,
    rate: float,
    n_bits: int,
    r_c: float,
) -> CodedPlan:
    """Coded transmission at one fixed coding rate.

    Redundancy multiplies the rate target by 1/r_c, so the link-count
    selection re-runs there; block bit counts come from the
    floor-plus-remainder rounding over ceil(n_bits / r_c) total coded
    bits, while the outage threshold stays at the exact real information
    content, so rounding can never flip a marginal pattern.  Per-link
    transmission time stays n_bits / rate, unchanged from the uncoded
    plan.
    """
    if not 0.0 < r_c <= 1.0:
        raise ValueError("coding rate must lie in (0, 1]")
    p = np.asarray(probs, dtype=float)
    if p.size != len(gains):
        raise ValueError("need one blocking probability per link")
    coded_rate = rate / r_c
    n_cod = optimal_link_count(gains, coded_rate)
    rates = _rates_for(gains.gains, n_cod, coded_rate)
    real_bits = n_bits * rates / rate  # sums to n_bits / r_c
    total_bits = int(math.ceil(n_bits / r_c - 1e-9))
    bits = np.floor(real_bits).astype(np.int64)
    bits[0] = total_bits - int(bits[1:].sum())
    spec = BlockCodeSpec(bits, p[:n_cod], r_c)
    outage = exact_outage(spec, info_bits=float(n_bits))
    powers = (2.0 ** rates - 1.0) / gains.gains[:n_cod]
    return CodedPlan(
        code_rate=r_c,
        n_links=n_cod,
        rates=rates,
        block_bits=bits,
        total_power=float(powers.sum()),
        outage=outage,
    )


def plan_coded(
    gains: ChannelSet,
    probs,
    rate: float,
    n_bits: int,
    p_out_target: float,
    rate_grid_step: float = 0.01,
) -> CodedPlan:
    """Highest-rate coded plan meeting the outage target.

    Scans the coding rate downward from 1 on the grid, so ties resolve to
    the larger rate, and returns the first candidate whose exact outage
    meets the target.
    """
    if not 0.0 < rate_grid_step <= 0.5:
        raise ValueError("rate_grid_step must lie in (0, 0.5]")
    k = 0
    while True:
        r_c = 1.0 - k * rate_grid_step
        if r_c < rate_grid_step / 2.0:
            raise NoFeasibleRate(
                f"no coding rate on the {rate_grid_step} grid meets "
                f"outage <= {p_out_target}"
            )
        k += 1
        candidate = coded_plan_at_rate(gains, probs, rate, n_bits, r_c)
        if candidate.outage <= p_out_target:
            return candidate
