"""Stochastic geometry of access-point deployments around a user at the origin.

Access points follow a homogeneous Poisson point process (or a fixed-count
uniform scatter for the deterministic-placement experiments).  With path
loss a_i proportional to d_i^-alpha, the power-optimal link count N*
depends only on the sorted distances through the scale-free conditions

    d_N^(N-1) < d_1 * ... * d_{N-1} * A,      A = 2^(rate / alpha),

evaluated here in log space.  N* - 1 follows (exactly for the first two
masses, conjecturally beyond) a Poisson law with parameter ln A^2, which
yields closed forms for the deployment-design quantities: the link count
M_eps a user must see, and the minimum AP density lambda_{eps,delta}
putting that many APs in range with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import gammaln

from .errors import BracketingFailed, EmptyDeployment, RegionTooSmall

__all__ = [
    "DiskRegion",
    "SquareRegion",
    "Deployment",
    "NStarDistribution",
    "EmpiricalNStar",
    "sample_ppp",
    "sample_uniform",
    "distance_density",
    "n_star_of_deployment",
    "n_star_pmf_analytic",
    "n_star_pmf_montecarlo",
    "m_epsilon",
    "lambda_epsilon_delta",
    "total_variation",
    "PER_KM2",
]

# 1 point per km^2 expressed in SI (points per m^2)
PER_KM2 = 1e-6

MC_CHUNK_TRIALS = 4096
MC_EDGE_MISS_PROB = 1e-4


@dataclass(frozen=True)
class DiskRegion:
    """Disk of given radius (m) centered at the user."""

    radius: float

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(n))
        theta = 2.0 * math.pi * rng.random(n)
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass(frozen=True)
class SquareRegion:
    """Axis-aligned square of given side (m) centered at the user."""

    side: float

    @property
    def area(self) -> float:
        return self.side ** 2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.side / 2.0, self.side / 2.0, size=(n, 2))


def _as_generator(rng) -> tuple[np.random.Generator, int | None]:
    """Accept a seed or a Generator; report the seed when it is known."""
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        gen = np.random.Generator(np.random.Philox(seed=np.random.SeedSequence(seed)))
        return gen, seed
    if isinstance(rng, np.random.Generator):
        return rng, None
    raise TypeError("rng must be an integer seed or a numpy Generator")


@dataclass(frozen=True)
class Deployment:
    """Access-point positions around a user at the origin.

    ``intensity`` is the PPP intensity in points/m^2, or None when the
    point count was fixed rather than Poisson.
    """

    positions: np.ndarray
    intensity: float | None
    region: DiskRegion | SquareRegion
    seed: int | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "positions", pos)

    @property
    def n_aps(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def distances(self) -> np.ndarray:
        """Link distances sorted ascending."""
        return np.sort(np.hypot(self.positions[:, 0], self.positions[:, 1]))


def sample_ppp(intensity: float, region, rng) -> Deployment:
    """Draw one Poisson point process realization inside ``region``.

    The point count is Poisson(intensity * area); given the count the
    positions are i.i.d. uniform over the region.
    """
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    if region.area <= 0:
        raise ValueError("region area must be positive")
    gen, seed = _as_generator(rng)
    count = int(gen.poisson(intensity * region.area))
    return Deployment(region.sample(gen, count), intensity, region, seed)


def sample_uniform(count: int, region, rng) -> Deployment:
    """Scatter a fixed number of APs uniformly over ``region``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    gen, seed = _as_generator(rng)
    return Deployment(region.sample(gen, count), None, region, seed)


def distance_density(i: int, intensity: float, x) -> np.ndarray | float:
    """Density of the distance to the i-th nearest point of a PPP.

    f(x) = 2 / (i-1)! * (lambda pi)^i * x^(2i-1) * exp(-lambda pi x^2),
    evaluated in log space so large orders stay finite.
    """
    if i < 1:
        raise ValueError("order index must be >= 1")
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise ValueError("distance must be >= 0")
    lp = intensity * math.pi
    with np.errstate(divide="ignore"):
        logf = (
            math.log(2.0)
            - math.lgamma(i)
            + i * math.log(lp)
            + (2 * i - 1) * np.log(xs)
            - lp * xs ** 2
        )
    out = np.where(xs > 0, np.exp(logf), 0.0)
    return float(out) if np.isscalar(x) else out


def _n_star_rows(log_d: np.ndarray, ln_a: float) -> np.ndarray:
    """Optimal link count per row of ascending log-distances.

    Rows may be padded with +inf past the available APs; padded entries
    fail every condition, which caps the count at the AP number.  The
    count is the length of the leading run of satisfied conditions, which
    matches the nesting of the events.
    """
    t, k = log_d.shape
    if k == 1:
        return np.ones(t, dtype=np.int64)
    prefix = np.cumsum(log_d, axis=1)
    n = np.arange(2, k + 1)
    with np.errstate(invalid="ignore"):
        ok = (n - 1) * log_d[:, 1:] < prefix[:, :-1] + ln_a
    return 1 + np.cumprod(ok, axis=1).sum(axis=1, dtype=np.int64)


def n_star_of_deployment(dep: Deployment, rate: float, alpha: float) -> int:
    """Power-optimal link count of a concrete deployment."""
    if dep.n_aps == 0:
        raise EmptyDeployment("deployment has no access points")
    ln_a = rate * math.log(2.0) / alpha
    log_d = np.log(dep.distances)[None, :]
    return int(_n_star_rows(log_d, ln_a)[0])


@dataclass(frozen=True)
class NStarDistribution:
    """Analytic distribution of the optimal link count.

    ``pmf[k]`` is the mass at N* = k+1; ``tail_mass`` is whatever the
    truncation leaves out.  The Poisson form is exact for the first two
    masses and conjectured beyond, hence the metadata note.
    """

    A: float
    poisson_param: float
    pmf: np.ndarray
    tail_mass: float
    note: str = "Poisson form exact for N<=2, conjectured for N>=3"

    @property
    def mean(self) -> float:
        return self.poisson_param + 1.0

    def cdf(self, n: int) -> float:
        return float(self.pmf[:n].sum())


def n_star_pmf_analytic(rate: float, alpha: float, n_max: int = 200) -> NStarDistribution:
    """Closed-form link-count pmf: N* - 1 ~ Poisson(2 * rate * ln2 / alpha)."""
    if rate <= 0 or alpha <= 0:
        raise ValueError("rate and alpha must be positive")
    a = 2.0 ** (rate / alpha)
    param = 2.0 * rate * math.log(2.0) / alpha  # = ln A^2
    n = np.arange(1, n_max + 1)
    log_pmf = (n - 1) * math.log(param) - gammaln(n) - param
    pmf = np.exp(log_pmf)
    return NStarDistribution(a, param, pmf, tail_mass=max(0.0, 1.0 - pmf.sum()))


def m_epsilon(rate: float, alpha: float, eps: float) -> int:
    """Smallest link count covering the optimal choice with probability 1-eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    param = 2.0 * rate * math.log(2.0) / alpha
    cum = 0.0
    limit = int(param + 40.0 * math.sqrt(param) + 60.0)
    for n in range(1, limit + 1):
        cum += math.exp((n - 1) * math.log(param) - math.lgamma(n) - param)
        if cum >= 1.0 - eps:
            return n
    raise RuntimeError("cumulative scan failed to reach the target")


def _poisson_cdf(k: int, t: float) -> float:
    """P{Poisson(t) <= k}, accumulated from log-space terms."""
    if t <= 0:
        return 1.0
    return float(
        sum(math.exp(-t + i * math.log(t) - math.lgamma(i + 1)) for i in range(k + 1))
    )


def _solve_count_tail(k: int, target: float, t_cap: float) -> float:
    """Smallest t with P{Poisson(t) <= k} <= target (the CDF falls in t)."""
    lo, hi = 0.0, max(float(k), 1.0)
    while _poisson_cdf(k, hi) > target:
        lo, hi = hi, hi * 2.0
        if hi > t_cap:
            raise BracketingFailed(f"no crossing below t = {t_cap}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _poisson_cdf(k, mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def lambda_epsilon_delta(
    rate: float,
    alpha: float,
    eps: float,
    delta: float,
    radius_m: float,
    t_cap: float = 1e9,
) -> float:
    """Minimum AP density (points/km^2) placing M_eps APs in range whp.

    Infimum over densities such that a disk of ``radius_m`` meters holds at
    least M_eps points with probability 1 - delta; found by a bracketing
    scan plus bisection on the dimensionless mean count t = lambda pi r^2.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if radius_m <= 0:
        raise ValueError("radius must be positive")
    m = m_epsilon(rate, alpha, eps)
    t = _solve_count_tail(m - 1, delta, t_cap)
    r_km = radius_m / 1000.0
    return t / (math.pi * r_km ** 2)


@dataclass(frozen=True)
class EmpiricalNStar:
    """Monte Carlo link-count histogram over fresh PPP deployments."""

    rate: float
    alpha: float
    intensity: float
    trials: int
    seed: int
    counts: np.ndarray  # counts[k] is the number of trials with N* = k+1
    overflow: int
    region_radius: float

    @property
    def pmf(self) -> np.ndarray:
        return self.counts / self.trials


def _mc_region_radius(rate: float, alpha: float, intensity: float) -> tuple[float, int]:
    """Disk radius keeping edge truncation below MC_EDGE_MISS_PROB.

    Sized so the (N_cap)-th nearest AP lies inside with probability
    1 - MC_EDGE_MISS_PROB, with N_cap comfortably above any plausible N*.
    """
    n_cap = m_epsilon(rate, alpha, MC_EDGE_MISS_PROB) + 10
    t = _solve_count_tail(n_cap - 1, MC_EDGE_MISS_PROB, t_cap=1e9)
    return math.sqrt(t / (intensity * math.pi)), n_cap


def _mc_chunk_counts(
    rate: float,
    alpha: float,
    intensity: float,
    n_trials: int,
    seed: int,
    stream: int,
    chunk_idx: int,
    radius: float,
    n_max: int,
    mem_budget: int,
) -> np.ndarray:
    """Link-count histogram over one deterministic chunk of trials.

    Distances are drawn through the conditional-uniform property of the
    PPP on a disk: given the count, squared distances are i.i.d. uniform
    on (0, radius^2).  Identical in law to sorting a sampled deployment.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(stream, chunk_idx))
    rng = np.random.Generator(np.random.Philox(seed=ss))
    t = intensity * math.pi * radius ** 2
    counts = rng.poisson(t, n_trials)
    if (counts == 0).any():
        raise RegionTooSmall("auto-sized region produced an empty deployment")
    width = int(counts.max())
    if 8 * n_trials * width > mem_budget:
        raise RegionTooSmall(
            f"chunk needs {8 * n_trials * width} bytes, budget {mem_budget}"
        )
    sq = rng.random((n_trials, width)) * radius ** 2
    sq[np.arange(width)[None, :] >= counts[:, None]] = np.inf
    sq.sort(axis=1)
    ln_a = rate * math.log(2.0) / alpha
    with np.errstate(invalid="ignore", divide="ignore"):
        nstar = _n_star_rows(0.5 * np.log(sq), ln_a)
    hist = np.bincount(np.minimum(nstar, n_max + 1), minlength=n_max + 2)
    return hist[1:]  # index 0 unused; last slot collects overflow


def n_star_pmf_montecarlo(
    rate: float,
    alpha: float,
    intensity: float,
    trials: int,
    seed: int,
    n_max: int | None = None,
    stream: int = 0,
    map_fn=map,
    mem_budget: int = 1 << 28,
) -> EmpiricalNStar:
    """Empirical link-count pmf over fresh PPP deployments.

    Deterministic for a given seed: trials are processed in fixed-size
    chunks whose generator streams depend only on (seed, stream, chunk),
    so the result is identical however the chunks are mapped.
    """
    if trials < 1000:
        raise ValueError("trials must be >= 1000")
    if intensity <= 0:
        raise ValueError("intensity must be positive")
    radius, n_cap = _mc_region_radius(rate, alpha, intensity)
    if n_max is None:
        n_max = n_cap
    n_chunks = (trials + MC_CHUNK_TRIALS - 1) // MC_CHUNK_TRIALS
    sizes = [
        min(MC_CHUNK_TRIALS, trials - i * MC_CHUNK_TRIALS) for i in range(n_chunks)
    ]
    args = [
        (rate, alpha, intensity, sizes[i], seed, stream, i, radius, n_max, mem_budget)
        for i in range(n_chunks)
    ]
    hists = list(map_fn(_mc_chunk_counts_star, args))
    total = np.sum(hists, axis=0)
    return EmpiricalNStar(
        rate=rate,
        alpha=alpha,
        intensity=intensity,
        trials=trials,
        seed=seed,
        counts=total[:n_max],
        overflow=int(total[n_max]),
        region_radius=radius,
    )


def _mc_chunk_counts_star(args) -> np.ndarray:
    return _mc_chunk_counts(*args)


def total_variation(p, q) -> float:
    """Total variation distance between two pmfs (padded to equal length)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = max(p.size, q.size)
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: p.size] = p
    qq[: q.size] = q
    # unassigned tail mass on either side also separates the distributions
    tail = abs((1.0 - pp.sum()) - (1.0 - qq.sum()))
    return 0.5 * (np.abs(pp - qq).sum() + tail)
