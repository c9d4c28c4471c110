"""Offloading task model, rank-1 mmWave channel response, single-link power.

An offloading round is uplink transfer + remote execution + downlink return.
With a rank-1 line-of-sight channel the achievable spectral efficiency is
log2(1 + a*p), where the response ``a`` (in 1/W) folds beamforming gain,
path loss, and noise power into one coefficient.

Conventions used throughout the package:

* rates are spectral efficiencies in bit/s/Hz; the bandwidth enters only
  through the bit time T_b = 1/B,
* dB/dBm conversion happens at construction boundaries only; everything
  internal is linear (W, 1/W).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDistance, LatencyInfeasible

__all__ = [
    "OffloadTask",
    "FriisParams",
    "ChannelSet",
    "dbm_to_watt",
    "watt_to_dbm",
    "r_min",
    "gain_from_distance",
    "single_link_min_power",
    "check_budget",
]


def dbm_to_watt(dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** (dbm / 10.0) * 1e-3


def watt_to_dbm(watt: float) -> float:
    """Convert a power in watts to dBm."""
    return 10.0 * math.log10(watt * 1e3)


@dataclass(frozen=True)
class OffloadTask:
    """Latency and computation parameters of one offloading request.

    Attributes:
        n_bits: information bits to upload.
        cpu_cycles: CPU cycles the task needs on the server.
        server_rate: server speed in cycles/s.
        return_delay: downlink time for the result, in s.
        deadline: end-to-end latency budget, in s.
        bandwidth: channel bandwidth in Hz (bit time is 1/bandwidth).
    """

    n_bits: int
    cpu_cycles: float
    server_rate: float
    return_delay: float
    deadline: float
    bandwidth: float

    def __post_init__(self):
        if self.n_bits < 1:
            raise ValueError("n_bits must be >= 1")
        if self.bandwidth <= 0 or self.server_rate <= 0:
            raise ValueError("bandwidth and server_rate must be positive")
        if self.cpu_cycles < 0 or self.return_delay < 0:
            raise ValueError("cpu_cycles and return_delay must be >= 0")
        if self.deadline <= self.exec_time + self.return_delay:
            raise LatencyInfeasible(
                f"deadline {self.deadline} s leaves no transmission window "
                f"(execution {self.exec_time} s + return {self.return_delay} s)"
            )

    @property
    def bit_time(self) -> float:
        return 1.0 / self.bandwidth

    @property
    def exec_time(self) -> float:
        return self.cpu_cycles / self.server_rate


@dataclass(frozen=True)
class FriisParams:
    """Physical-layer constants mapping distance to channel response.

    ``noise_power`` is the linear noise power in W.  Use :meth:`from_dbm`
    to build from a dBm noise figure.  For free space (``alpha == 2``) the
    constant ``b = rx_gain * tx_gain * (wavelength / 4 pi)^2`` is derived;
    for any other path-loss exponent ``b`` must be supplied explicitly,
    because the free-space closed form no longer applies.
    """

    rx_gain: float
    tx_gain: float
    wavelength: float
    noise_power: float
    alpha: float = 2.0
    b: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("rx_gain", "tx_gain", "wavelength", "noise_power", "alpha"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.b is None:
            if self.alpha != 2.0:
                raise ValueError("b must be supplied explicitly when alpha != 2")
            object.__setattr__(
                self,
                "b",
                self.rx_gain * self.tx_gain * (self.wavelength / (4.0 * math.pi)) ** 2,
            )
        elif self.b <= 0:
            raise ValueError("b must be positive")

    @classmethod
    def from_dbm(cls, rx_gain, tx_gain, wavelength, noise_dbm, alpha=2.0, b=None):
        """Build parameters with the noise level given in dBm."""
        return cls(rx_gain, tx_gain, wavelength, dbm_to_watt(noise_dbm), alpha, b)


@dataclass(frozen=True)
class ChannelSet:
    """Per-link channel responses, best link first.

    ``gains`` holds the responses a_i in 1/W sorted non-increasing.  When
    the set was derived from a deployment, ``distances`` carries the
    matching link distances sorted ascending.
    """

    gains: np.ndarray
    distances: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        object.__setattr__(self, "gains", g)
        if g.ndim != 1 or g.size == 0:
            raise ValueError("gains must be a non-empty 1-D sequence")
        if np.any(g <= 0):
            raise ValueError("gains must be strictly positive")
        if np.any(np.diff(g) > 0):
            raise ValueError("gains must be sorted non-increasing")
        if self.distances is not None:
            d = np.asarray(self.distances, dtype=float)
            object.__setattr__(self, "distances", d)
            if d.shape != g.shape:
                raise ValueError("distances must match gains in length")
            if np.any(np.diff(d) < 0):
                raise ValueError("distances must be sorted ascending")

    def __len__(self) -> int:
        return self.gains.size

    @classmethod
    def from_distances(cls, params: FriisParams, distances) -> "ChannelSet":
        """Derive the gain set from ascending link distances."""
        d = np.sort(np.asarray(distances, dtype=float))
        gains = np.array([gain_from_distance(params, x) for x in d])
        return cls(gains=gains, distances=d)

    def head(self, n: int) -> "ChannelSet":
        """The best ``n`` links of this set."""
        d = None if self.distances is None else self.distances[:n]
        return ChannelSet(self.gains[:n], d)

    def consistent_with(self, params: FriisParams, rtol: float = 1e-12) -> bool:
        """Check gains against ``b / (noise * d^alpha)`` at the stored distances."""
        if self.distances is None:
            return True
        expect = params.b / (params.noise_power * self.distances ** params.alpha)
        return bool(np.allclose(self.gains, expect, rtol=rtol, atol=0.0))


def r_min(task: OffloadTask) -> float:
    """Minimum spectral efficiency (bit/s/Hz) meeting the latency budget.

    The uplink window is what remains of the deadline after execution and
    return; the rate must push all bits through it.
    """
    window = task.deadline - task.exec_time - task.return_delay
    if window <= 0:  # unreachable for a validated task, kept as a guard
        raise LatencyInfeasible("no transmission window remains")
    return task.n_bits * task.bit_time / window


def gain_from_distance(params: FriisParams, d: float) -> float:
    """Channel response a = b / (noise * d^alpha) at distance ``d`` meters."""
    if d <= 0:
        raise InvalidDistance(f"distance must be positive, got {d}")
    return params.b / (params.noise_power * d ** params.alpha)


def single_link_min_power(a: float, rate: float) -> float:
    """Least transmit power (W) achieving ``rate`` on one link of response ``a``."""
    if a <= 0:
        raise ValueError("channel response must be positive")
    if rate <= 0:
        raise ValueError("rate must be positive")
    return (2.0 ** rate - 1.0) / a


def check_budget(p: float, p_max: float) -> bool:
    """True when ``p`` fits in the (inclusive) power budget ``p_max``."""
    if p < 0:
        raise ValueError("power must be >= 0")
    if p_max <= 0:
        raise ValueError("budget must be positive")
    return p <= p_max
