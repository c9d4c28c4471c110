"""Exception hierarchy shared by all modules."""


class OffloadError(Exception):
    """Base class for every error raised by this package."""


class LatencyInfeasible(OffloadError):
    """The latency budget leaves no positive uplink transmission window."""


class InvalidDistance(OffloadError):
    """A link distance must be strictly positive."""


class BudgetExceeded(OffloadError):
    """The allocated total transmit power exceeds the supplied budget."""


class OracleTooLarge(OffloadError):
    """The brute-force rate grid exceeds the configured point budget."""


class EmptyDeployment(OffloadError):
    """An operation needs at least one access point in the deployment."""


class RegionTooSmall(OffloadError):
    """Monte Carlo region auto-sizing failed within the memory budget."""


class BracketingFailed(OffloadError):
    """The density scan found no crossing below the configured cap."""


class DegenerateAllBlocked(OffloadError):
    """Every link is blocked with probability one; no rate is achievable."""


class BisectionNoBracket(OffloadError):
    """The water-level bisection could not bracket the target rate."""


class Infeasible(OffloadError):
    """No power assignment meets the rate target within the budget."""


class TooManyBlocks(OffloadError):
    """Exhaustive erasure-pattern enumeration is capped at 25 blocks."""


class CodeTooLarge(OffloadError):
    """Codeword enumeration is capped to keep brute force tractable."""


class OutageUnreachable(OffloadError):
    """Even a single-link plan violates the outage target."""


class NoFeasibleRate(OffloadError):
    """No coding rate on the grid meets the outage target."""


class ConfigError(OffloadError):
    """Aggregate of all configuration validation failures."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
