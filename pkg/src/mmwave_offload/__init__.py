"""Power- and latency-constrained multi-link offloading over mmWave links.

Library layout:

* :mod:`~mmwave_offload.channel` - task model, channel response, single link
* :mod:`~mmwave_offload.multilink` - optimal multi-link rate/power split
* :mod:`~mmwave_offload.geometry` - PPP deployments and the link-count law
* :mod:`~mmwave_offload.blocking` - line-of-sight obstruction probabilities
* :mod:`~mmwave_offload.overprovision` - average-rate water-filling
* :mod:`~mmwave_offload.erasure` - block-erasure outage and coding analysis
* :mod:`~mmwave_offload.experiments` / :mod:`~mmwave_offload.cli` - CSV runner
"""

__version__ = "0.1.0"

from .channel import (
    ChannelSet,
    FriisParams,
    OffloadTask,
    check_budget,
    dbm_to_watt,
    gain_from_distance,
    r_min,
    single_link_min_power,
    watt_to_dbm,
)
from .multilink import (
    AllocationPlan,
    allocate,
    allocate_for_rate,
    grid_oracle,
    optimal_link_count,
    total_power_closed_form,
    two_link_allocate,
)
from .geometry import (
    Deployment,
    DiskRegion,
    EmpiricalNStar,
    NStarDistribution,
    SquareRegion,
    distance_density,
    lambda_epsilon_delta,
    m_epsilon,
    n_star_of_deployment,
    n_star_pmf_analytic,
    n_star_pmf_montecarlo,
    sample_ppp,
    sample_uniform,
    total_variation,
)
from .blocking import BlockageEnv, link_blocking_probs, p_on
from .overprovision import (
    LinkStateSpace,
    OverprovisionSolution,
    solve_two_link_closed_form,
    solve_waterfill,
    two_link_active_set,
)
from .erasure import (
    BlockCodeSpec,
    CodedPlan,
    ErasurePattern,
    LinearCode,
    UncodedPlan,
    block_diversity,
    coded_plan_at_rate,
    exact_outage,
    load_code,
    outage_bounds,
    plan_coded,
    plan_uncoded,
    singleton_bound,
    uncoded_outage,
    word_error_probability,
)
from .experiments import ExperimentConfig, run_experiment, validate_config
from . import errors
