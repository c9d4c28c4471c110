"""Config-driven experiment runner emitting deterministic CSV artifacts.

Each experiment id maps to one reproducible study: the deterministic
design tables, or a seeded Monte Carlo sweep over random deployments.
Monte Carlo trials are processed in fixed-size chunks whose random
streams depend only on (seed, chunk index), and chunk results are reduced
in chunk order, so the output bytes are identical for any worker count.

CSV layout: one header row, data rows, then '#'-prefixed footer comments
recording the seed, trial count, code version, RNG identity, and every
resolved parameter.  Monte Carlo experiments emit per-trial rows
(kind=trial) followed by the averaged curve (kind=mean).
"""

from __future__ import annotations

import math
import multiprocessing
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .blocking import BlockageEnv, link_blocking_probs
from .channel import ChannelSet, FriisParams, single_link_min_power
from .errors import ConfigError, NoFeasibleRate, OutageUnreachable
from .geometry import (
    PER_KM2,
    SquareRegion,
    lambda_epsilon_delta,
    m_epsilon,
    n_star_pmf_analytic,
    n_star_pmf_montecarlo,
    sample_uniform,
)
from .erasure import coded_plan_at_rate, plan_coded, plan_uncoded
from .multilink import allocate_for_rate, two_link_allocate
from .overprovision import solve_waterfill

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentConfig", "validate_config", "run_experiment", "EXPERIMENTS"]

CHUNK_TRIALS = 64

EXPERIMENTS = (
    "fig3",
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "fig10",
    "fig11",
    "table1",
    "table2",
)

# Per-experiment defaults; densities are given per km^2 here and converted
# to SI during validation.  "full" swaps in the large trial counts.
_BASE = {
    "seed": 42,
    "workers": 1,
    "full": False,
    "out": None,
    "alpha": 2.0,
    "target_outage": 0.05,
    "targets": (0.1, 0.05, 0.01),
    "rate_grid_step": 0.01,
    "n_bits": 100_000,
    "rx_gain": 128.0,
    "tx_gain": 32.0,
    "wavelength": 0.005,
    "noise_dbm": -82.96,
    "mean_w": 2.0,
    "mean_x": 2.0,
    "eps": 0.1,
    "delta": 0.1,
    "comm_range": 100.0,
    "mu": tuple(float(v) for v in range(0, 301, 25)),
    "lam": (100.0,),
    "code_rates": (1.0, 0.9, 0.75, 0.5),
    "link_counts": (1, 2, 3),
    "region_side": 200.0,
    "n_aps": 15,
    "r_min": (8.0,),
}

_PER_EXPERIMENT = {
    "fig3": dict(
        trials=2000,
        full_trials=10_000,
        region_side=100.0,
        n_aps=2,
        r_min=tuple(0.5 * k for k in range(1, 17)),
    ),
    "fig4": dict(
        trials=1000, full_trials=10_000, region_side=200.0, n_aps=5,
        r_min=(2.0, 4.0, 8.0),
    ),
    "fig5": dict(trials=100_000, full_trials=10_000_000, r_min=(2.0, 4.0, 8.0)),
    "fig6": dict(trials=100_000, full_trials=10_000_000, lam=(50.0, 200.0)),
    "fig7": dict(trials=200, full_trials=10_000, region_side=150.0, n_aps=5),
    "fig8": dict(trials=100, full_trials=10_000, region_side=300.0),
    "fig9": dict(
        trials=60, full_trials=10_000, region_side=300.0,
        mu=tuple(float(v) for v in range(0, 301, 50)),
    ),
    "fig10": dict(
        trials=50, full_trials=10_000, region_side=200.0, mean_w=1.0,
        r_min=(8.0, 16.0), mu=tuple(float(v) for v in range(0, 301, 50)),
    ),
    "fig11": dict(
        trials=100, full_trials=10_000, region_side=300.0,
        mu=(100.0, 200.0, 300.0),
        code_rates=tuple(round(0.05 * k, 2) for k in range(1, 21)),
    ),
    "table1": dict(trials=1, full_trials=1),
    "table2": dict(trials=1, full_trials=1),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved parameters of one experiment run.

    Densities (mu, lam) are stored in SI (points/m^2); the CSV footer
    echoes them back per km^2.
    """

    experiment: str
    seed: int
    trials: int
    workers: int
    full: bool
    out: str | None
    r_min: tuple
    mu: tuple
    lam: tuple
    region_side: float
    n_aps: int
    alpha: float
    target_outage: float
    targets: tuple
    code_rates: tuple
    link_counts: tuple
    rate_grid_step: float
    mean_w: float
    mean_x: float
    n_bits: int
    rx_gain: float
    tx_gain: float
    wavelength: float
    noise_dbm: float
    eps: float
    delta: float
    comm_range: float

    def friis(self) -> FriisParams:
        return FriisParams.from_dbm(
            self.rx_gain, self.tx_gain, self.wavelength, self.noise_dbm, self.alpha
        )


def _as_float_tuple(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    raise TypeError


def _as_int_tuple(value):
    if isinstance(value, int) and not isinstance(value, bool):
        return (int(value),)
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    raise TypeError


def _positive(x):
    return x > 0


_VALIDATORS = {
    # key: (coerce, check, description of the accepted values)
    "seed": (int, lambda v: 0 <= v < 2 ** 64, "integer in [0, 2^64)"),
    "trials": (int, lambda v: v >= 1, "integer >= 1"),
    "workers": (int, lambda v: v >= 1, "integer >= 1"),
    "full": (bool, lambda v: True, "boolean"),
    "out": (str, lambda v: len(v) > 0, "non-empty path"),
    "r_min": (_as_float_tuple, lambda t: all(v > 0 for v in t), "positive rates"),
    "mu": (_as_float_tuple, lambda t: all(v >= 0 for v in t), "densities >= 0"),
    "lam": (_as_float_tuple, lambda t: all(v > 0 for v in t), "densities > 0"),
    "region_side": (float, _positive, "positive meters"),
    "n_aps": (int, lambda v: v >= 1, "integer >= 1"),
    "alpha": (float, _positive, "positive exponent"),
    "target_outage": (float, lambda v: 0 < v <= 1, "probability in (0, 1]"),
    "targets": (
        _as_float_tuple,
        lambda t: all(0 < v <= 1 for v in t),
        "probabilities in (0, 1]",
    ),
    "code_rates": (
        _as_float_tuple,
        lambda t: all(0 < v <= 1 for v in t),
        "rates in (0, 1]",
    ),
    "link_counts": (_as_int_tuple, lambda t: all(v >= 1 for v in t), "counts >= 1"),
    "rate_grid_step": (float, lambda v: 0 < v <= 0.5, "step in (0, 0.5]"),
    "mean_w": (float, _positive, "positive meters"),
    "mean_x": (float, _positive, "positive meters"),
    "n_bits": (int, lambda v: v >= 1, "integer >= 1"),
    "rx_gain": (float, _positive, "positive linear gain"),
    "tx_gain": (float, _positive, "positive linear gain"),
    "wavelength": (float, _positive, "positive meters"),
    "noise_dbm": (float, lambda v: True, "dBm level"),
    "eps": (float, lambda v: 0 < v < 1, "probability in (0, 1)"),
    "delta": (float, lambda v: 0 < v < 1, "probability in (0, 1)"),
    "comm_range": (float, _positive, "positive meters"),
}


def validate_config(
    raw_text: str,
    experiment: str | None = None,
    overrides: dict | None = None,
) -> ExperimentConfig:
    """Parse and validate a TOML config, collecting every problem at once.

    CLI overrides take precedence over the file, which takes precedence
    over the per-experiment defaults.  Unknown keys are rejected.
    """
    problems = []
    file_cfg: dict = {}
    if raw_text.strip():
        try:
            file_cfg = tomllib.loads(raw_text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError([f"TOML parse error: {exc}"]) from exc

    merged = dict(file_cfg)
    for key, val in (overrides or {}).items():
        if val is not None:
            merged[key] = val
    if experiment is not None:
        merged["experiment"] = experiment

    exp = merged.pop("experiment", None)
    if exp is None:
        problems.append("experiment: missing (choose one of: " + ", ".join(EXPERIMENTS) + ")")
    elif exp not in EXPERIMENTS:
        problems.append(f"experiment: unknown id {exp!r}")
    if problems:
        raise ConfigError(problems)

    defaults = dict(_BASE)
    defaults.update(
        {k: v for k, v in _PER_EXPERIMENT[exp].items() if k != "full_trials"}
    )

    user_set_trials = "trials" in merged
    resolved = dict(defaults)
    for key, val in merged.items():
        if key == "full_trials":
            problems.append("full_trials: internal key, not settable")
            continue
        if key not in _VALIDATORS:
            problems.append(f"{key}: unknown key")
            continue
        coerce, check, desc = _VALIDATORS[key]
        try:
            coerced = coerce(val)
            if not check(coerced):
                raise ValueError
        except (TypeError, ValueError):
            problems.append(f"{key}: expected {desc}, got {val!r}")
            continue
        resolved[key] = coerced

    if exp in ("fig5", "fig6"):
        trials = resolved.get("trials", _PER_EXPERIMENT[exp]["trials"])
        if isinstance(trials, int) and trials < 1000:
            problems.append(f"trials: {exp} needs at least 1000, got {trials}")

    if problems:
        raise ConfigError(problems)

    if resolved.get("full") and not user_set_trials:
        resolved["trials"] = _PER_EXPERIMENT[exp]["full_trials"]

    # densities arrive per km^2; stored SI
    resolved["mu"] = tuple(v * PER_KM2 for v in resolved["mu"])
    resolved["lam"] = tuple(v * PER_KM2 for v in resolved["lam"])

    names = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(
        experiment=exp, **{k: v for k, v in resolved.items() if k in names}
    )


# ---------------------------------------------------------------------------
# deterministic chunked Monte Carlo plumbing
# ---------------------------------------------------------------------------


@contextmanager
def _mapper(workers: int):
    if workers <= 1:
        yield map
    else:
        with multiprocessing.get_context().Pool(workers) as pool:
            yield pool.map


def _chunk_args(cfg: ExperimentConfig):
    n_chunks = (cfg.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    for i in range(n_chunks):
        start = i * CHUNK_TRIALS
        yield cfg, i, start, min(CHUNK_TRIALS, cfg.trials - start)


def _chunk_rng(cfg: ExperimentConfig, chunk_idx: int) -> np.random.Generator:
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(0, chunk_idx))
    return np.random.Generator(np.random.Philox(seed=ss))


def _deployment_gains(cfg, rng, n_keep):
    dep = sample_uniform(cfg.n_aps, SquareRegion(cfg.region_side), rng)
    gains = ChannelSet.from_distances(cfg.friis(), dep.distances[:n_keep])
    return dep, gains


def _mean_rows(rows, key_cols, value_cols, skip_nan=False):
    """Group rows by the key columns and average the value columns.

    Grouping preserves first-appearance order, and sums accumulate in row
    order, keeping the reduction independent of how chunks were computed.
    """
    groups: dict = {}
    for row in rows:
        key = tuple(row[i] for i in key_cols)
        sums, counts = groups.setdefault(
            key, [[0.0] * len(value_cols), [0] * len(value_cols)]
        )
        for slot, i in enumerate(value_cols):
            v = row[i]
            if skip_nan and (v is None or (isinstance(v, float) and math.isnan(v))):
                continue
            sums[slot] += float(v)
            counts[slot] += 1
    out = []
    for key, (sums, counts) in groups.items():
        means = [s / c if c else math.nan for s, c in zip(sums, counts)]
        out.append((key, means))
    return out


# --- fig3: single vs double link average minimum power ---------------------


def _fig3_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rows = []
    for t in range(n):
        _, gains = _deployment_gains(cfg, rng, 2)
        a1, a2 = gains.gains
        for r in cfg.r_min:
            p1 = single_link_min_power(a1, r)
            p2 = two_link_allocate(a1, a2, r, cfg.n_bits).total_power
            rows.append(("trial", start + t, r, p1, p2))
    return rows


def _fig3(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig3_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2,), (3, 4)):
        rows.append(("mean", "", key[0], means[0], means[1]))
    return ["kind", "trial", "r_min", "power_1link_w", "power_2link_w"], rows


# --- fig4: average minimum power vs number of available APs ----------------


def _fig4_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rows = []
    for t in range(n):
        _, gains = _deployment_gains(cfg, rng, cfg.n_aps)
        for r in cfg.r_min:
            for n_avail in range(1, cfg.n_aps + 1):
                plan = allocate_for_rate(gains.head(n_avail), r, cfg.n_bits)
                rows.append(("trial", start + t, r, n_avail, plan.total_power))
    return rows


def _fig4(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig4_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4,)):
        rows.append(("mean", "", key[0], key[1], means[0]))
    return ["kind", "trial", "r_min", "n_available", "total_power_w"], rows


# --- fig5 / fig6: link-count pmf, analytic vs Monte Carlo ------------------


def _pmf_rows(cfg, map_fn, sweep):
    """sweep: list of (label_value, rate, intensity_si, stream)."""
    rows = []
    for label, rate, lam_si, stream in sweep:
        emp = n_star_pmf_montecarlo(
            rate,
            cfg.alpha,
            lam_si,
            cfg.trials,
            cfg.seed,
            stream=stream,
            map_fn=map_fn,
        )
        ana = n_star_pmf_analytic(rate, cfg.alpha, n_max=emp.counts.size)
        for i in range(emp.counts.size):
            rows.append(
                (
                    label,
                    i + 1,
                    ana.pmf[i],
                    emp.counts[i] / emp.trials,
                    int(emp.counts[i]),
                    emp.trials,
                    emp.seed,
                )
            )
    return rows


def _fig5(cfg, map_fn):
    sweep = [(r, r, cfg.lam[0], i) for i, r in enumerate(cfg.r_min)]
    rows = _pmf_rows(cfg, map_fn, sweep)
    cols = ["r_min", "n", "analytic_pmf", "empirical_pmf", "count", "trials", "seed"]
    return cols, rows


def _fig6(cfg, map_fn):
    rate = cfg.r_min[0]
    sweep = [
        (lam / PER_KM2, rate, lam, i) for i, lam in enumerate(cfg.lam)
    ]
    rows = _pmf_rows(cfg, map_fn, sweep)
    cols = [
        "lambda_per_km2",
        "n",
        "analytic_pmf",
        "empirical_pmf",
        "count",
        "trials",
        "seed",
    ]
    return cols, rows


# --- fig7: overprovisioned average power vs obstacle density ---------------


def _fig7_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rate = cfg.r_min[0]
    n_keep = max(cfg.link_counts)
    rows = []
    for t in range(n):
        dep, gains = _deployment_gains(cfg, rng, n_keep)
        for mu in cfg.mu:
            env = BlockageEnv(mu, cfg.mean_w, cfg.mean_x)
            probs = link_blocking_probs(env, dep, n_keep)
            for n_links in cfg.link_counts:
                sol = solve_waterfill(gains.head(n_links), probs[:n_links], rate)
                rows.append(
                    ("trial", start + t, mu / PER_KM2, n_links, sol.average_power)
                )
    return rows


def _fig7(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig7_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4,)):
        rows.append(("mean", "", key[0], key[1], means[0]))
    return ["kind", "trial", "mu_per_km2", "n_links", "average_power_w"], rows


# --- fig8: exact outage vs obstacle density for fixed coding rates ---------


def _fig8_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rate = cfg.r_min[0]
    rows = []
    for t in range(n):
        dep, gains = _deployment_gains(cfg, rng, cfg.n_aps)
        for mu in cfg.mu:
            env = BlockageEnv(mu, cfg.mean_w, cfg.mean_x)
            probs = link_blocking_probs(env, dep, cfg.n_aps)
            for r_c in cfg.code_rates:
                plan = coded_plan_at_rate(gains, probs, rate, cfg.n_bits, r_c)
                rows.append(
                    ("trial", start + t, mu / PER_KM2, r_c, plan.outage)
                )
    return rows


def _fig8(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig8_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4,)):
        rows.append(("mean", "", key[0], key[1], means[0]))
    return ["kind", "trial", "mu_per_km2", "code_rate", "outage"], rows


# --- fig9: maximum feasible coding rate vs obstacle density ----------------


def _fig9_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rate = cfg.r_min[0]
    rows = []
    for t in range(n):
        dep, gains = _deployment_gains(cfg, rng, cfg.n_aps)
        for mu in cfg.mu:
            env = BlockageEnv(mu, cfg.mean_w, cfg.mean_x)
            probs = link_blocking_probs(env, dep, cfg.n_aps)
            for target in cfg.targets:
                try:
                    plan = plan_coded(
                        gains, probs, rate, cfg.n_bits, target, cfg.rate_grid_step
                    )
                    r_c = plan.code_rate
                except NoFeasibleRate:
                    r_c = math.nan
                rows.append(("trial", start + t, mu / PER_KM2, target, r_c))
    return rows


def _fig9(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig9_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4,), skip_nan=True):
        rows.append(("mean", "", key[0], key[1], means[0]))
    return ["kind", "trial", "mu_per_km2", "target_outage", "max_code_rate"], rows


# --- fig10: uncoded vs coded average power under an outage target ----------


def _fig10_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rows = []
    for t in range(n):
        dep, gains = _deployment_gains(cfg, rng, cfg.n_aps)
        for mu in cfg.mu:
            env = BlockageEnv(mu, cfg.mean_w, cfg.mean_x)
            probs = link_blocking_probs(env, dep, cfg.n_aps)
            for rate in cfg.r_min:
                try:
                    unc = plan_uncoded(
                        gains, probs, rate, cfg.n_bits, cfg.target_outage
                    )
                    unc_power, unc_links = unc.plan.total_power, unc.n_links
                except OutageUnreachable:
                    unc_power, unc_links = math.nan, 0
                try:
                    cod = plan_coded(
                        gains,
                        probs,
                        rate,
                        cfg.n_bits,
                        cfg.target_outage,
                        cfg.rate_grid_step,
                    )
                    cod_power, cod_rc, cod_links = (
                        cod.total_power,
                        cod.code_rate,
                        cod.n_links,
                    )
                except NoFeasibleRate:
                    cod_power, cod_rc, cod_links = math.nan, math.nan, 0
                rows.append(
                    (
                        "trial",
                        start + t,
                        mu / PER_KM2,
                        rate,
                        unc_power,
                        unc_links,
                        0.0 if math.isnan(unc_power) else 1.0,
                        cod_power,
                        cod_rc,
                        cod_links,
                    )
                )
    return rows


def _fig10(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig10_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4, 5, 6, 7, 8, 9), skip_nan=True):
        rows.append(("mean", "", key[0], key[1], *means))
    cols = [
        "kind",
        "trial",
        "mu_per_km2",
        "r_min",
        "uncoded_power_w",
        "uncoded_links",
        "uncoded_feasible",
        "coded_power_w",
        "coded_rate",
        "coded_links",
    ]
    return cols, rows


# --- fig11: outage and power vs coding rate ---------------------------------


def _fig11_chunk(args):
    cfg, chunk_idx, start, n = args
    rng = _chunk_rng(cfg, chunk_idx)
    rate = cfg.r_min[0]
    rows = []
    for t in range(n):
        dep, gains = _deployment_gains(cfg, rng, cfg.n_aps)
        for mu in cfg.mu:
            env = BlockageEnv(mu, cfg.mean_w, cfg.mean_x)
            probs = link_blocking_probs(env, dep, cfg.n_aps)
            base_outage = probs[0]
            base_power = single_link_min_power(gains.gains[0], rate)
            for r_c in cfg.code_rates:
                plan = coded_plan_at_rate(gains, probs, rate, cfg.n_bits, r_c)
                rows.append(
                    (
                        "trial",
                        start + t,
                        mu / PER_KM2,
                        r_c,
                        plan.outage,
                        plan.total_power,
                        base_outage,
                        base_power,
                    )
                )
    return rows


def _fig11(cfg, map_fn):
    rows = [r for chunk in map_fn(_fig11_chunk, list(_chunk_args(cfg))) for r in chunk]
    for key, means in _mean_rows(rows, (2, 3), (4, 5, 6, 7)):
        rows.append(("mean", "", key[0], key[1], *means))
    cols = [
        "kind",
        "trial",
        "mu_per_km2",
        "code_rate",
        "coded_outage",
        "coded_power_w",
        "best_link_outage",
        "best_link_power_w",
    ]
    return cols, rows


# --- design tables -----------------------------------------------------------

TABLE_RATES = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)


def _table1(cfg, map_fn):
    rows = [
        (r, m_epsilon(r, cfg.alpha, 0.1), m_epsilon(r, cfg.alpha, 0.01))
        for r in TABLE_RATES
    ]
    return ["r_min", "m_eps_0_1", "m_eps_0_01"], rows


def _table2(cfg, map_fn):
    rows = []
    for r in TABLE_RATES:
        lam = lambda_epsilon_delta(r, cfg.alpha, cfg.eps, cfg.delta, cfg.comm_range)
        rows.append((r, m_epsilon(r, cfg.alpha, cfg.eps), lam, math.floor(lam)))
    return ["r_min", "m_eps", "lambda_per_km2", "lambda_floor"], rows


_RUNNERS = {
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig11": _fig11,
    "table1": _table1,
    "table2": _table2,
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    x = float(v)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _meta_lines(cfg: ExperimentConfig) -> list[str]:
    items = [
        ("experiment", cfg.experiment),
        ("seed", cfg.seed),
        ("trials", cfg.trials),
        ("full", cfg.full),
        ("version", __version__),
        ("numpy", np.__version__),
        ("rng", "numpy.random.Philox keyed by SeedSequence(seed, spawn_key=(stream, chunk))"),
        ("r_min", list(cfg.r_min)),
        ("mu_per_km2", [v / PER_KM2 for v in cfg.mu]),
        ("lambda_per_km2", [v / PER_KM2 for v in cfg.lam]),
        ("region_side_m", cfg.region_side),
        ("n_aps", cfg.n_aps),
        ("alpha", cfg.alpha),
        ("target_outage", cfg.target_outage),
        ("targets", list(cfg.targets)),
        ("code_rates", list(cfg.code_rates)),
        ("link_counts", list(cfg.link_counts)),
        ("rate_grid_step", cfg.rate_grid_step),
        ("mean_w_m", cfg.mean_w),
        ("mean_x_m", cfg.mean_x),
        ("n_bits", cfg.n_bits),
        ("rx_gain", cfg.rx_gain),
        ("tx_gain", cfg.tx_gain),
        ("wavelength_m", cfg.wavelength),
        ("noise_dbm", cfg.noise_dbm),
        ("eps", cfg.eps),
        ("delta", cfg.delta),
        ("comm_range_m", cfg.comm_range),
    ]

    def render(v):
        if isinstance(v, list):
            return "[" + ", ".join(_fmt(x) for x in v) + "]"
        return _fmt(v)

    return [f"# {k}: {render(v)}" for k, v in items]


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run one experiment and write its CSV; returns the output path.

    The file is assembled in memory and written in one shot, so failures
    never leave a partial artifact behind.
    """
    runner = _RUNNERS[cfg.experiment]
    with _mapper(cfg.workers) as map_fn:
        columns, rows = runner(cfg, map_fn)
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    lines += _meta_lines(cfg)
    path = Path(cfg.out) if cfg.out else Path(f"{cfg.experiment}.csv")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path
