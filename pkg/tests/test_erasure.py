import itertools
import math

import numpy as np
import pytest

from mmwave_offload import (
    BlockCodeSpec,
    ChannelSet,
    ErasurePattern,
    LinearCode,
    allocate_for_rate,
    block_diversity,
    coded_plan_at_rate,
    exact_outage,
    load_code,
    optimal_link_count,
    outage_bounds,
    plan_coded,
    plan_uncoded,
    singleton_bound,
    uncoded_outage,
    word_error_probability,
)
from mmwave_offload.erasure import gf2_rank
from mmwave_offload.errors import (
    CodeTooLarge,
    NoFeasibleRate,
    OutageUnreachable,
    TooManyBlocks,
)

RNG = np.random.default_rng(20240812)


def random_spec(rng, n_max=10):
    n = int(rng.integers(1, n_max + 1))
    lengths = np.sort(rng.integers(1, 12, size=n))[::-1]
    probs = np.sort(rng.uniform(0.0, 0.9, size=n))
    rate = float(rng.uniform(0.05, 1.0))
    return BlockCodeSpec(lengths, probs, rate)


def random_code(rng, k_max=10, n_blocks_max=5):
    n_blocks = int(rng.integers(1, n_blocks_max + 1))
    lengths = np.sort(rng.integers(1, 5, size=n_blocks))[::-1]
    n_c = int(lengths.sum())
    k = int(rng.integers(1, min(n_c, k_max) + 1))
    while True:
        g = rng.integers(0, 2, size=(k, n_c)).astype(np.uint8)
        if gf2_rank(g) == k:
            return LinearCode(g, lengths)


def brute_outage(spec, threshold=None):
    """Reference implementation: plain nested loops, no vectorization."""
    thr = spec.info_bits if threshold is None else threshold
    total = 0.0
    for bits in itertools.product([0, 1], repeat=spec.n_blocks):
        received = sum(
            int(n) for n, b in zip(spec.block_lengths, bits) if b == 0
        )
        if received < thr:
            prob = 1.0
            for p, b in zip(spec.erasure_probs, bits):
                prob *= p if b else 1.0 - p
            total += prob
    return total


class TestSpecValidation:
    def test_rejects_bad_orderings(self):
        with pytest.raises(ValueError):
            BlockCodeSpec([2, 4], [0.1, 0.2], 0.5)
        with pytest.raises(ValueError):
            BlockCodeSpec([4, 2], [0.2, 0.1], 0.5)
        with pytest.raises(ValueError):
            BlockCodeSpec([4, 2], [0.1, 0.2], 0.0)

    def test_pattern_type(self):
        spec = BlockCodeSpec([4, 2], [0.1, 0.2], 0.5)
        assert ErasurePattern([0, 1]).matches(spec)
        assert not ErasurePattern([0, 1, 1]).matches(spec)
        with pytest.raises(ValueError):
            ErasurePattern([0, 2])


class TestExactOutage:
    def test_single_block(self):
        spec = BlockCodeSpec([5], [0.3], 0.8)
        assert exact_outage(spec) == pytest.approx(0.3, rel=1e-12)

    def test_two_block_threshold_strictness(self):
        # 4 received bits meet the threshold exactly: not outage
        spec = BlockCodeSpec([4, 4], [0.1, 0.2], 0.5)
        assert exact_outage(spec) == pytest.approx(0.02, rel=1e-12)

    def test_tiny_rate_needs_total_loss(self):
        spec = BlockCodeSpec([3, 2], [0.2, 0.4], 0.01)
        assert exact_outage(spec) == pytest.approx(0.08, rel=1e-12)

    def test_block_cap(self):
        with pytest.raises(TooManyBlocks):
            exact_outage(BlockCodeSpec(np.ones(26, dtype=int), np.full(26, 0.1), 0.5))

    def test_matches_plain_enumeration(self):
        for _ in range(100):
            spec = random_spec(RNG, n_max=8)
            assert exact_outage(spec) == pytest.approx(brute_outage(spec), abs=1e-12)

    def test_monotone_in_erasure_probs(self):
        spec = random_spec(RNG, n_max=6)
        bumped = BlockCodeSpec(
            spec.block_lengths,
            np.minimum(spec.erasure_probs + 0.05, 1.0),
            spec.rate,
        )
        assert exact_outage(bumped) >= exact_outage(spec) - 1e-12


class TestOutageBounds:
    def test_collapse_example(self):
        spec = BlockCodeSpec([4, 4], [0.1, 0.2], 0.5)
        lower, upper = outage_bounds(spec)
        assert lower == pytest.approx(0.02, rel=1e-12)
        assert upper == pytest.approx(0.02, rel=1e-12)

    def test_zero_probs(self):
        spec = BlockCodeSpec([4, 3], [0.0, 0.0], 0.7)
        assert outage_bounds(spec) == (0.0, 0.0)

    def test_sandwich_random(self):
        for _ in range(300):
            spec = random_spec(RNG)
            lower, upper = outage_bounds(spec)
            exact = exact_outage(spec)
            assert lower - 1e-12 <= exact <= upper + 1e-12


class TestSingletonBound:
    def test_equal_blocks(self):
        spec = BlockCodeSpec([4, 4, 4, 4], [0.1] * 4, 0.5)
        assert singleton_bound(spec) == 3

    def test_rate_one_kills_diversity(self):
        spec = BlockCodeSpec([4, 4, 4, 4], [0.1] * 4, 1.0)
        assert singleton_bound(spec) == 1
        uneven = BlockCodeSpec([7, 2, 1], [0.1] * 3, 1.0)
        assert singleton_bound(uneven) == 1

    def test_equal_block_closed_form(self):
        # with equal blocks the bound reduces to 1 + floor(N (1 - R_C))
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            size = int(rng.integers(1, 6))
            k = int(rng.integers(1, n * size + 1))
            rate = k / (n * size)
            spec = BlockCodeSpec([size] * n, [0.1] * n, rate)
            got = singleton_bound(spec)
            assert 1 <= got <= n
            expect = int(1 + math.floor(n - k / size))
            assert got == expect

    def test_no_full_diversity_condition(self):
        # whenever the information content exceeds the average tail block,
        # full diversity is impossible
        for _ in range(200):
            spec = random_spec(RNG, n_max=6)
            n = spec.n_blocks
            from mmwave_offload.erasure import _tail_index

            ell = _tail_index(spec.block_lengths, spec.info_bits)
            mean_tail = spec.block_lengths[ell - 1 :].sum() / (n - ell + 1)
            if spec.info_bits > mean_tail:
                assert singleton_bound(spec) < n


class TestBlockDiversity:
    def test_repetition_full_diversity(self):
        for lengths in ([1, 1], [3, 2, 1], [2, 2, 2, 2]):
            g = np.ones((1, int(sum(lengths))), dtype=np.uint8)
            code = LinearCode(g, sorted(lengths, reverse=True))
            assert block_diversity(code) == len(lengths)

    def test_identity_one_bit_blocks(self):
        n = 5
        code = LinearCode(np.eye(n, dtype=np.uint8), [1] * n)
        assert block_diversity(code) == 1

    def test_too_large(self):
        g = np.eye(21, 25, dtype=np.uint8)
        with pytest.raises(CodeTooLarge):
            block_diversity(LinearCode(g, [25]))

    def test_bounded_by_singleton(self):
        for _ in range(300):
            code = random_code(RNG)
            spec = code.induced_spec(np.full(code.n_blocks, 0.1))
            assert block_diversity(code) <= singleton_bound(spec)


class TestWordError:
    def test_two_block_repetition(self):
        code = LinearCode(np.ones((1, 2), dtype=np.uint8), [1, 1])
        assert word_error_probability(code, [0.1, 0.2]) == pytest.approx(
            0.5 * 0.1 * 0.2, rel=1e-12
        )

    def test_full_diversity_survives_single_erasures(self):
        # any pattern erasing fewer blocks than the diversity decodes
        code = LinearCode(np.ones((1, 6), dtype=np.uint8), [3, 2, 1])
        p = np.array([0.0, 0.3, 0.0])  # only single-block patterns possible
        assert word_error_probability(code, p) == 0.0

    def test_outage_patterns_cost_at_least_half(self):
        # rank cannot exceed the received bit count, so every outage
        # pattern contributes at least half its probability
        for _ in range(200):
            code = random_code(RNG)
            probs = np.sort(RNG.uniform(0.0, 0.6, size=code.n_blocks))
            pew = word_error_probability(code, probs)
            pout = exact_outage(code.induced_spec(probs))
            assert pew >= 0.5 * pout - 1e-12

    def test_too_large(self):
        g = np.eye(21, 30, dtype=np.uint8)
        with pytest.raises(CodeTooLarge):
            word_error_probability(LinearCode(g, [2] * 15), np.full(15, 0.1))


class TestGf2:
    def test_rank_against_span_enumeration(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(1, 10))
            m = rng.integers(0, 2, size=(k, n)).astype(np.uint8)
            span = {tuple(np.zeros(n, dtype=int))}
            for combo in itertools.product([0, 1], repeat=k):
                v = (np.asarray(combo) @ m) % 2
                span.add(tuple(int(x) for x in v))
            assert 2 ** gf2_rank(m) == len(span)


class TestCodeIO:
    def test_round_trip(self, tmp_path):
        code = random_code(RNG)
        path = tmp_path / "code.txt"
        path.write_text(code.to_text(), encoding="ascii")
        loaded = load_code(path)
        assert np.array_equal(loaded.generator, code.generator)
        assert np.array_equal(loaded.block_lengths, code.block_lengths)

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            LinearCode.from_text("2 3 1\n3\n111\n")  # missing one row
        with pytest.raises(ValueError):
            LinearCode.from_text("1 3 1\n3\n1x1\n")
        with pytest.raises(ValueError):
            LinearCode.from_text("1 3 2\n3\n111\n")  # lengths disagree

    def test_dependent_rows_rejected(self):
        g = np.array([[1, 1, 0], [1, 1, 0]], dtype=np.uint8)
        with pytest.raises(ValueError):
            LinearCode(g, [2, 1])


class TestUncodedOutage:
    def test_examples(self):
        assert uncoded_outage([0.4], 1) == pytest.approx(0.4)
        assert uncoded_outage([0.1, 0.2], 2) == pytest.approx(0.28, rel=1e-12)

    def test_strictly_increasing_in_links(self):
        probs = np.sort(RNG.uniform(0.01, 0.5, size=6))
        vals = [uncoded_outage(probs, n) for n in range(1, 7)]
        assert np.all(np.diff(vals) > 0)


def random_link_instance(rng, n_links=8):
    gains = np.sort(np.exp(rng.uniform(-2, 2, size=n_links)))[::-1]
    probs = np.sort(rng.uniform(0.0, 0.25, size=n_links))
    rate = float(rng.uniform(2.0, 10.0))
    return ChannelSet(gains), probs, rate


class TestPlanUncoded:
    def test_no_blocking_keeps_all_optimal_links(self):
        cs, _, rate = random_link_instance(RNG)
        probs = np.zeros(len(cs))
        plan = plan_uncoded(cs, probs, rate, 10_000, 0.05)
        assert plan.n_links == plan.n_star == optimal_link_count(cs, rate)
        assert plan.outage == 0.0

    def test_best_link_too_risky(self):
        cs, probs, rate = random_link_instance(RNG)
        probs = np.sort(np.maximum(probs, 0.3))
        with pytest.raises(OutageUnreachable):
            plan_uncoded(cs, probs, rate, 10_000, 0.05)

    def test_maximality(self):
        hit_interior = 0
        for _ in range(100):
            cs, probs, rate = random_link_instance(RNG)
            try:
                plan = plan_uncoded(cs, probs, rate, 10_000, 0.05)
            except OutageUnreachable:
                continue
            assert plan.n_links <= plan.n_star
            assert plan.outage <= 0.05
            if plan.n_links < plan.n_star:
                assert uncoded_outage(probs, plan.n_links + 1) > 0.05
                hit_interior += 1
        assert hit_interior > 0


class TestPlanCoded:
    def test_loose_target_is_uncoded(self):
        cs, probs, rate = random_link_instance(RNG)
        plan = plan_coded(cs, probs, rate, 10_000, p_out_target=1.0)
        assert plan.code_rate == 1.0
        ref = allocate_for_rate(cs, rate, 10_000)
        assert plan.n_links == ref.links_used
        assert plan.rates == pytest.approx(ref.rates, rel=1e-12)
        assert plan.total_power == pytest.approx(ref.total_power, rel=1e-12)
        assert list(plan.block_bits) == list(ref.bits)

    def test_redundancy_always_costs_power(self):
        for _ in range(300):
            cs, probs, rate = random_link_instance(RNG, n_links=6)
            uncoded_power = allocate_for_rate(cs, rate, 10_000).total_power
            r_c = float(RNG.choice([0.9, 0.5, 0.25]))
            coded = coded_plan_at_rate(cs, probs, rate, 10_000, r_c)
            assert coded.total_power > uncoded_power

    def test_more_links_with_redundancy(self):
        for _ in range(100):
            cs, probs, rate = random_link_instance(RNG, n_links=6)
            n_star = optimal_link_count(cs, rate)
            r_c = float(RNG.choice([0.9, 0.5, 0.25]))
            coded = coded_plan_at_rate(cs, probs, rate, 10_000, r_c)
            assert coded.n_links >= n_star

    def test_block_structure(self):
        for _ in range(100):
            cs, probs, rate = random_link_instance(RNG, n_links=6)
            r_c = float(RNG.choice([0.8, 0.4]))
            coded = coded_plan_at_rate(cs, probs, rate, 10_000, r_c)
            assert np.all(np.diff(coded.block_bits) <= 0)
            assert coded.block_bits.sum() == math.ceil(10_000 / r_c - 1e-9)
            # per-link time unchanged up to bit rounding: flooring moves a
            # link by < 1 bit, the first by at most n_links + 1 bits
            times = coded.block_bits / coded.rates
            slack = (coded.n_links + 1.0) / coded.rates
            assert np.all(np.abs(times - 10_000 / rate) <= slack)

    def test_no_feasible_rate(self):
        cs = ChannelSet(np.array([2.0, 1.0]))
        probs = np.array([0.95, 0.96])
        with pytest.raises(NoFeasibleRate):
            plan_coded(cs, probs, 4.0, 1000, 1e-6, rate_grid_step=0.25)

    def test_scan_returns_largest_feasible(self):
        cs, probs, rate = random_link_instance(RNG, n_links=6)
        probs = np.sort(np.minimum(probs + 0.1, 0.9))
        try:
            plan = plan_coded(cs, probs, rate, 10_000, 0.05, rate_grid_step=0.05)
        except NoFeasibleRate:
            return
        assert plan.outage <= 0.05
        finer = plan.code_rate + 0.05
        if finer <= 1.0:
            above = coded_plan_at_rate(cs, probs, rate, 10_000, finer)
            assert above.outage > 0.05
