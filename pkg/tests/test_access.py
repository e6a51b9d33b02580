"""Application-access tests.

The expected-outcome oracle enumerates all 2^s clearance patterns of an
application set directly; the library's closed forms must agree exactly.
"""

import itertools
import math

import numpy as np
import pytest

from matchlab.access import (
    AccessDistribution,
    RANDOM_K,
    TOP_K,
    Strategy,
    apply_strategy,
    expected_outcome_for_set,
    parse_kappa,
    parse_strategy,
    sample_k,
)
from matchlab.continuum import MONO, POLY, MarketSpec
from matchlab.distributions import cdf, uniform
from matchlab.seeds import stream


def spec_for(mode, m=6):
    return MarketSpec(m=m, S=0.5, value_dist=uniform(0, 1),
                      noise_dist=uniform(-0.5, 0.5), mode=mode)


class TestAccessDistribution:
    def test_uniform_weights(self):
        k = AccessDistribution.uniform(4)
        assert k.weights == (0.25, 0.25, 0.25, 0.25)
        assert k.max_k == 4

    def test_point_mass(self):
        k = AccessDistribution.point_mass(3)
        assert k.weights == (0.0, 0.0, 1.0)
        assert k.max_k == 3

    def test_validates_weights(self):
        with pytest.raises(ValueError):
            AccessDistribution(())
        with pytest.raises(ValueError):
            AccessDistribution((0.5, 0.6))
        with pytest.raises(ValueError):
            AccessDistribution((-0.1, 1.1))

    def test_max_k_ignores_trailing_zeros(self):
        k = AccessDistribution((0.5, 0.5, 0.0))
        assert k.max_k == 2


class TestParsing:
    def test_uniform_form(self):
        assert parse_kappa("uniform(1..5)") == AccessDistribution.uniform(5)

    def test_pointmass_form(self):
        assert parse_kappa("pointmass(4)") == AccessDistribution.point_mass(4)

    def test_weights_form(self):
        got = parse_kappa("weights [0.25, 0.75]")
        assert got == AccessDistribution((0.25, 0.75))

    def test_rejects_garbage(self):
        for text in ["", "uniform(0..5)", "uniform(3..1)", "weights []", "zipf(2)"]:
            with pytest.raises(ValueError):
                parse_kappa(text)

    def test_strategy_parse(self):
        assert parse_strategy("topk") == Strategy(TOP_K)
        assert parse_strategy("randomk") == Strategy(RANDOM_K)
        with pytest.raises(ValueError):
            parse_strategy("greedy")


class TestSampleK:
    def test_scalar_and_vector_shapes(self):
        kap = AccessDistribution.uniform(5)
        one = sample_k(kap, stream(31))
        assert isinstance(one, int) and 1 <= one <= 5
        many = sample_k(kap, stream(31), count=1000)
        assert many.shape == (1000,) and many.min() >= 1 and many.max() <= 5

    def test_frequencies_match_weights(self):
        kap = AccessDistribution((0.2, 0.0, 0.8))
        draws = sample_k(kap, stream(32), count=50_000)
        assert np.mean(draws == 1) == pytest.approx(0.2, abs=0.01)
        assert np.all(draws != 2)
        assert np.mean(draws == 3) == pytest.approx(0.8, abs=0.01)


class TestApplyStrategy:
    def test_topk_takes_prefix(self):
        ranking = (4, 2, 0, 3, 1)
        got = apply_strategy(Strategy(TOP_K), ranking, 3, stream(33))
        assert got == frozenset({4, 2, 0})

    def test_randomk_uniform_over_subsets(self):
        ranking = (0, 1, 2, 3)
        rng = stream(34)
        counts: dict[frozenset, int] = {}
        for _ in range(12_000):
            s = apply_strategy(Strategy(RANDOM_K), ranking, 2, rng)
            counts[s] = counts.get(s, 0) + 1
        assert len(counts) == 6
        for c in counts.values():
            assert c == pytest.approx(2000, abs=250)

    def test_k_bounds(self):
        with pytest.raises(ValueError):
            apply_strategy(Strategy(TOP_K), (0, 1), 3, stream(35))
        with pytest.raises(ValueError):
            apply_strategy(Strategy(TOP_K), (0, 1), 0, stream(35))


def oracle_outcome(mode: str, p: float, ranks: tuple[int, ...], m: int):
    """Enumerate clearance patterns of the applied set directly.

    Independent draws: each application clears with probability p; the
    applicant joins the best-ranked clearing firm. Shared draw: one clearance
    event covers the whole set and the applicant joins the best-ranked firm.
    """
    ranks = tuple(sorted(ranks))
    if mode == MONO:
        return p, (float(ranks[0]) if p > 0 else math.nan)
    match = 0.0
    rank_acc = 0.0
    for pattern in itertools.product([0, 1], repeat=len(ranks)):
        if not any(pattern):
            continue
        prob = math.prod(p if b else 1 - p for b in pattern)
        match += prob
        rank_acc += prob * min(r for r, b in zip(ranks, pattern) if b)
    if match == 0:
        return 0.0, math.nan
    return match, rank_acc / match


class TestExpectedOutcomeForSet:
    def test_matches_enumeration_poly(self):
        spec = spec_for(POLY)
        for P, v in [(0.6, 0.5), (0.8, 0.3), (0.4, 0.9)]:
            p = 1 - float(cdf(spec.noise_dist, P - v))
            for ranks in [(1,), (1, 2), (2, 4, 5), (1, 2, 3, 4, 5, 6)]:
                want = oracle_outcome(POLY, p, ranks, 6)
                got = expected_outcome_for_set(spec, P, v, ranks)
                assert got[0] == pytest.approx(want[0], abs=1e-12), (P, v, ranks)
                if not math.isnan(want[1]):
                    assert got[1] == pytest.approx(want[1], abs=1e-12), (P, v, ranks)

    def test_matches_enumeration_mono(self):
        spec = spec_for(MONO)
        P, v = 0.7, 0.55
        p = 1 - float(cdf(spec.noise_dist, P - v))
        for ranks in [(3,), (2, 5), (1, 4, 6)]:
            want = oracle_outcome(MONO, p, ranks, 6)
            got = expected_outcome_for_set(spec, P, v, ranks)
            assert got == pytest.approx(want)

    def test_impossible_offer_returns_zero_nan(self):
        spec = spec_for(POLY)
        match, rank = expected_outcome_for_set(spec, 2.0, 0.5, (1, 2))
        assert match == 0.0 and math.isnan(rank)

    def test_more_applications_weakly_help_poly(self):
        spec = spec_for(POLY)
        probs = [expected_outcome_for_set(spec, 0.7, 0.5, tuple(range(1, k + 1)))[0]
                 for k in range(1, 7)]
        assert all(b > a for a, b in zip(probs, probs[1:]))

    def test_mono_match_flat_in_set_size(self):
        spec = spec_for(MONO)
        probs = {expected_outcome_for_set(spec, 0.7, 0.5, tuple(range(1, k + 1)))[0]
                 for k in range(1, 7)}
        assert len(probs) == 1

    def test_validates_set(self):
        spec = spec_for(POLY)
        with pytest.raises(ValueError):
            expected_outcome_for_set(spec, 0.6, 0.5, ())
        with pytest.raises(ValueError):
            expected_outcome_for_set(spec, 0.6, 0.5, (1, 1))
        with pytest.raises(ValueError):
            expected_outcome_for_set(spec, 0.6, 0.5, (0,))
        with pytest.raises(ValueError):
            expected_outcome_for_set(spec, 0.6, 0.5, (7,))


class TestTopKIsBestSet:
    def test_top_k_maximizes_value_among_all_k_sets(self):
        # Under uniform preferences the expected utility of a set rises when
        # any member is swapped for a better-ranked one; top-k dominates.
        spec = spec_for(POLY, m=5)
        P, v = 0.65, 0.5
        k = 2
        best = expected_outcome_for_set(spec, P, v, (1, 2))
        for ranks in itertools.combinations(range(1, 6), k):
            got = expected_outcome_for_set(spec, P, v, ranks)
            # Same match probability for every k-set, weakly worse rank.
            assert got[0] == pytest.approx(best[0], abs=1e-12)
            assert got[1] >= best[1] - 1e-12
