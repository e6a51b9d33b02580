"""Finite-market engine: score generation, deferred acceptance, metrics.

A finite market instantiates a MarketSpec with n applicants and integer
capacities summing to round(S * n). Firms rank applicants by estimated
value (score); -inf marks firms outside an applicant's application set.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .access import RANDOM_K, TOP_K, Strategy, sample_k
from .continuum import MONO, MarketSpec
from .distributions import cdf, sample
from .preferences import UNMATCHED, PreferenceModel, PreferenceProfile, generate_preferences

NUM_VALUE_BINS = 20


@dataclass(frozen=True, eq=False)
class FiniteMarket:
    spec: MarketSpec
    values: np.ndarray          # (n,) true values
    preferences: PreferenceProfile
    capacities: np.ndarray      # (m,) seats per firm, sum < n
    scores: np.ndarray          # (n, m) estimated values, -inf off the application set
    applied: np.ndarray         # (n, m) bool application sets
    ks: np.ndarray | None       # (n,) drawn application counts, when an access law is set

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    @property
    def m(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True, eq=False)
class Matching:
    assignment: np.ndarray              # (n,) firm index or UNMATCHED
    rosters: tuple[tuple[int, ...], ...]  # matched applicants per firm


def split_capacity(total: int, m: int) -> np.ndarray:
    """Even split of total seats; any remainder goes to the lowest firm indices."""
    base, rem = divmod(total, m)
    caps = np.full(m, base, dtype=np.int64)
    caps[:rem] += 1
    return caps


def generate_market(
    spec: MarketSpec,
    n: int,
    pref_model: PreferenceModel,
    rng: np.random.Generator,
    strategy: Strategy | None = None,
) -> FiniteMarket:
    """Instantiate values, preferences, scores, and application sets.

    Mono draws one noise term per applicant and broadcasts it across the
    row; poly draws one per (applicant, firm). With an access law on the
    spec, each applicant draws k ~ kappa and applies per the strategy
    (top-k by default).
    """
    m = spec.m
    total_cap = round(spec.S * n)
    if n <= total_cap:
        raise ValueError(f"need n > total capacity, got n={n}, capacity={total_cap}")
    if total_cap < m:
        raise ValueError(f"total capacity {total_cap} leaves some of {m} firms empty")
    capacities = split_capacity(total_cap, m)
    values = sample(spec.value_dist, rng, n)
    profile = generate_preferences(pref_model, n, m, rng)
    if spec.mode == MONO:
        noise = sample(spec.noise_dist, rng, n)
        scores = np.repeat((values + noise)[:, None], m, axis=1)
    else:
        noise = sample(spec.noise_dist, rng, n * m).reshape(n, m)
        scores = values[:, None] + noise
    if spec.kappa is None:
        applied = np.ones((n, m), dtype=bool)
        ks = None
    else:
        ks = sample_k(spec.kappa, rng, n)
        strat = strategy if strategy is not None else Strategy(TOP_K)
        if strat.kind == TOP_K:
            position = profile.rank
        else:
            # Uniform k-subsets: rank firms by fresh random keys per applicant.
            keys = rng.random((n, m))
            position = np.argsort(np.argsort(keys, axis=1), axis=1) + 1
        applied = position <= ks[:, None]
        scores = np.where(applied, scores, -np.inf)
    return FiniteMarket(
        spec=spec,
        values=values,
        preferences=profile,
        capacities=capacities,
        scores=scores,
        applied=applied,
        ks=ks,
    )


def deferred_acceptance(market: FiniteMarket) -> Matching:
    """Applicant-proposing deferred acceptance.

    Applicants propose down their true preference order restricted to their
    application set; firms keep the top proposals by score with equal scores
    broken in favor of the lower applicant index; -inf is never admitted.
    The result is stable for the firms' score rankings and, under a common
    score ranking (mono), is the unique stable matching.
    """
    n, m = market.scores.shape
    order = market.preferences.order
    scores = market.scores
    caps = market.capacities
    assignment = np.full(n, UNMATCHED, dtype=np.int64)
    # Per-firm min-heap of (score, -applicant); heap[0] is the weakest admit.
    rosters: list[list[tuple[float, int]]] = [[] for _ in range(m)]
    next_slot = [0] * n
    free = list(range(n - 1, -1, -1))
    while free:
        i = free.pop()
        slot = next_slot[i]
        while slot < m:
            f = order[i, slot]
            slot += 1
            s = scores[i, f]
            if s == -math.inf:
                continue
            roster = rosters[f]
            if len(roster) < caps[f]:
                heapq.heappush(roster, (s, -i))
                assignment[i] = f
                break
            if (s, -i) > roster[0]:
                _, neg_j = heapq.heapreplace(roster, (s, -i))
                assignment[i] = f
                j = -neg_j
                assignment[j] = UNMATCHED
                free.append(j)
                break
        next_slot[i] = slot
    out_rosters = tuple(
        tuple(sorted(-neg for _, neg in rosters[f])) for f in range(m)
    )
    return Matching(assignment=assignment, rosters=out_rosters)


def verify_stability(market: FiniteMarket, matching: Matching) -> list[tuple[int, int]]:
    """List every blocking pair (applicant, firm).

    A pair blocks when the applicant strictly prefers the firm to their
    current match, applied there, and the firm either has a free seat or
    ranks the applicant above its weakest admit (score, then lower index).
    """
    n, m = market.scores.shape
    if matching.assignment.shape != (n,) or len(matching.rosters) != m:
        raise ValueError("matching dimensions do not match the market")
    worst: list[tuple[float, int] | None] = [None] * m
    full = [False] * m
    for f in range(m):
        roster = matching.rosters[f]
        full[f] = len(roster) >= market.capacities[f]
        if roster:
            worst[f] = min((market.scores[i, f], -i) for i in roster)
    order = market.preferences.order
    blocking = []
    for i in range(n):
        f_cur = matching.assignment[i]
        cur_rank = market.preferences.rank[i, f_cur] if f_cur != UNMATCHED else m + 1
        for slot in range(cur_rank - 1):
            f = order[i, slot]
            s = market.scores[i, f]
            if s == -math.inf:
                continue
            if not full[f] or (s, -i) > worst[f]:
                blocking.append((i, int(f)))
    return blocking


@dataclass(frozen=True, eq=False)
class MatchMetrics:
    """Per-replication aggregates; empty bins carry nan."""

    match_rate: float
    match_rate_by_value_bin: tuple[float, ...]
    avg_matched_value_percentile: float
    avg_rank_conditional_on_match: float
    top_choice_rate: float
    match_rate_by_k: tuple[tuple[int, float], ...] | None
    top_choice_rate_by_value_bin: tuple[float, ...]


def value_bins(spec: MarketSpec, values: np.ndarray, bins: int = NUM_VALUE_BINS) -> np.ndarray:
    """Assign each value to one of `bins` equal-probability bins of the value law."""
    u = np.asarray(cdf(spec.value_dist, values))
    return np.minimum((u * bins).astype(np.int64), bins - 1) + 1


def _bin_rates(flags: np.ndarray, bins: np.ndarray, num_bins: int) -> tuple[float, ...]:
    rates = []
    for b in range(1, num_bins + 1):
        sel = bins == b
        rates.append(float(flags[sel].mean()) if sel.any() else math.nan)
    return tuple(rates)


def compute_metrics(market: FiniteMarket, matching: Matching) -> MatchMetrics:
    """All per-replication aggregates for one matched market."""
    n = market.n
    assignment = matching.assignment
    matched = assignment != UNMATCHED
    bins = value_bins(market.spec, market.values)

    # Percentiles against the realized sample, 0 .. 1 across the n values.
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(market.values, kind="stable")] = np.arange(n)
    percentile = ranks / (n - 1) if n > 1 else np.zeros(n)

    if matched.any():
        idx = np.nonzero(matched)[0]
        pref_rank = market.preferences.rank[idx, assignment[idx]]
        avg_rank = float(pref_rank.mean())
        avg_percentile = float(percentile[matched].mean())
    else:
        avg_rank = math.nan
        avg_percentile = math.nan

    top_choice = matched & (assignment == market.preferences.order[:, 0])

    if market.ks is None:
        by_k = None
    else:
        by_k = []
        for k in range(1, market.spec.kappa.max_k + 1):
            sel = market.ks == k
            if sel.any():
                by_k.append((k, float(matched[sel].mean())))
        by_k = tuple(by_k)

    return MatchMetrics(
        match_rate=float(matched.mean()),
        match_rate_by_value_bin=_bin_rates(matched, bins, NUM_VALUE_BINS),
        avg_matched_value_percentile=avg_percentile,
        avg_rank_conditional_on_match=avg_rank,
        top_choice_rate=float(top_choice.mean()),
        match_rate_by_k=by_k,
        top_choice_rate_by_value_bin=_bin_rates(top_choice, bins, NUM_VALUE_BINS),
    )
