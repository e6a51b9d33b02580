"""Differential application access: k laws, application strategies, ex-ante outcomes."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .continuum import MONO, MarketSpec
from .distributions import cdf

TOP_K = "topk"
RANDOM_K = "randomk"
STRATEGY_KINDS = (TOP_K, RANDOM_K)

# Exact afford-set enumeration is capped; larger sets would need Monte Carlo.
MAX_EXACT_SET = 20

_UNIFORM_RE = re.compile(r"^\s*uniform\s*\(\s*1\s*\.\.\s*(\d+)\s*\)\s*$", re.IGNORECASE)
_POINTMASS_RE = re.compile(r"^\s*pointmass\s*\(\s*(\d+)\s*\)\s*$", re.IGNORECASE)
_WEIGHTS_RE = re.compile(r"^\s*weights\s*\[(.*)\]\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class AccessDistribution:
    """Discrete law over how many firms an applicant may apply to.

    weights[i] is the probability of k = i + 1; weights sum to 1.
    """

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("access law needs at least one weight")
        if any(w < 0 for w in self.weights):
            raise ValueError("access weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"access weights must sum to 1, got {sum(self.weights)}")

    @property
    def max_k(self) -> int:
        # Largest application count with positive mass; trailing zero weights
        # must not widen the support.
        for k in range(len(self.weights), 0, -1):
            if self.weights[k - 1] > 0.0:
                return k
        raise AssertionError("weights sum to 1, so some entry is positive")

    @classmethod
    def uniform(cls, max_k: int) -> "AccessDistribution":
        if max_k < 1:
            raise ValueError("max_k must be >= 1")
        return cls(tuple([1.0 / max_k] * max_k))

    @classmethod
    def point_mass(cls, k: int) -> "AccessDistribution":
        if k < 1:
            raise ValueError("k must be >= 1")
        return cls(tuple([0.0] * (k - 1) + [1.0]))


def parse_kappa(text: str) -> AccessDistribution:
    """Parse ``uniform(1..K)``, ``pointmass(k)`` or ``weights [w1, w2, ...]``."""
    m = _UNIFORM_RE.match(text)
    if m:
        return AccessDistribution.uniform(int(m.group(1)))
    m = _POINTMASS_RE.match(text)
    if m:
        return AccessDistribution.point_mass(int(m.group(1)))
    m = _WEIGHTS_RE.match(text)
    if m:
        try:
            weights = tuple(float(w) for w in m.group(1).split(",") if w.strip())
        except ValueError:
            raise ValueError(f"bad weight in access law literal {text!r}") from None
        return AccessDistribution(weights)
    raise ValueError(
        f"bad access law literal {text!r}; expected uniform(1..K), pointmass(k) or weights [..]"
    )


@dataclass(frozen=True)
class Strategy:
    """How an applicant chooses which k firms to apply to."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"strategy must be one of {STRATEGY_KINDS}, got {self.kind!r}")


def parse_strategy(text: str) -> Strategy:
    return Strategy(text.strip().lower())


def sample_k(kappa: AccessDistribution, rng: np.random.Generator, count: int | None = None):
    """Draw k from kappa; a single int when count is None, else an ndarray."""
    ks = np.arange(1, kappa.max_k + 1)
    drawn = rng.choice(ks, size=count, p=np.asarray(kappa.weights))
    return int(drawn) if count is None else drawn


def apply_strategy(
    strategy: Strategy, ranking, k: int, rng: np.random.Generator
) -> frozenset[int]:
    """Pick the k-firm application set.

    top-k takes the k most-preferred firms from the ranking; random-k draws a
    uniform k-subset of all firms (offers are still weighed by the true
    ranking downstream).
    """
    ranking = list(ranking)
    if not 1 <= k <= len(ranking):
        raise ValueError(f"k must lie in 1..{len(ranking)}, got {k}")
    if strategy.kind == TOP_K:
        return frozenset(ranking[:k])
    chosen = rng.choice(np.asarray(ranking), size=k, replace=False)
    return frozenset(int(f) for f in chosen)


def expected_outcome_for_set(
    spec: MarketSpec, P: float, v: float, ranks_of_set: list[int]
) -> tuple[float, float]:
    """Ex-ante (match probability, expected matched rank) for an application set.

    ranks_of_set holds the positions of the applied firms in the applicant's
    own preference order (1 = favorite). Under the shared cutoff P each
    applied firm is affordable with probability p = 1 - F_X(P - v):
    jointly under mono (one shared draw) and independently under poly, so
    the match probability depends on the set only through its size. The
    expected rank enumerates afford-subsets exactly: sorting ranks ascending,
    the match lands on the j-th entry with probability p (1-p)^(j-1).
    Returns (0, nan) when p = 0.
    """
    ranks = sorted(int(r) for r in ranks_of_set)
    if not ranks:
        raise ValueError("application set must be nonempty")
    if len(ranks) > MAX_EXACT_SET:
        raise ValueError(f"set of size {len(ranks)} exceeds exact enumeration cap {MAX_EXACT_SET}")
    if len(set(ranks)) != len(ranks):
        raise ValueError("ranks_of_set must be distinct")
    if ranks[0] < 1 or ranks[-1] > spec.m:
        raise ValueError(f"ranks must lie in 1..{spec.m}")
    p = 1.0 - float(cdf(spec.noise_dist, P - v))
    if p <= 0.0:
        return 0.0, math.nan
    if spec.mode == MONO:
        # One shared draw: matched means every applied firm affords.
        return p, float(ranks[0])
    q = 1.0 - p
    match_prob = 1.0 - q ** len(ranks)
    expected = sum(r * p * q**j for j, r in enumerate(ranks)) / match_prob
    return match_prob, expected
