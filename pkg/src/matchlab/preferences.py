"""Applicant preference generators: uniformly random and random-utility.

The random-utility model scores firm f for applicant i as
u_i(f) = beta * quality_f - gamma * (loc_i - loc_f)^2 + eps_if
with standard-logistic eps and all characteristics uniform on [0, 1];
beta = gamma = 0 reduces to uniformly random rankings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIFORM_KIND = "uniform"
RUM_KIND = "random-utility"

# Matching sentinel for "no firm"; its rank is 0.
UNMATCHED = -1


@dataclass(frozen=True)
class PreferenceModel:
    kind: str = UNIFORM_KIND
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in (UNIFORM_KIND, RUM_KIND):
            raise ValueError(f"preference kind must be uniform or random-utility, got {self.kind!r}")
        if not (math.isfinite(self.beta) and math.isfinite(self.gamma)):
            raise ValueError("beta and gamma must be finite")
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("beta and gamma must be nonnegative")
        if self.kind == UNIFORM_KIND and (self.beta != 0.0 or self.gamma != 0.0):
            raise ValueError("uniform preferences take no beta/gamma weights")


@dataclass(frozen=True, eq=False)
class PreferenceProfile:
    """Strict rankings plus the characteristics that generated them.

    order[i, r] is the firm at (0-based) position r of applicant i's list;
    rank[i, f] is the 1-based rank of firm f for applicant i.
    """

    order: np.ndarray
    rank: np.ndarray
    applicant_loc: np.ndarray
    firm_quality: np.ndarray
    firm_loc: np.ndarray

    @property
    def n(self) -> int:
        return self.order.shape[0]

    @property
    def m(self) -> int:
        return self.order.shape[1]


def generate_preferences(
    model: PreferenceModel, n: int, m: int, rng: np.random.Generator
) -> PreferenceProfile:
    """Draw one preference profile; deterministic given the stream."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    applicant_loc = rng.uniform(0.0, 1.0, n)
    firm_quality = rng.uniform(0.0, 1.0, m)
    firm_loc = rng.uniform(0.0, 1.0, m)
    if model.kind == UNIFORM_KIND:
        utilities = rng.random((n, m))
    else:
        u = rng.random((n, m))
        # Inverse-CDF logistic draw; clip guards the measure-zero u = 0.
        u = np.clip(u, 1e-300, 1.0)
        eps = np.log(u) - np.log1p(-u)
        utilities = (
            model.beta * firm_quality[None, :]
            - model.gamma * (applicant_loc[:, None] - firm_loc[None, :]) ** 2
            + eps
        )
    # Stable argsort of -u: equal utilities fall back to firm index order.
    order = np.argsort(-utilities, axis=1, kind="stable")
    rank = np.argsort(order, axis=1) + 1
    return PreferenceProfile(
        order=order,
        rank=rank,
        applicant_loc=applicant_loc,
        firm_quality=firm_quality,
        firm_loc=firm_loc,
    )


def rank_of(profile: PreferenceProfile, applicant: int, firm: int) -> int:
    """1-based rank of a firm in an applicant's list; UNMATCHED ranks 0."""
    if not 0 <= applicant < profile.n:
        raise IndexError(f"applicant index {applicant} out of range")
    if firm == UNMATCHED:
        return 0
    if not 0 <= firm < profile.m:
        raise IndexError(f"firm index {firm} out of range")
    return int(profile.rank[applicant, firm])
