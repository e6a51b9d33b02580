"""Continuum market: market-clearing cutoffs, match probabilities, welfare.

A unit mass of applicants with values v ~ value_dist is screened by m firms
of equal capacity S/m. Each firm ranks applicants by an estimated value
v + X with X ~ noise_dist: a single shared draw per applicant under "mono",
independent draws per firm under "poly". At the shared market-clearing
cutoff P, aggregate demand equals S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .distributions import (
    Distribution,
    cdf,
    format_distribution,
    pdf,
    quantile,
)

if TYPE_CHECKING:  # avoids a circular import; access only needs the types
    from .access import AccessDistribution

MONO = "mono"
POLY = "poly"
MODES = (MONO, POLY)

DEFAULT_TOL = 1e-10
MAX_BISECT_ITER = 200
# Infinite supports enter the solver bracket at these quantiles; the mass
# outside is far below the solver tolerance.
BRACKET_QUANTILE = 1e-12

# Composite Gauss-Legendre rule for demand/welfare integrals: the integrand
# is smooth between the kinks at v = P - noise_hi and v = P - noise_lo, so a
# fixed panelized rule reaches ~1e-13 and costs a single vectorized pass.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_PANELS_PER_SEGMENT = 8


@dataclass(frozen=True)
class MarketSpec:
    """Continuum economy description."""

    m: int
    S: float
    value_dist: Distribution
    noise_dist: Distribution
    mode: str
    kappa: "AccessDistribution | None" = None

    def __post_init__(self) -> None:
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f"m must be an integer >= 1, got {self.m!r}")
        if not 0.0 < self.S < 1.0:
            raise ValueError(f"total capacity S must lie in (0,1), got {self.S}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.kappa is not None and self.kappa.max_k > self.m:
            raise ValueError(
                f"kappa support {{1..{self.kappa.max_k}}} exceeds m={self.m}"
            )


@dataclass(frozen=True)
class CutoffSolution:
    """Shared market-clearing cutoff with the solver residual and bracket."""

    cutoff: float
    residual: float
    bracket: tuple[float, float]
    mode: str


def _effective_bounds(dist: Distribution) -> tuple[float, float]:
    lo, hi = dist.support_lo, dist.support_hi
    if not math.isfinite(lo):
        lo = quantile(dist, BRACKET_QUANTILE)
    if not math.isfinite(hi):
        hi = quantile(dist, 1.0 - BRACKET_QUANTILE)
    return lo, hi


def _match_prob_curve(spec: MarketSpec, P: float, v: np.ndarray) -> np.ndarray:
    """Vectorized probability that an applicant of value v is matched."""
    fx = cdf(spec.noise_dist, P - v)
    if spec.mode == MONO:
        return 1.0 - fx
    if spec.kappa is None:
        return 1.0 - fx**spec.m
    weights = np.asarray(spec.kappa.weights)
    ks = np.arange(1, len(weights) + 1)
    return 1.0 - (weights[:, None] * fx[None, :] ** ks[:, None]).sum(axis=0)


def _eta_integral(spec: MarketSpec, P: float, weight_fn=None) -> float:
    """Integral of match_prob(v) * weight(v) d eta, panel-split at the kinks."""
    vlo, vhi = _effective_bounds(spec.value_dist)
    xlo, xhi = spec.noise_dist.support_lo, spec.noise_dist.support_hi
    cuts = sorted({vlo, vhi, *(c for c in (P - xhi, P - xlo) if vlo < c < vhi)})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        edges = np.linspace(a, b, _PANELS_PER_SEGMENT + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
        g = _match_prob_curve(spec, P, x) * pdf(spec.value_dist, x)
        if weight_fn is not None:
            g = g * weight_fn(x)
        total += float(w @ g)
    return total


def aggregate_demand(spec: MarketSpec, P: float) -> float:
    """Mass of applicants matched at cutoff P; strictly decreasing in P."""
    if spec.value_dist.is_degenerate:
        # Degenerate value law: all mass at one atom.
        return float(_match_prob_curve(spec, P, np.asarray([spec.value_dist.params[0]]))[0])
    return _eta_integral(spec, P)


def solve_cutoff(spec: MarketSpec, tol: float = DEFAULT_TOL) -> CutoffSolution:
    """Bisection on P -> aggregate_demand(spec, P) - S.

    The map is strictly decreasing because both laws have connected support,
    so the root is unique and bisection cannot stall. Raises ValueError when
    demand does not straddle S on the bracket and RuntimeError when the
    tolerance is not met within the iteration cap.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if spec.value_dist.is_degenerate or spec.noise_dist.is_degenerate:
        raise ValueError("cutoff solving requires connected support; got a point-mass law")
    vlo, vhi = _effective_bounds(spec.value_dist)
    xlo, xhi = _effective_bounds(spec.noise_dist)
    lo, hi = vlo + xlo, vhi + xhi
    bracket = (lo, hi)
    f_lo = aggregate_demand(spec, lo) - spec.S
    f_hi = aggregate_demand(spec, hi) - spec.S
    if not (f_lo > 0.0 > f_hi):
        raise ValueError(
            f"demand does not straddle S={spec.S} on bracket {bracket}; inconsistent spec"
        )
    mid, f_mid = lo, f_lo
    for _ in range(MAX_BISECT_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = aggregate_demand(spec, mid) - spec.S
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        # Converged once the residual meets tol and the bracket pins P itself.
        if abs(f_mid) <= tol and hi - lo <= max(tol, 1e-13 * (bracket[1] - bracket[0])):
            return CutoffSolution(cutoff=mid, residual=f_mid, bracket=bracket, mode=spec.mode)
    raise RuntimeError(
        f"cutoff bisection did not converge in {MAX_BISECT_ITER} iterations; tolerance too tight"
    )


def match_probability(spec: MarketSpec, P: float, v: float, k: int | None = None) -> float:
    """Probability that an applicant of value v is matched at cutoff P.

    Mono: 1 - F_X(P - v) regardless of k. Poly: 1 - F_X(P - v)^k with k
    defaulting to m; passing k explicitly requires an access law on the spec.
    """
    if k is not None:
        if spec.kappa is None:
            raise ValueError("k-specific match probability requires an access law")
        if not 1 <= k <= spec.m:
            raise ValueError(f"k must lie in 1..{spec.m}, got {k}")
    fx = float(cdf(spec.noise_dist, P - v))
    if spec.mode == MONO:
        return 1.0 - fx
    return 1.0 - fx ** (spec.m if k is None else k)


def top_choice_probability(spec: MarketSpec, P: float, v: float) -> float:
    """Probability of matching to the most-preferred firm: one draw clears P."""
    return 1.0 - float(cdf(spec.noise_dist, P - v))


def v_s_threshold(value_dist: Distribution, S: float) -> float:
    """Value above which exactly mass S of applicants lies."""
    if not 0.0 < S < 1.0:
        raise ValueError(f"S must lie in (0,1), got {S}")
    return quantile(value_dist, 1.0 - S)


def firm_welfare(spec: MarketSpec, P: float) -> float:
    """Expected matched value mass: integral of v * match_prob(v) d eta."""
    if spec.value_dist.is_degenerate:
        v0 = spec.value_dist.params[0]
        return v0 * float(_match_prob_curve(spec, P, np.asarray([v0]))[0])
    return _eta_integral(spec, P, weight_fn=lambda x: x)


def optimal_firm_welfare(value_dist: Distribution, S: float) -> float:
    """Perfect-screening benchmark: integral of v d eta over the top-S mass."""
    vs = v_s_threshold(value_dist, S)
    lo, hi = _effective_bounds(value_dist)
    edges = np.linspace(vs, hi, 4 * _PANELS_PER_SEGMENT + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return float(w @ (x * pdf(value_dist, x)))


def expected_rank_poly(spec: MarketSpec, P: float, v: float) -> float:
    """Expected preference rank of the match, conditional on matching (poly).

    With p = 1 - F_X(P - v) per firm and uniformly random preferences, the
    best affordable firm among j affordable ones has expected rank
    (m+1)/(j+1), so the value is
    sum_j Binom(m,p)(j) (m+1)/(j+1) / (1 - (1-p)^m).
    """
    if spec.mode != POLY:
        raise ValueError("expected_rank_poly requires a poly spec; mono rank is identically 1")
    m = spec.m
    p = 1.0 - float(cdf(spec.noise_dist, P - v))
    if p <= 0.0:
        raise ValueError("match probability is zero; conditional rank undefined")
    q = 1.0 - p
    total = 0.0
    for j in range(1, m + 1):
        pmf = math.comb(m, j) * p**j * q ** (m - j)
        total += pmf * (m + 1) / (j + 1)
    return total / (1.0 - q**m)


def solution_record(spec: MarketSpec, sol: CutoffSolution) -> dict:
    """JSON-ready record for one solve."""
    return {
        "mode": spec.mode,
        "m": spec.m,
        "S": spec.S,
        "value_dist": format_distribution(spec.value_dist),
        "noise_dist": format_distribution(spec.noise_dist),
        "kappa": None if spec.kappa is None else list(spec.kappa.weights),
        "cutoff": sol.cutoff,
        "residual": sol.residual,
    }
