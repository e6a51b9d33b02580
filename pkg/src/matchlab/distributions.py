"""Value and noise laws, maximum order statistics, and concentration diagnostics.

Three families are supported: uniform(a, b), gaussian(mean, variance) and a
degenerate point-mass(c). The first two have connected support and strictly
increasing CDFs there; point-mass exists for testing perfect-information
setups and is rejected by the cutoff solver.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf, ndtri

UNIFORM = "uniform"
GAUSSIAN = "gaussian"
POINT_MASS = "point-mass"

# Absolute tolerance for adaptive (Gauss-Kronrod) quadrature.
QUAD_ABS_TOL = 1e-9
# Infinite supports are truncated this many standard deviations out; the
# neglected gaussian tail mass is < 1e-14.
TAIL_SIGMAS = 8.0

_LITERAL_RE = re.compile(
    r"^\s*(uniform|gaussian)\s*\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class Distribution:
    """A scalar law identified by kind and its two-or-fewer parameters."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind == UNIFORM:
            a, b = self.params
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"uniform requires finite a < b, got ({a}, {b})")
        elif self.kind == GAUSSIAN:
            mean, var = self.params
            if not (math.isfinite(mean) and math.isfinite(var) and var > 0):
                raise ValueError(f"gaussian requires finite mean and variance > 0, got ({mean}, {var})")
        elif self.kind == POINT_MASS:
            (c,) = self.params
            if not math.isfinite(c):
                raise ValueError("point-mass requires a finite atom")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @property
    def support_lo(self) -> float:
        if self.kind == UNIFORM:
            return self.params[0]
        if self.kind == GAUSSIAN:
            return -math.inf
        return self.params[0]

    @property
    def support_hi(self) -> float:
        if self.kind == UNIFORM:
            return self.params[1]
        if self.kind == GAUSSIAN:
            return math.inf
        return self.params[0]

    @property
    def is_degenerate(self) -> bool:
        return self.kind == POINT_MASS


def uniform(a: float, b: float) -> Distribution:
    return Distribution(UNIFORM, (float(a), float(b)))


def gaussian(mean: float, variance: float) -> Distribution:
    return Distribution(GAUSSIAN, (float(mean), float(variance)))


def point_mass(c: float) -> Distribution:
    return Distribution(POINT_MASS, (float(c),))


def parse_distribution(text: str) -> Distribution:
    """Parse a config literal: ``uniform(a,b)`` or ``gaussian(mu,var)``.

    Case-insensitive; parameters are decimal reals.
    """
    match = _LITERAL_RE.match(text)
    if match is None:
        raise ValueError(
            f"bad distribution literal {text!r}; expected uniform(a,b) or gaussian(mu,var)"
        )
    kind = match.group(1).lower()
    try:
        p1, p2 = float(match.group(2)), float(match.group(3))
    except ValueError:
        raise ValueError(f"bad numeric parameter in distribution literal {text!r}") from None
    return uniform(p1, p2) if kind == UNIFORM else gaussian(p1, p2)


def format_distribution(dist: Distribution) -> str:
    """Inverse of parse_distribution (round-trip exact via repr floats)."""
    params = ",".join(repr(p) for p in dist.params)
    return f"{dist.kind}({params})"


def cdf(dist: Distribution, x):
    """P[X <= x]. Accepts a scalar or an ndarray; total, clamped to [0, 1]."""
    if dist.kind == UNIFORM:
        a, b = dist.params
        return np.clip((np.asarray(x, dtype=float) - a) / (b - a), 0.0, 1.0)[()]
    if dist.kind == GAUSSIAN:
        mean, var = dist.params
        z = (np.asarray(x, dtype=float) - mean) / math.sqrt(2.0 * var)
        return (0.5 * (1.0 + erf(z)))[()]
    c = dist.params[0]
    return (np.asarray(x, dtype=float) >= c).astype(float)[()]


def pdf(dist: Distribution, x):
    """Density of a non-degenerate law; rejects point-mass."""
    if dist.kind == UNIFORM:
        a, b = dist.params
        xv = np.asarray(x, dtype=float)
        return (np.where((xv >= a) & (xv <= b), 1.0 / (b - a), 0.0))[()]
    if dist.kind == GAUSSIAN:
        mean, var = dist.params
        xv = np.asarray(x, dtype=float)
        return (np.exp(-((xv - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var))[()]
    raise ValueError("point-mass has no density")


def quantile(dist: Distribution, p: float) -> float:
    """Inverse CDF at p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile requires p in (0,1), got {p}")
    if dist.kind == UNIFORM:
        a, b = dist.params
        return a + p * (b - a)
    if dist.kind == GAUSSIAN:
        mean, var = dist.params
        return mean + math.sqrt(var) * float(ndtri(p))
    return dist.params[0]


def sample(dist: Distribution, rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw ``count`` values; deterministic given the stream state."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if dist.kind == UNIFORM:
        a, b = dist.params
        return rng.uniform(a, b, count)
    if dist.kind == GAUSSIAN:
        mean, var = dist.params
        return rng.normal(mean, math.sqrt(var), count)
    return np.full(count, dist.params[0])


@dataclass(frozen=True)
class MaxOrderSummary:
    """Mean and variance of the maximum of n independent draws."""

    n: int
    mean: float
    variance: float


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be an integer >= 1, got {n!r}")


def max_order_cdf(dist: Distribution, n: int, x):
    """CDF of the maximum of n independent draws: cdf(x)^n."""
    _check_n(n)
    return cdf(dist, x) ** n


def truncated_support(dist: Distribution) -> tuple[float, float]:
    """Finite integration bounds; gaussian tails cut at TAIL_SIGMAS."""
    if dist.kind == GAUSSIAN:
        mean, var = dist.params
        half = TAIL_SIGMAS * math.sqrt(var)
        return mean - half, mean + half
    return dist.support_lo, dist.support_hi


def max_order_summary(dist: Distribution, n: int) -> MaxOrderSummary:
    """Moments of the maximum of n draws.

    Uniform uses the closed forms mean = a + (b-a) * n/(n+1) and
    variance = (b-a)^2 * n/((n+1)^2 (n+2)); other laws integrate the
    survival function of the maximum with adaptive quadrature.
    """
    _check_n(n)
    if dist.kind == UNIFORM:
        a, b = dist.params
        span = b - a
        return MaxOrderSummary(
            n=int(n),
            mean=a + span * (n / (n + 1)),
            variance=span * span * (n / ((n + 1) ** 2 * (n + 2))),
        )
    if dist.kind == POINT_MASS:
        return MaxOrderSummary(n=int(n), mean=dist.params[0], variance=0.0)
    lo, hi = truncated_support(dist)

    def survival(x: float) -> float:
        return 1.0 - float(cdf(dist, x)) ** n

    # E[g(M)] = g(lo) + integral of g'(x) * (1 - F(x)^n) over [lo, hi].
    mean = lo + integrate.quad(survival, lo, hi, epsabs=QUAD_ABS_TOL, limit=200)[0]
    second = lo * lo + integrate.quad(
        lambda x: 2.0 * x * survival(x), lo, hi, epsabs=QUAD_ABS_TOL, limit=200
    )[0]
    return MaxOrderSummary(n=int(n), mean=mean, variance=max(second - mean * mean, 0.0))


def concentration_curve(
    dist: Distribution, epsilon: float, n_schedule: list[int]
) -> list[tuple[int, float]]:
    """P[|max of n draws - its mean| > epsilon] for each n in the schedule.

    For maximum-concentrating laws the curve is eventually decreasing to 0.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not n_schedule:
        raise ValueError("n_schedule must be nonempty")
    if any(b <= a for a, b in zip(n_schedule, n_schedule[1:])):
        raise ValueError("n_schedule must be increasing")
    out = []
    for n in n_schedule:
        _check_n(n)
        mu = max_order_summary(dist, n).mean
        above = 1.0 - float(cdf(dist, mu + epsilon)) ** n
        below = float(cdf(dist, mu - epsilon)) ** n
        out.append((int(n), min(max(above + below, 0.0), 1.0)))
    return out


def pr_max_exceeds(dist: Distribution, n: int, delta: float) -> float:
    """P[max_B - max_A > delta] for two independent n-draw maxima.

    Integrates (1 - F(x+delta)^n) against the density of max_A,
    n F(x)^(n-1) f(x).
    """
    _check_n(n)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if dist.kind == POINT_MASS:
        return 0.0
    lo, hi = truncated_support(dist)

    def integrand(x: float) -> float:
        fx = float(cdf(dist, x))
        return (1.0 - float(cdf(dist, x + delta)) ** n) * n * fx ** (n - 1) * float(pdf(dist, x))

    val = integrate.quad(integrand, lo, hi, epsabs=QUAD_ABS_TOL, limit=200)[0]
    return min(max(val, 0.0), 1.0)
