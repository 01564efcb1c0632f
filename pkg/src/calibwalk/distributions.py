"""Reference distributions for the random-walk calibration statistics.

All functions are pure and stateless.  The two sup-type CDFs are evaluated
from alternating exponential series; each has a second, theta-transformed
form that converges quickly exactly where the first one does not, so the
implementations switch forms at a fixed crossover.  Survival functions are
computed directly (not as ``1 - cdf``) so that extreme statistics do not
lose precision to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Below this the sup CDFs are < 1e-200: return 0 outright instead of
# exercising series whose prefactors blow up as the terms underflow.
_TINY_STAT = 0.05

# sup-|BM| survival mass above 10 is ~3e-23, beyond double resolution.
_BM_SATURATION = 10.0

# Kolmogorov series crossover: theta form below, alternating form above.
_KOLMOGOROV_CROSSOVER = 1.0

# Symmetric-k cap for the conditional sup series.
_CONDITIONAL_MAX_K = 50


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation policy for the exponential series."""

    term_tolerance: float = 1e-16
    max_terms: int = 200

    def __post_init__(self):
        if not self.term_tolerance > 0:
            raise ValueError("term_tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_SERIES = SeriesConfig()


def _check_nonnegative(a, name="a"):
    if a < 0:
        raise ValueError(f"{name} must be nonnegative, got {a}")


def _clip_probability(p):
    return min(1.0, max(0.0, p))


def sup_abs_bm_cdf(a: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """CDF of the supremum of |W(t)| over [0, 1] for standard BM W.

    F(a) = (4/pi) * sum_{k>=0} (-1)^k / (2k+1) * exp(-(2k+1)^2 pi^2 / (8 a^2))
    """
    _check_nonnegative(a)
    if a < _TINY_STAT:
        return 0.0
    if a >= _BM_SATURATION:
        return 1.0
    coeff = math.pi * math.pi / (8.0 * a * a)
    total = 0.0
    for k in range(config.max_terms):
        m = 2 * k + 1
        term = math.exp(-coeff * m * m) / m
        total += term if k % 2 == 0 else -term
        if term < config.term_tolerance:
            break
    return _clip_probability(4.0 / math.pi * total)


def sup_abs_bm_sf(a: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """P(sup |W(t)| >= a), via the reflection series.

    1 - F(a) = 4 * sum_{k>=0} (-1)^k * Phi(-(2k+1) a).  Evaluating the
    survival side directly keeps full precision when F(a) is near 1.
    """
    _check_nonnegative(a)
    if a < _TINY_STAT:
        return 1.0
    total = 0.0
    for k in range(config.max_terms):
        term = std_normal_cdf(-(2 * k + 1) * a)
        total += term if k % 2 == 0 else -term
        if term < config.term_tolerance:
            break
    return _clip_probability(4.0 * total)


def _kolmogorov_cdf_alternating(a: float, config: SeriesConfig) -> float:
    # G(a) = sum_{k in Z} (-1)^k exp(-2 a^2 k^2); fast for a above ~1.
    total = 1.0
    for k in range(1, config.max_terms + 1):
        term = 2.0 * math.exp(-2.0 * a * a * k * k)
        total += term if k % 2 == 0 else -term
        if term < config.term_tolerance:
            break
    return total


def _kolmogorov_cdf_theta(a: float, config: SeriesConfig) -> float:
    # Theta-transformed dual: (sqrt(2 pi)/a) sum_{k>=1} exp(-(2k-1)^2 pi^2/(8 a^2));
    # fast for a below ~1.
    coeff = math.pi * math.pi / (8.0 * a * a)
    total = 0.0
    for k in range(1, config.max_terms + 1):
        m = 2 * k - 1
        term = math.exp(-coeff * m * m)
        total += term
        if term < config.term_tolerance:
            break
    return _SQRT_2PI / a * total


def kolmogorov_cdf(a: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """CDF of the Kolmogorov distribution (sup |Brownian bridge|)."""
    _check_nonnegative(a)
    if a < _TINY_STAT:
        return 0.0
    if a < _KOLMOGOROV_CROSSOVER:
        return _clip_probability(_kolmogorov_cdf_theta(a, config))
    return _clip_probability(_kolmogorov_cdf_alternating(a, config))


def kolmogorov_sf(a: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """P(sup |B(t)| >= a), computed without cancellation for large a."""
    _check_nonnegative(a)
    if a < _TINY_STAT:
        return 1.0
    if a < _KOLMOGOROV_CROSSOVER:
        # G < 0.73 here, so the complement is well conditioned.
        return _clip_probability(1.0 - _kolmogorov_cdf_theta(a, config))
    total = 0.0
    for k in range(1, config.max_terms + 1):
        term = 2.0 * math.exp(-2.0 * a * a * k * k)
        total += -term if k % 2 == 0 else term
        if term < config.term_tolerance:
            break
    return _clip_probability(total)


def _kolmogorov_log_sf(a: float, config: SeriesConfig = DEFAULT_SERIES) -> float:
    """log P(sup |B(t)| >= a); finite even when the survival underflows."""
    sf = kolmogorov_sf(a, config)
    if sf > 0.0:
        return math.log(sf)
    return math.log(2.0) - 2.0 * a * a


def conditional_sup_cdf(a: float, b: float,
                        config: SeriesConfig = DEFAULT_SERIES) -> float:
    """P(sup |W(t)| < a | W(1) = b) for standard BM on [0, 1].

    Series: sum_{k in Z} (-1)^k exp(2 a b k - 2 a^2 k^2).  The path ends at
    |b|, so the probability is 0 whenever a <= |b|.
    """
    _check_nonnegative(a)
    if a <= abs(b):
        return 0.0
    if a < 2.0 * _TINY_STAT:
        # true mass here is < 1e-50; the alternating sum would need |k| > 50
        return 0.0
    total = 1.0
    for k in range(1, _CONDITIONAL_MAX_K + 1):
        q = 2.0 * a * a * k * k
        r = 2.0 * a * b * k
        # both exponents are <= 0 because |b| < a, so no overflow
        pair = math.exp(r - q) + math.exp(-r - q)
        total += pair if k % 2 == 0 else -pair
        if pair < config.term_tolerance:
            break
    return _clip_probability(total)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF to full double accuracy."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _normal_two_sided_log_p(x: float) -> float:
    """log(2 * Phi(-|x|)); asymptotic continuation past erfc underflow."""
    x = abs(x)
    p = math.erfc(x / math.sqrt(2.0))
    if p > 0.0:
        return math.log(p)
    return -0.5 * x * x - math.log(x * math.sqrt(math.pi / 2.0))


def chi_square4_sf(x: float) -> float:
    """Survival function of chi-square with 4 df: exp(-x/2) * (1 + x/2)."""
    _check_nonnegative(x, "x")
    return math.exp(-0.5 * x + math.log1p(0.5 * x))


def critical_value(distribution: str, level: float,
                   config: SeriesConfig = DEFAULT_SERIES) -> float:
    """Invert a sup-statistic CDF: the a with CDF(a) = level.

    ``distribution`` is ``"sup_abs_bm"`` or ``"kolmogorov"``.  Bisection on
    [1e-6, 10] to an absolute tolerance of 1e-9.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be inside (0, 1), got {level}")
    if distribution == "sup_abs_bm":
        cdf = sup_abs_bm_cdf
    elif distribution == "kolmogorov":
        cdf = kolmogorov_cdf
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    lo, hi = 1e-6, 10.0
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if cdf(mid, config) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
