"""Calibration tests on the cumulative-error walk, plus classical comparators.

Two walk-based tests: the maximum-absolute-walk test with the sup-|BM|
reference, and the bridge test that splits the null into a mean-calibration
component (terminal value, normal reference) and a shape component (bridged
maximum, Kolmogorov reference), combined by Fisher's method.  Comparators:
Hosmer-Lemeshow on rank deciles and the likelihood-ratio test of the
logistic recalibration model.  Every test also has a simulation-based
variant that replaces the asymptotic reference by a resampled null.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import (
    CalibrationDataset,
    CumulativeProcess,
    WalkLocation,
    WalkStatistics,
    cumulative_process,
    walk_statistics,
)
from . import distributions as dist

# Total variance (proxy for effective sample size) below which the
# asymptotic references are not trustworthy.
SMALL_SAMPLE_VARIANCE = 30.0


class SmallEffectiveSampleWarning(UserWarning):
    """Total variance below 30: asymptotic p-values may be conservative."""


@dataclass(frozen=True)
class BMTestResult:
    c_star: float
    s_star: float
    location: WalkLocation
    p_value: float


@dataclass(frozen=True)
class BBTestResult:
    c_n: float
    s_n: float
    p_a: float
    b_star: float
    p_b: float
    location_bridge: WalkLocation
    p_unified: float


@dataclass(frozen=True)
class HLGroup:
    size: int
    observed: float
    expected: float
    mean_prediction: float


@dataclass(frozen=True)
class HLTestResult:
    statistic: float
    groups: int
    df: int
    p_value: float
    group_table: tuple


@dataclass(frozen=True)
class RecalibrationFit:
    intercept: float
    slope: float
    deviance: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class WeakCalibResult:
    intercept: float
    slope: float
    lr_statistic: float
    p_value: Optional[float]
    converged: bool
    iterations: int


def _warn_if_small(total_variance):
    if total_variance < SMALL_SAMPLE_VARIANCE:
        warnings.warn(
            f"total variance {total_variance:.3g} is below "
            f"{SMALL_SAMPLE_VARIANCE:g}; asymptotic p-values are unreliable "
            "(consider the Monte Carlo variant)",
            SmallEffectiveSampleWarning,
            stacklevel=3,
        )


def bm_test_from_process(proc: CumulativeProcess,
                         stats: Optional[WalkStatistics] = None) -> BMTestResult:
    if stats is None:
        stats = walk_statistics(proc)
    return BMTestResult(
        c_star=stats.c_star,
        s_star=stats.s_star,
        location=stats.argmax_bm,
        p_value=dist.sup_abs_bm_sf(stats.s_star),
    )


def bm_test(data: CalibrationDataset) -> BMTestResult:
    """Test of calibration via the maximum |walk| against sup-|BM|."""
    proc = cumulative_process(data)
    _warn_if_small(proc.total_variance)
    return bm_test_from_process(proc)


def bb_test_from_process(proc: CumulativeProcess,
                         stats: Optional[WalkStatistics] = None) -> BBTestResult:
    if stats is None:
        stats = walk_statistics(proc)
    p_a = min(1.0, 2.0 * dist.std_normal_cdf(-abs(stats.s_n)))
    p_b = dist.kolmogorov_sf(stats.b_star)
    # Fisher combination in log space so underflowing components still
    # produce a well-defined unified p-value.
    fisher = -2.0 * (dist._normal_two_sided_log_p(stats.s_n)
                     + dist._kolmogorov_log_sf(stats.b_star))
    return BBTestResult(
        c_n=stats.c_n,
        s_n=stats.s_n,
        p_a=p_a,
        b_star=stats.b_star,
        p_b=p_b,
        location_bridge=stats.argmax_bb,
        p_unified=dist.chi_square4_sf(max(fisher, 0.0)),
    )


def bb_test(data: CalibrationDataset) -> BBTestResult:
    """Bridge test: mean-calibration and bridged-maximum components combined.

    The terminal walk value gets a two-sided normal p-value, the maximum of
    the bridged walk a Kolmogorov p-value; the two are asymptotically
    independent and are pooled by Fisher's method (chi-square, 4 df).
    """
    proc = cumulative_process(data)
    _warn_if_small(proc.total_variance)
    return bb_test_from_process(proc)


def conditional_bm_test(data: CalibrationDataset) -> tuple[float, float]:
    """Two-part variant: terminal-value p and the conditional maximum p.

    Returns ``(p_a, p_conditional)`` where the second is the p-value of the
    maximum |walk| conditional on the observed terminal value.  No
    combination rule is applied; the components are reported as-is.
    """
    proc = cumulative_process(data)
    _warn_if_small(proc.total_variance)
    stats = walk_statistics(proc)
    p_a = min(1.0, 2.0 * dist.std_normal_cdf(-abs(stats.s_n)))
    p_conditional = 1.0 - dist.conditional_sup_cdf(stats.s_star, stats.s_n)
    return p_a, p_conditional


# ---------------------------------------------------------------------------
# chi-square survival for arbitrary df (Hosmer-Lemeshow, LR test)

def _reg_upper_gamma(s, x):
    # Regularized upper incomplete gamma Q(s, x); series for the lower tail,
    # Lentz continued fraction for the upper.  Relative accuracy ~1e-14.
    if x == 0.0:
        return 1.0
    if x < s + 1.0:
        term = 1.0 / s
        total = term
        k = 1
        while k < 500:
            term *= x / (s + k)
            total += term
            if term < total * 1e-16:
                break
            k += 1
        log_p = s * math.log(x) - x - math.lgamma(s) + math.log(total)
        return max(0.0, 1.0 - math.exp(log_p))
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    log_prefactor = -x + s * math.log(x) - math.lgamma(s)
    return min(1.0, math.exp(log_prefactor) * h)


def _chi_square_sf(x, df):
    """Survival function of chi-square with ``df`` degrees of freedom.

    Even df uses the finite closed-form sum; odd df falls back to the
    regularized upper incomplete gamma.
    """
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if df < 1:
        raise ValueError(f"df must be positive, got {df}")
    if df % 2 == 0:
        half = 0.5 * x
        term = 1.0
        total = 1.0
        for j in range(1, df // 2):
            term *= half / j
            total += term
        return min(1.0, math.exp(-half) * total) if half < 700 else 0.0
    return _reg_upper_gamma(0.5 * df, 0.5 * x)


# ---------------------------------------------------------------------------
# Hosmer-Lemeshow

def _rank_group_bounds(n, groups):
    # equal-count split by rank; remainder spreads to the later groups and
    # rank boundaries put tied predictions in the lower group first
    return [i * n // groups for i in range(groups + 1)]


def hosmer_lemeshow_test(data: CalibrationDataset, groups: int = 10,
                         df_rule: str = "g_minus_2") -> HLTestResult:
    """Hosmer-Lemeshow chi-square test on rank-quantile groups.

    ``df_rule`` is ``"g_minus_2"`` (development-data convention, the
    default) or ``"g"`` (appropriate when the predictions were not fitted
    to the evaluated data).
    """
    if groups < 2:
        raise ValueError(f"need at least 2 groups, got {groups}")
    if data.n < groups:
        raise ValueError(f"n={data.n} is smaller than groups={groups}")
    if df_rule == "g_minus_2":
        df = groups - 2
    elif df_rule == "g":
        df = groups
    else:
        raise ValueError(f"unknown df_rule {df_rule!r}")
    if df < 1:
        raise ValueError(
            f"df_rule {df_rule!r} with {groups} groups leaves no degrees of "
            "freedom; use df_rule='g'"
        )

    bounds = _rank_group_bounds(data.n, groups)
    statistic = 0.0
    table = []
    for g in range(groups):
        lo, hi = bounds[g], bounds[g + 1]
        p = data.predictions[lo:hi]
        y = data.outcomes[lo:hi]
        size = hi - lo
        observed = float(y.sum())
        expected = float(p.sum())
        variance = expected * (1.0 - expected / size)
        if variance <= 0.0:
            raise ValueError(f"degenerate group {g}: zero binomial variance")
        statistic += (observed - expected) ** 2 / variance
        table.append(HLGroup(size, observed, expected, float(p.mean())))
    return HLTestResult(
        statistic=statistic,
        groups=groups,
        df=df,
        p_value=_chi_square_sf(statistic, df),
        group_table=tuple(table),
    )


# ---------------------------------------------------------------------------
# logistic recalibration (IRLS) and the weak-calibration LR test

_DIVERGENCE_BOUND = 50.0
_MAX_IRLS_ITERATIONS = 50
_SCORE_TOLERANCE = 1e-8
_DEVIANCE_TOLERANCE = 1e-12


def _bernoulli_deviance(y, mu):
    mu = np.clip(mu, 1e-12, 1.0 - 1e-12)
    return -2.0 * float(np.sum(y * np.log(mu) + (1.0 - y) * np.log(1.0 - mu)))


def _expit(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def fit_logistic_recalibration(data: CalibrationDataset) -> RecalibrationFit:
    """Maximum-likelihood fit of outcome on log-odds of the prediction.

    Fits ``logit E(Y) = a + b * logit(p)`` by iteratively reweighted least
    squares with step-halving whenever a Newton step increases the
    deviance.  Separation (all outcomes equal, coefficients diverging past
    50, or the deviance collapsing to zero) is reported as
    non-convergence, never raised.
    """
    y = data.outcomes
    x = np.log(data.predictions / (1.0 - data.predictions))
    a, b = 0.0, 1.0
    deviance = _bernoulli_deviance(y, data.predictions)
    events = float(y.sum())
    if events == 0.0 or events == float(data.n):
        # no finite maximizer: the likelihood climbs toward a boundary
        return RecalibrationFit(a, b, deviance, False, 0)
    converged = False
    iterations = 0

    for iterations in range(1, _MAX_IRLS_ITERATIONS + 1):
        mu = _expit(a + b * x)
        residual = y - mu
        score = np.array([residual.sum(), (residual * x).sum()])
        if np.max(np.abs(score)) < _SCORE_TOLERANCE:
            converged = True
            break
        w = mu * (1.0 - mu)
        hessian = np.array([
            [w.sum(), (w * x).sum()],
            [(w * x).sum(), (w * x * x).sum()],
        ])
        try:
            step = np.linalg.solve(hessian, score)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        for _ in range(30):
            trial_a, trial_b = a + scale * step[0], b + scale * step[1]
            trial_dev = _bernoulli_deviance(y, _expit(trial_a + trial_b * x))
            if trial_dev <= deviance + 1e-10:
                break
            scale *= 0.5
        rel_change = abs(deviance - trial_dev) / max(abs(deviance), 1.0)
        a, b, deviance = trial_a, trial_b, trial_dev
        if abs(a) > _DIVERGENCE_BOUND or abs(b) > _DIVERGENCE_BOUND:
            break
        if rel_change < _DEVIANCE_TOLERANCE:
            converged = True
            break

    if deviance < 1e-6:
        # every observation fitted exactly: separated, boundary solution
        converged = False
    return RecalibrationFit(a, b, deviance, converged, iterations)


def weak_calibration_lr_test(data: CalibrationDataset) -> WeakCalibResult:
    """Likelihood-ratio test of intercept 0 and slope 1 jointly (2 df).

    The null model scores the predictions as-is; the alternative is the
    fitted recalibration model.  A non-converged fit yields no p-value.
    """
    fit = fit_logistic_recalibration(data)
    null_deviance = _bernoulli_deviance(data.outcomes, data.predictions)
    lr = null_deviance - fit.deviance
    p_value = _chi_square_sf(max(lr, 0.0), 2) if fit.converged else None
    return WeakCalibResult(
        intercept=fit.intercept,
        slope=fit.slope,
        lr_statistic=lr,
        p_value=p_value,
        converged=fit.converged,
        iterations=fit.iterations,
    )


# ---------------------------------------------------------------------------
# simulation-based variants

def _simulate_null_statistics(data: CalibrationDataset, replications: int,
                              seed: int, include_bridge: bool = True):
    """Null samples of (max |walk|, max |bridged walk|, terminal value).

    Outcomes are redrawn as independent Bernoulli(p_i); the float64 walk
    arithmetic here is the Monte Carlo engine, deliberately independent of
    the extended-precision path used for observed data.  The bridged
    maximum (the costliest reduction) is skipped when not requested.
    """
    p = data.predictions
    n = data.n
    variances = p * (1.0 - p)
    total_variance = variances.sum()
    times = np.cumsum(variances) / total_variance
    sqrt_t = math.sqrt(total_variance)

    rng = np.random.default_rng(seed)
    s_star = np.empty(replications)
    b_star = np.empty(replications) if include_bridge else None
    s_n = np.empty(replications)
    block = max(1, 4_000_000 // n)
    done = 0
    while done < replications:
        m = min(block, replications - done)
        draws = rng.random((m, n)) < p
        walk = np.cumsum(draws - p, axis=1) / sqrt_t
        terminal = walk[:, -1]
        rows = slice(done, done + m)
        s_star[rows] = np.abs(walk).max(axis=1)
        if include_bridge:
            b_star[rows] = np.abs(
                walk - times * terminal[:, None]
            ).max(axis=1)
        s_n[rows] = terminal
        done += m
    return s_star, b_star, s_n


def monte_carlo_test(data: CalibrationDataset, which: str,
                     replications: int, seed: int) -> float:
    """Simulation-based p-value with the null resampled from the predictions.

    ``which`` is ``"bm"`` (maximum |walk|) or ``"bb"`` (Fisher combination
    of the empirical two-sided terminal-value p and the empirical
    bridged-maximum p).  Uses the add-one estimator, so the p-value is
    never exactly zero and the test is finite-sample valid.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    if which not in ("bm", "bb"):
        raise ValueError(f"which must be 'bm' or 'bb', got {which!r}")
    observed = walk_statistics(cumulative_process(data))
    s_star, b_star, s_n = _simulate_null_statistics(
        data, replications, seed, include_bridge=(which == "bb")
    )
    if which == "bm":
        exceed = int(np.count_nonzero(s_star >= observed.s_star))
        return (1 + exceed) / (replications + 1)
    p_a = (1 + int(np.count_nonzero(np.abs(s_n) >= abs(observed.s_n)))) \
        / (replications + 1)
    p_b = (1 + int(np.count_nonzero(b_star >= observed.b_star))) \
        / (replications + 1)
    fisher = -2.0 * (math.log(p_a) + math.log(p_b))
    return dist.chi_square4_sf(fisher)
