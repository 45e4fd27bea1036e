"""Special functions and the two per-pixel significance tests.

The scalar cores (prefixed with an underscore) are written in plain scalar
Python and registered with numba so the segmentation kernels run the exact
same arithmetic, bit for bit, as these public functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba.extending import register_jitable

__all__ = [
    "GaussianStats",
    "normal_cdf",
    "regularized_incomplete_beta",
    "f_cdf",
    "mle_pvalue",
    "anova_pair_pvalue",
]

_SQRT2 = math.sqrt(2.0)
_BETA_EPS = 1e-14
_BETA_MAX_ITER = 300
_LENTZ_TINY = 1e-300
_HALF_LOG_TWO_PI = 0.9189385332046727418


@register_jitable
def _lgamma_right(x: float) -> float:
    """Lanczos (g=7, n=9) log-gamma for x >= 0.5.

    CPython ships its own lgamma while the JIT binds the platform libm, and
    the two differ in final ulps; evaluating this shared expansion in both
    worlds keeps interpreted and compiled results bit-identical.
    """
    z = x - 1.0
    acc = 0.99999999999980993
    acc += 676.5203681218851 / (z + 1.0)
    acc += -1259.1392167224028 / (z + 2.0)
    acc += 771.32342877765313 / (z + 3.0)
    acc += -176.61502916214059 / (z + 4.0)
    acc += 12.507343278686905 / (z + 5.0)
    acc += -0.13857109526572012 / (z + 6.0)
    acc += 9.9843695780195716e-6 / (z + 7.0)
    acc += 1.5056327351493116e-7 / (z + 8.0)
    t = z + 7.5
    return _HALF_LOG_TWO_PI + (z + 0.5) * math.log(t) - t + math.log(acc)


@register_jitable
def _lgamma(x: float) -> float:
    if x < 0.5:
        return math.log(math.pi / abs(math.sin(math.pi * x))) - _lgamma_right(1.0 - x)
    return _lgamma_right(x)


@dataclass(frozen=True)
class GaussianStats:
    """Sample mean, standard deviation (n-1 denominator) and sample count."""

    mean: float
    std: float
    count: int


@register_jitable
def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    z = float(z)
    if math.isnan(z):
        raise ValueError("normal_cdf requires finite z")
    return _normal_cdf(z)


@register_jitable
def _beta_cont_frac(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz evaluation."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _LENTZ_TINY:
        d = _LENTZ_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            break
    return h


@register_jitable
def _beta_series(a: float, b: float, x: float) -> float:
    """Power series for I_x(a, b), good when b*x is small and x <= 0.95."""
    term = 1.0
    total = 1.0 / a
    for n in range(1, _BETA_MAX_ITER + 1):
        term *= (n - b) * x / n
        v = term / (a + n)
        total += v
        if abs(v) < abs(total) * _BETA_EPS:
            break
    ln_front = a * math.log(x) + _lgamma(a + b) - _lgamma(a) - _lgamma(b)
    return math.exp(ln_front) * total


@register_jitable
def _reg_inc_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    # series fallback only where its terms decay fast; at larger x the
    # continued fraction (with the symmetry split below) is the accurate path
    if b * x <= 1.0 and x <= 0.3:
        return _beta_series(a, b, x)
    y = 1.0 - x
    if a * y <= 1.0 and y <= 0.3:
        return 1.0 - _beta_series(b, a, y)
    ln_front = (
        a * math.log(x)
        + b * math.log(y)
        + _lgamma(a + b)
        - _lgamma(a)
        - _lgamma(b)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        value = front * _beta_cont_frac(a, b, x) / a
    else:
        value = 1.0 - front * _beta_cont_frac(b, a, y) / b
    if value < 0.0:
        return 0.0
    if value > 1.0:
        return 1.0
    return value


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Continued-fraction evaluation with a small-x series fallback;
    convergence 1e-14, at most 300 terms.
    """
    a, b, x = float(a), float(b), float(x)
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return _reg_inc_beta(a, b, x)


@register_jitable
def _f_cdf(f: float, d1: float, d2: float) -> float:
    if f <= 0.0:
        return 0.0
    x = d1 * f / (d1 * f + d2)
    return _reg_inc_beta(0.5 * d1, 0.5 * d2, x)


def f_cdf(f: float, d1: int, d2: int) -> float:
    """CDF of the F distribution with (d1, d2) degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    f = float(f)
    if math.isnan(f) or f < 0.0:
        raise ValueError("F statistic must be >= 0")
    return _f_cdf(f, float(d1), float(d2))


@register_jitable
def _mle_p(x: float, mean: float, std: float) -> float:
    if std == 0.0:
        return 1.0 if x == mean else 0.0
    z = abs(x - mean) / std
    p = 2.0 * (1.0 - _normal_cdf(z))
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def mle_pvalue(x: float, stats: GaussianStats) -> float:
    """Two-sided tail probability of x under N(mean, std).

    Doubles the one-sided tail on the side of x, so the value is 1 at the
    mean and decreases monotonically in |x - mean| / std.  The degenerate
    std = 0 case returns 1 when x equals the mean, else 0.
    """
    return _mle_p(float(x), stats.mean, stats.std)


@register_jitable
def _mean_of(vals: np.ndarray) -> float:
    s = 0.0
    for i in range(len(vals)):
        s += vals[i]
    return s / len(vals)


@register_jitable
def _anova_pair_p(a_vals: np.ndarray, b_vals: np.ndarray) -> float:
    na = len(a_vals)
    nb = len(b_vals)
    mean_a = _mean_of(a_vals)
    mean_b = _mean_of(b_vals)
    # per-group sums added at the end so that swapping the groups gives the
    # bit-identical result (float addition is commutative, not associative)
    ssw_a = 0.0
    for i in range(na):
        d = a_vals[i] - mean_a
        ssw_a += d * d
    ssw_b = 0.0
    for i in range(nb):
        d = b_vals[i] - mean_b
        ssw_b += d * d
    ssw = ssw_a + ssw_b
    n_total = na + nb
    grand = (mean_a * na + mean_b * nb) / n_total
    da = mean_a - grand
    db = mean_b - grand
    ssb = na * da * da + nb * db * db
    if ssw == 0.0:
        return 1.0 if ssb == 0.0 else 0.0
    df2 = n_total - 2
    f = ssb / (ssw / df2)  # df1 = 1 for two groups
    return 1.0 - _f_cdf(f, 1.0, float(df2))


def anova_pair_pvalue(
    group_a: Sequence[float] | np.ndarray, group_b: Sequence[float] | np.ndarray
) -> float:
    """One-way two-group ANOVA p-value for equality of means.

    F = MSB / MSW with df (1, nA + nB - 2); identical to the two-sided
    pooled-variance t-test.  Degenerate zero within-group variance maps to
    1 for equal means and 0 otherwise.
    """
    a = np.ascontiguousarray(group_a, dtype=np.float64)
    b = np.ascontiguousarray(group_b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("groups must be 1-D sequences")
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each group needs at least 2 samples")
    return _anova_pair_p(a, b)
