"""JIT-compiled per-pixel segmentation kernels.

The per-pixel window scan is the hot loop of the whole package.  Every
piece of floating-point arithmetic here goes through the same scalar cores
as the public functions in `stats` and `engine`, in the same order, so the
compiled kernels, the interpreted reference path, and the global-limit
fast path all produce bit-identical results.

Per-class samples are accumulated in row-major source order (sorted by
(row, col)) before any statistic is computed.  Selection order still
follows the offset table; only the summation order is canonicalized.  This
makes results independent of the scan geometry wherever the selected set
is the same, which is what lets the global-limit path reproduce the
windowed path exactly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange
from numba.extending import register_jitable

from .stats import _anova_pair_p, _mle_p

NAN = float("nan")


@register_jitable
def _gauss_mean_var(vals: np.ndarray) -> tuple[float, float]:
    """Two-pass sample mean and variance (n-1 denominator; 0 for n == 1)."""
    n = len(vals)
    s = 0.0
    for i in range(n):
        s += vals[i]
    mean = s / n
    if n < 2:
        return mean, 0.0
    ss = 0.0
    for i in range(n):
        d = vals[i] - mean
        ss += d * d
    return mean, ss / (n - 1)


@register_jitable
def _log_density(x: float, mean: float, std: float) -> float:
    """Gaussian log density up to the shared -0.5*log(2*pi) constant."""
    if std == 0.0:
        if x == mean:
            return math.inf
        return -math.inf
    z = (x - mean) / std
    return -math.log(std) - 0.5 * z * z


@register_jitable
def _argmax_class(
    x: float, means: np.ndarray, stds: np.ndarray, qual: np.ndarray, n_classes: int
) -> int:
    """Index of the qualifying class with maximal density; ties keep the
    smallest class id; -1 when no class qualifies."""
    best = -1
    best_lp = -math.inf
    for c in range(n_classes):
        if not qual[c]:
            continue
        lp = _log_density(x, means[c], stds[c])
        if best < 0 or lp > best_lp:
            best = c
            best_lp = lp
    return best


@njit(cache=True)
def _segment_pixel(
    i,
    j,
    pixels,
    mask_labels,
    drows,
    dcols,
    cap,
    n_classes,
    min_samples,
    sigma_floor,
    pooled,
    vals,
    keys,
    svals,
    counts,
    means,
    stds,
    variances,
    qual,
    out_labels,
    out_mle,
    out_anova,
    out_wmean,
    out_wstd,
    out_wcount,
):
    height, width = pixels.shape
    for c in range(n_classes):
        counts[c] = 0

    # nearest-first gather; stop once every class holds `cap` samples
    full = 0
    for k in range(len(drows)):
        r = i + drows[k]
        col = j + dcols[k]
        if r < 0 or r >= height or col < 0 or col >= width:
            continue
        label = mask_labels[r, col]
        if label == 0:
            continue
        ci = label - 1
        cnt = counts[ci]
        if cnt >= cap:
            continue
        vals[ci, cnt] = pixels[r, col]
        keys[ci, cnt] = r * width + col
        counts[ci] = cnt + 1
        if cnt + 1 == cap:
            full += 1
            if full == n_classes:
                break

    n_qual = 0
    for c in range(n_classes):
        cnt = counts[c]
        if cnt < min_samples:
            qual[c] = False
            continue
        qual[c] = True
        n_qual += 1
        order = np.argsort(keys[c, :cnt])
        for t in range(cnt):
            svals[c, t] = vals[c, order[t]]
        mean, var = _gauss_mean_var(svals[c, :cnt])
        means[c] = mean
        variances[c] = var

    if pooled:
        weighted = 0.0
        weight = 0.0
        for c in range(n_classes):
            if qual[c]:
                weighted += counts[c] * variances[c]
                weight += counts[c]
        if weight > 0.0:
            pooled_std = math.sqrt(weighted / weight)
            if pooled_std < sigma_floor:
                pooled_std = sigma_floor
            for c in range(n_classes):
                if qual[c]:
                    stds[c] = pooled_std
    else:
        for c in range(n_classes):
            if qual[c]:
                std = math.sqrt(variances[c])
                if std < sigma_floor:
                    std = sigma_floor
                stds[c] = std

    x = pixels[i, j]
    best = _argmax_class(x, means, stds, qual, n_classes)
    if best < 0:
        out_labels[i, j] = n_classes + 1
        out_mle[i, j] = NAN
        out_wmean[i, j] = NAN
        out_wstd[i, j] = NAN
        out_wcount[i, j] = 0
    else:
        out_labels[i, j] = best + 1
        out_mle[i, j] = _mle_p(x, means[best], stds[best])
        out_wmean[i, j] = means[best]
        out_wstd[i, j] = stds[best]
        out_wcount[i, j] = counts[best]

    if n_qual >= 2:
        max_p = -1.0
        for a in range(n_classes):
            if not qual[a]:
                continue
            for b in range(a + 1, n_classes):
                if not qual[b]:
                    continue
                p = _anova_pair_p(svals[a, : counts[a]], svals[b, : counts[b]])
                if p > max_p:
                    max_p = p
        out_anova[i, j] = max_p
    else:
        out_anova[i, j] = NAN


@njit(cache=True)
def segment_serial(
    pixels,
    mask_labels,
    drows,
    dcols,
    cap,
    n_classes,
    min_samples,
    sigma_floor,
    pooled,
    out_labels,
    out_mle,
    out_anova,
    out_wmean,
    out_wstd,
    out_wcount,
):
    height, width = pixels.shape
    vals = np.empty((n_classes, cap), np.float64)
    keys = np.empty((n_classes, cap), np.int64)
    svals = np.empty((n_classes, cap), np.float64)
    counts = np.zeros(n_classes, np.int64)
    means = np.zeros(n_classes, np.float64)
    stds = np.zeros(n_classes, np.float64)
    variances = np.zeros(n_classes, np.float64)
    qual = np.zeros(n_classes, np.bool_)
    for i in range(height):
        for j in range(width):
            _segment_pixel(
                i, j, pixels, mask_labels, drows, dcols, cap, n_classes,
                min_samples, sigma_floor, pooled,
                vals, keys, svals, counts, means, stds, variances, qual,
                out_labels, out_mle, out_anova, out_wmean, out_wstd, out_wcount,
            )


@njit(parallel=True, cache=True)
def segment_parallel(
    pixels,
    mask_labels,
    drows,
    dcols,
    cap,
    n_classes,
    min_samples,
    sigma_floor,
    pooled,
    out_labels,
    out_mle,
    out_anova,
    out_wmean,
    out_wstd,
    out_wcount,
):
    height, width = pixels.shape
    for i in prange(height):
        vals = np.empty((n_classes, cap), np.float64)
        keys = np.empty((n_classes, cap), np.int64)
        svals = np.empty((n_classes, cap), np.float64)
        counts = np.zeros(n_classes, np.int64)
        means = np.zeros(n_classes, np.float64)
        stds = np.zeros(n_classes, np.float64)
        variances = np.zeros(n_classes, np.float64)
        qual = np.zeros(n_classes, np.bool_)
        for j in range(width):
            _segment_pixel(
                i, j, pixels, mask_labels, drows, dcols, cap, n_classes,
                min_samples, sigma_floor, pooled,
                vals, keys, svals, counts, means, stds, variances, qual,
                out_labels, out_mle, out_anova, out_wmean, out_wstd, out_wcount,
            )


@njit(cache=True)
def _classify_fixed_pixel(
    i, j, pixels, means, stds, qual, counts, n_classes,
    out_labels, out_mle, out_wmean, out_wstd, out_wcount,
):
    x = pixels[i, j]
    best = _argmax_class(x, means, stds, qual, n_classes)
    if best < 0:
        out_labels[i, j] = n_classes + 1
        out_mle[i, j] = NAN
        out_wmean[i, j] = NAN
        out_wstd[i, j] = NAN
        out_wcount[i, j] = 0
    else:
        out_labels[i, j] = best + 1
        out_mle[i, j] = _mle_p(x, means[best], stds[best])
        out_wmean[i, j] = means[best]
        out_wstd[i, j] = stds[best]
        out_wcount[i, j] = counts[best]


@njit(cache=True)
def classify_fixed_serial(
    pixels, means, stds, qual, counts, n_classes,
    out_labels, out_mle, out_wmean, out_wstd, out_wcount,
):
    height, width = pixels.shape
    for i in range(height):
        for j in range(width):
            _classify_fixed_pixel(
                i, j, pixels, means, stds, qual, counts, n_classes,
                out_labels, out_mle, out_wmean, out_wstd, out_wcount,
            )


@njit(parallel=True, cache=True)
def classify_fixed_parallel(
    pixels, means, stds, qual, counts, n_classes,
    out_labels, out_mle, out_wmean, out_wstd, out_wcount,
):
    height, width = pixels.shape
    for i in prange(height):
        for j in range(width):
            _classify_fixed_pixel(
                i, j, pixels, means, stds, qual, counts, n_classes,
                out_labels, out_mle, out_wmean, out_wstd, out_wcount,
            )


@njit(cache=True)
def gauss_mean_var(vals: np.ndarray) -> tuple[float, float]:
    return _gauss_mean_var(vals)


@njit(cache=True)
def anova_pair_p(a_vals: np.ndarray, b_vals: np.ndarray) -> float:
    return _anova_pair_p(a_vals, b_vals)
