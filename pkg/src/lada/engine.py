"""Per-pixel locally adaptive Gaussian classification and its global limits.

For every pixel the engine collects the nearest training samples per class
inside a disk window, keeps classes with at least `min_samples` samples,
and assigns the class with maximal Gaussian density under the local sample
statistics.  Pixels with no qualifying class fall into the bonus class
(class_count + 1).  Alongside the label map it produces two significance
maps: the two-sided tail probability of the pixel under the winning class
(confidence in the chosen class) and the largest pairwise ANOVA p-value
among the locally qualifying classes (local separability of the classes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numba
import numpy as np

from . import _kernel
from .neighborhood import disk_offsets
from .raster import ClassMask, GrayImage, LabelMap, ScalarMap
from .stats import GaussianStats

__all__ = [
    "MODES",
    "LadaParams",
    "SegmentationResult",
    "local_class_stats",
    "classify_pixel",
    "segment",
    "qda_segment",
    "lda_local_segment",
]

MODES = ("lada", "qda", "lda-local")
MIN_SAMPLES = 3  # classes with fewer local samples are not usable


@dataclass(frozen=True)
class LadaParams:
    """User parameters of a segmentation run.

    radius:          locality radius in pixels (the window is a disk).
    max_samples:     per-class cap on local training samples.
    alpha:           significance level used downstream for bands.
    sigma_floor_rel: lower bound on class sigma, relative to the image
                     intensity range (guards constant training patches).
    mode:            "lada", "qda" (global limit) or "lda-local" (pooled
                     local sigma, nearest-mean behaviour).
    """

    radius: int
    max_samples: int
    alpha: float = 0.05
    sigma_floor_rel: float = 1e-12
    mode: str = "lada"
    min_samples: int = MIN_SAMPLES

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.max_samples < 1:
            raise ValueError(f"max_samples must be >= 1, got {self.max_samples}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.sigma_floor_rel < 0.0:
            raise ValueError("sigma_floor_rel must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.min_samples != MIN_SAMPLES:
            raise ValueError(f"min_samples is fixed at {MIN_SAMPLES}")


@dataclass(frozen=True)
class SegmentationResult:
    """Label map, significance maps and per-pixel winning-class statistics.

    mle_p is NaN exactly on bonus pixels; anova_p is NaN exactly where
    fewer than two classes qualify locally.  winner_count is 0 on bonus
    pixels.  bonus_fraction is the share of pixels in the bonus class and
    training_consistency the share of mask-labeled pixels whose output
    label agrees with the mask.
    """

    labels: LabelMap
    mle_p: ScalarMap
    anova_p: ScalarMap
    winner_mean: np.ndarray
    winner_std: np.ndarray
    winner_count: np.ndarray
    bonus_fraction: float
    training_consistency: float
    params: LadaParams


def local_class_stats(
    samples: Sequence[float] | np.ndarray, sigma_floor: float = 0.0
) -> GaussianStats:
    """Sample mean and floored sample std (n-1 denominator) of one class."""
    vals = np.ascontiguousarray(samples, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("samples must be a non-empty 1-D sequence")
    mean, var = _kernel.gauss_mean_var(vals)
    std = math.sqrt(var)
    if std < sigma_floor:
        std = sigma_floor
    return GaussianStats(mean=mean, std=std, count=int(vals.size))


def classify_pixel(
    x: float,
    candidates: Sequence[tuple[int, GaussianStats]],
    bonus_label: int,
) -> int:
    """Label of the candidate class with maximal Gaussian log density.

    Candidates are assumed pre-filtered to the min-samples gate.  Exact
    density ties resolve to the smallest class id; an empty candidate list
    yields the bonus label.
    """
    best_id = -1
    best_lp = -math.inf
    for class_id, st in sorted(candidates, key=lambda item: item[0]):
        lp = _kernel._log_density(float(x), st.mean, st.std)
        if best_id < 0 or lp > best_lp:
            best_id = class_id
            best_lp = lp
    return bonus_label if best_id < 0 else best_id


def _check_pair(image: GrayImage, mask: ClassMask) -> None:
    if image.pixels.shape != mask.labels.shape:
        raise ValueError(
            f"image {image.pixels.shape} and mask {mask.labels.shape} differ in size"
        )
    if int(mask.labels.max()) == 0:
        raise ValueError("mask has no training labels")


def _sigma_floor(image: GrayImage, rel: float) -> float:
    return rel * float(np.ptp(image.pixels))


def _alloc_outputs(shape: tuple[int, int]):
    return (
        np.empty(shape, np.int32),
        np.empty(shape, np.float64),
        np.empty(shape, np.float64),
        np.empty(shape, np.float64),
        np.empty(shape, np.float64),
        np.empty(shape, np.int32),
    )


def _finish(
    image: GrayImage,
    mask: ClassMask,
    params: LadaParams,
    out_labels: np.ndarray,
    out_mle: np.ndarray,
    out_anova: np.ndarray,
    out_wmean: np.ndarray,
    out_wstd: np.ndarray,
    out_wcount: np.ndarray,
) -> SegmentationResult:
    n_classes = mask.class_count
    bonus = float(np.mean(out_labels == n_classes + 1))
    trained = mask.labels > 0
    consistency = float(np.mean(out_labels[trained] == mask.labels[trained]))
    return SegmentationResult(
        labels=LabelMap(out_labels, class_count=n_classes),
        mle_p=ScalarMap(out_mle),
        anova_p=ScalarMap(out_anova),
        winner_mean=out_wmean,
        winner_std=out_wstd,
        winner_count=out_wcount,
        bonus_fraction=bonus,
        training_consistency=consistency,
        params=params,
    )


def _use_parallel(threads: int) -> bool:
    """threads == 1 runs the serial kernel; more requests the parallel one
    (clamped to the threads numba actually has)."""
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if threads == 1:
        return False
    numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    return True


def segment(
    image: GrayImage,
    mask: ClassMask,
    params: LadaParams,
    threads: int = 1,
) -> SegmentationResult:
    """Run the locally adaptive segmentation over every pixel.

    With threads > 1 the pixel loop fans out across rows; serial and
    parallel execution produce bit-identical results.
    """
    _check_pair(image, mask)
    if params.mode == "qda":
        return qda_segment(
            image, mask, threads=threads,
            alpha=params.alpha, sigma_floor_rel=params.sigma_floor_rel,
        )
    pooled = params.mode == "lda-local"
    height, width = image.pixels.shape
    table = disk_offsets(params.radius)
    drows = np.ascontiguousarray(table.offsets[:, 0])
    dcols = np.ascontiguousarray(table.offsets[:, 1])
    cap = min(params.max_samples, height * width)
    floor = _sigma_floor(image, params.sigma_floor_rel)
    outs = _alloc_outputs((height, width))
    parallel = _use_parallel(threads)
    driver = _kernel.segment_parallel if parallel else _kernel.segment_serial
    driver(
        image.pixels, mask.labels, drows, dcols, cap, mask.class_count,
        params.min_samples, floor, pooled, *outs,
    )
    return _finish(image, mask, params, *outs)


def qda_segment(
    image: GrayImage,
    mask: ClassMask,
    threads: int = 1,
    alpha: float = 0.05,
    sigma_floor_rel: float = 1e-12,
) -> SegmentationResult:
    """Global limit of the locally adaptive run: quadratic discriminant analysis.

    Defined as `segment` with the radius covering the whole image and the
    per-class cap at the largest class training count.  Because per-class
    statistics are accumulated in row-major source order, computing them
    once globally reproduces the windowed kernel bit for bit, pixel for
    pixel, at a fraction of the cost.
    """
    _check_pair(image, mask)
    height, width = image.pixels.shape
    n_classes = mask.class_count
    floor = _sigma_floor(image, sigma_floor_rel)

    class_values: list[np.ndarray] = []
    counts = np.zeros(n_classes, np.int64)
    means = np.zeros(n_classes, np.float64)
    stds = np.zeros(n_classes, np.float64)
    qual = np.zeros(n_classes, np.bool_)
    for c in range(n_classes):
        vals = np.ascontiguousarray(image.pixels[mask.labels == c + 1])
        class_values.append(vals)
        counts[c] = vals.size
        if vals.size >= MIN_SAMPLES:
            qual[c] = True
            mean, var = _kernel.gauss_mean_var(vals)
            means[c] = mean
            std = math.sqrt(var)
            stds[c] = max(std, floor)

    params = LadaParams(
        radius=int(math.ceil(math.hypot(height - 1, width - 1))),
        max_samples=max(int(counts.max()), 1),
        alpha=alpha,
        sigma_floor_rel=sigma_floor_rel,
        mode="qda",
    )

    outs = _alloc_outputs((height, width))
    out_labels, out_mle, out_anova, out_wmean, out_wstd, out_wcount = outs
    qual_ids = [c for c in range(n_classes) if qual[c]]
    if len(qual_ids) >= 2:
        max_p = -1.0
        for ai in range(len(qual_ids)):
            for bi in range(ai + 1, len(qual_ids)):
                p = _kernel.anova_pair_p(
                    class_values[qual_ids[ai]], class_values[qual_ids[bi]]
                )
                max_p = max(max_p, p)
        out_anova.fill(max_p)
    else:
        out_anova.fill(np.nan)

    parallel = _use_parallel(threads)
    driver = (
        _kernel.classify_fixed_parallel if parallel else _kernel.classify_fixed_serial
    )
    driver(
        image.pixels, means, stds, qual, counts, n_classes,
        out_labels, out_mle, out_wmean, out_wstd, out_wcount,
    )
    return _finish(image, mask, params, *outs)


def lda_local_segment(
    image: GrayImage,
    mask: ClassMask,
    params: LadaParams,
    threads: int = 1,
) -> SegmentationResult:
    """Locally adaptive run with a pooled local sigma shared by all classes.

    The pooled sigma is the root of the count-weighted average of the raw
    class variances, floored like any class sigma; the density argmax then
    reduces to nearest local mean.
    """
    return segment(image, mask, replace(params, mode="lda-local"), threads=threads)
