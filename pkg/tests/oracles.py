"""Independent oracle implementations used to validate the library.

Everything here is deliberately written from the mathematical definitions
(quadrature, term-by-term series, brute-force enumeration, composition of
the public single-pixel operations) rather than reusing the library's
fused code paths.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

from lada.engine import LadaParams
from lada.neighborhood import disk_offsets, select_local_training
from lada.raster import ClassMask, GrayImage
from lada.stats import GaussianStats, anova_pair_pvalue, mle_pvalue

mp.mp.dps = 50


def normal_cdf_quadrature(z: float) -> float:
    """Standard normal CDF by adaptive quadrature of the density."""
    phi = lambda t: mp.exp(-t * t / 2) / mp.sqrt(2 * mp.pi)
    return float(mp.mpf("0.5") + mp.quad(phi, [0, mp.mpf(float(z))]))


def betainc_series(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta by term-by-term power series.

    Uses B_x(a, b) = x^a * sum_n c_n x^n / (a + n) with c_0 = 1 and
    c_n = c_{n-1} (n - b) / n, mirrored through the symmetry identity for
    x > 1/2 so the series always converges quickly.  Evaluated in 50-digit
    arithmetic.
    """

    def series(aa: mp.mpf, bb: mp.mpf, xx: mp.mpf) -> mp.mpf:
        if xx == 0:
            return mp.mpf(0)
        if xx > mp.mpf("0.5"):
            return 1 - series(bb, aa, 1 - xx)
        c = mp.mpf(1)
        total = 1 / aa
        for n in range(1, 200000):
            c *= (n - bb) * xx / n
            term = c / (aa + n)
            total += term
            if abs(term) < abs(total) * mp.mpf("1e-40"):
                break
        return total * xx**aa / mp.beta(aa, bb)

    return float(series(mp.mpf(float(a)), mp.mpf(float(b)), mp.mpf(float(x))))


def disk_lattice_points(radius: int) -> set[tuple[int, int]]:
    """All integer offsets with Euclidean norm <= radius, by enumeration."""
    pts = set()
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if dr * dr + dc * dc <= radius * radius:
                pts.add((dr, dc))
    return pts


def nearest_training_brute(
    image: GrayImage,
    mask: ClassMask,
    center: tuple[int, int],
    radius: int,
    cap: int,
) -> dict[int, list[tuple[int, int]]]:
    """Per class, the `cap` nearest training coordinates by full sort.

    Sort key (squared distance, row, col): raster-order tie-breaking.
    """
    r0, c0 = center
    height, width = mask.labels.shape
    out: dict[int, list[tuple[int, int]]] = {}
    for cls in range(1, mask.class_count + 1):
        cands = []
        for r in range(height):
            for c in range(width):
                if mask.labels[r, c] != cls:
                    continue
                d2 = (r - r0) ** 2 + (c - c0) ** 2
                if d2 <= radius * radius:
                    cands.append((d2, r, c))
        cands.sort()
        if cands:
            out[cls] = [(r, c) for _, r, c in cands[:cap]]
    return out


def _ordered_mean_var(vals: np.ndarray) -> tuple[float, float]:
    """Left-to-right two-pass mean and n-1 variance, the documented definition."""
    s = 0.0
    for v in vals:
        s += float(v)
    mean = s / len(vals)
    if len(vals) < 2:
        return mean, 0.0
    ss = 0.0
    for v in vals:
        d = float(v) - mean
        ss += d * d
    return mean, ss / (len(vals) - 1)


def reference_segment(image: GrayImage, mask: ClassMask, params: LadaParams):
    """Per-pixel composition of the public single-pixel operations.

    Independent of the fused kernel: selection via select_local_training,
    statistics from the documented left-to-right two-pass formulas over
    row-major-ordered samples, classification through the published
    log-density rule, p-values from the public stats functions.

    Returns (labels, mle_p, anova_p) arrays.
    """
    height, width = image.pixels.shape
    n_classes = mask.class_count
    bonus = n_classes + 1
    table = disk_offsets(params.radius)
    floor = params.sigma_floor_rel * float(np.ptp(image.pixels))
    cap = min(params.max_samples, height * width)
    pooled_mode = params.mode == "lda-local"

    labels = np.zeros((height, width), np.int32)
    mle = np.full((height, width), np.nan)
    anova = np.full((height, width), np.nan)
    for i in range(height):
        for j in range(width):
            x = float(image.pixels[i, j])
            sets = select_local_training(image, mask, (i, j), table, cap)
            qualifying = [s for s in sets if len(s.intensities) >= params.min_samples]
            ordered_vals = {}
            stats = {}
            variances = {}
            for s in qualifying:
                order = np.lexsort((s.coords[:, 1], s.coords[:, 0]))
                vals = s.intensities[order]
                ordered_vals[s.class_id] = vals
                mean, var = _ordered_mean_var(vals)
                std = math.sqrt(var)
                stats[s.class_id] = GaussianStats(mean, max(std, floor), len(vals))
                variances[s.class_id] = var
            if pooled_mode and qualifying:
                weighted = 0.0
                weight = 0.0
                for s in qualifying:
                    cnt = len(s.intensities)
                    weighted += cnt * variances[s.class_id]
                    weight += cnt
                pooled_std = max(math.sqrt(weighted / weight), floor)
                stats = {
                    cid: GaussianStats(st.mean, pooled_std, st.count)
                    for cid, st in stats.items()
                }
            if not stats:
                labels[i, j] = bonus
                continue
            best_id = -1
            best_lp = -math.inf
            for cid in sorted(stats):
                st = stats[cid]
                if st.std == 0.0:
                    lp = math.inf if x == st.mean else -math.inf
                else:
                    z = (x - st.mean) / st.std
                    lp = -math.log(st.std) - 0.5 * z * z
                if best_id < 0 or lp > best_lp:
                    best_id, best_lp = cid, lp
            labels[i, j] = best_id
            mle[i, j] = mle_pvalue(x, stats[best_id])
            ids = sorted(stats)
            if len(ids) >= 2:
                best_p = -1.0
                for ai in range(len(ids)):
                    for bi in range(ai + 1, len(ids)):
                        p = anova_pair_pvalue(ordered_vals[ids[ai]], ordered_vals[ids[bi]])
                        best_p = max(best_p, p)
                anova[i, j] = best_p
    return labels, mle, anova


def bonus_recount(mask: ClassMask, radius: int, min_samples: int = 3) -> np.ndarray:
    """True where no class reaches `min_samples` training pixels within radius."""
    height, width = mask.labels.shape
    coords_by_class = [
        np.argwhere(mask.labels == cls) for cls in range(1, mask.class_count + 1)
    ]
    out = np.zeros((height, width), bool)
    r2 = radius * radius
    for i in range(height):
        for j in range(width):
            any_qual = False
            for coords in coords_by_class:
                if len(coords) < min_samples:
                    continue
                d2 = (coords[:, 0] - i) ** 2 + (coords[:, 1] - j) ** 2
                if int(np.count_nonzero(d2 <= r2)) >= min_samples:
                    any_qual = True
                    break
            out[i, j] = not any_qual
    return out
