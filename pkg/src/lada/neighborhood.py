"""Locality machinery: the disk window and nearest-training selection.

A single offset table per radius is shared across all pixels; the per-class
selection takes the first hits in table order, which realizes the
nearest-with-raster-order-tie-break rule deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import ClassMask, GrayImage

__all__ = ["OffsetTable", "LocalTrainingSet", "disk_offsets", "select_local_training"]


@dataclass(frozen=True)
class OffsetTable:
    """Integer offsets with norm <= radius, sorted by (dist^2, drow, dcol).

    Row index grows downward, so the (drow, dcol) tie-break scans equal
    distances left to right, top to bottom relative to any center.  The
    first entry is always (0, 0).
    """

    radius: int
    offsets: np.ndarray  # (K, 2) int64 rows of (drow, dcol)

    def __len__(self) -> int:
        return len(self.offsets)


def disk_offsets(radius: int) -> OffsetTable:
    """Enumerate all lattice offsets within Euclidean distance `radius`."""
    radius = int(radius)
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    span = np.arange(-radius, radius + 1, dtype=np.int64)
    drow, dcol = np.meshgrid(span, span, indexing="ij")
    drow = drow.ravel()
    dcol = dcol.ravel()
    d2 = drow * drow + dcol * dcol
    keep = d2 <= radius * radius
    drow, dcol, d2 = drow[keep], dcol[keep], d2[keep]
    order = np.lexsort((dcol, drow, d2))
    table = np.column_stack((drow[order], dcol[order]))
    table.setflags(write=False)
    return OffsetTable(radius=radius, offsets=table)


@dataclass(frozen=True)
class LocalTrainingSet:
    """Training samples of one class near one pixel, in selection order."""

    class_id: int
    intensities: np.ndarray  # (k,) float64
    coords: np.ndarray  # (k, 2) int64 rows of (row, col)


def select_local_training(
    image: GrayImage,
    mask: ClassMask,
    center: tuple[int, int],
    table: OffsetTable,
    cap: int,
) -> list[LocalTrainingSet]:
    """Pick up to `cap` nearest training pixels per class around `center`.

    Offsets are scanned in table order; out-of-image offsets are skipped
    (no clamping or mirroring).  Classes with no hits are omitted.  The
    scan stops early once every class has `cap` samples.
    """
    if image.pixels.shape != mask.labels.shape:
        raise ValueError(
            f"image {image.pixels.shape} and mask {mask.labels.shape} differ in size"
        )
    row0, col0 = int(center[0]), int(center[1])
    height, width = image.pixels.shape
    if not (0 <= row0 < height and 0 <= col0 < width):
        raise ValueError(f"center {center} outside {height}x{width} image")
    if cap < 1:
        raise ValueError(f"sample cap must be >= 1, got {cap}")

    n_classes = mask.class_count
    hits: list[list[tuple[float, int, int]]] = [[] for _ in range(n_classes)]
    full = 0
    for drow, dcol in table.offsets:
        row, col = row0 + drow, col0 + dcol
        if not (0 <= row < height and 0 <= col < width):
            continue
        label = mask.labels[row, col]
        if label == 0:
            continue
        bucket = hits[label - 1]
        if len(bucket) >= cap:
            continue
        bucket.append((image.pixels[row, col], row, col))
        if len(bucket) == cap:
            full += 1
            if full == n_classes:
                break

    out = []
    for class_id, bucket in enumerate(hits, start=1):
        if not bucket:
            continue
        vals = np.array([v for v, _, _ in bucket], dtype=np.float64)
        coords = np.array([(r, c) for _, r, c in bucket], dtype=np.int64)
        out.append(LocalTrainingSet(class_id=class_id, intensities=vals, coords=coords))
    return out
