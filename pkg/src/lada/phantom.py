"""Synthetic ground-truth phantoms for benchmarking and acceptance runs.

Two families mirror the shapes this package targets: horizontally layered
"cylinder" phantoms (stacked material bands with per-layer intensity
trends) and concentric "ring" phantoms (annuli of constant intensity).
Training masks label everything except a void of configurable half-width
around each true interface, the way an analyst would mark an image whose
only unknown is the boundary placement.

Noise comes from a fixed counter-based generator (splitmix64 finalizer,
one counter pair per pixel, Box-Muller cosine branch) so a (spec, seed)
pair maps to one reproducible image, independent of numpy's RNG state and
of how many pixels are drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .raster import ClassMask, GrayImage

__all__ = [
    "CylinderPhantomSpec",
    "RingPhantomSpec",
    "gaussian_field",
    "make_cylinder_phantom",
    "make_ring_phantom",
    "cylinder_spec_from_config",
    "ring_spec_from_config",
]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_TWO_NEG53 = 2.0**-53


def _mix64(state: np.ndarray) -> np.ndarray:
    z = (state ^ (state >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def _uniform(counter: np.ndarray, seed: int) -> np.ndarray:
    state = (_U64(seed & 0xFFFFFFFFFFFFFFFF) + (counter + _U64(1)) * _GOLDEN)
    # top 53 bits, shifted into (0, 1]
    return ((_mix64(state) >> _U64(11)).astype(np.float64) + 1.0) * _TWO_NEG53


def gaussian_field(height: int, width: int, seed: int) -> np.ndarray:
    """Standard normal field, a pure function of (height, width, seed)."""
    idx = np.arange(height * width, dtype=np.uint64)
    u1 = _uniform(idx * _U64(2), seed)
    u2 = _uniform(idx * _U64(2) + _U64(1), seed)
    g = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
    return g.reshape(height, width)


@dataclass(frozen=True)
class CylinderPhantomSpec:
    """Stack of horizontal layers split at boundary_rows.

    Layer k covers rows boundary_rows[k-1]..boundary_rows[k]-1 (ends open
    at the image edges) and has intensity

        layer_bases[k] + layer_col_gradients[k] * col
                       + layer_row_gradients[k] * (row - layer_start_k)

    plus Gaussian noise.  layer_classes maps layers to mask classes, so
    one material may reappear at a different intensity regime (default:
    layer k is class k+1).  Pixels within void_half_width of an interface
    stay unlabeled.
    """

    width: int
    height: int
    boundary_rows: tuple[int, ...]
    layer_bases: tuple[float, ...]
    layer_col_gradients: tuple[float, ...]
    noise_sigma: float
    void_half_width: float
    layer_row_gradients: tuple[float, ...] | None = None
    layer_classes: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("phantom dimensions must be positive")
        rows = tuple(int(r) for r in self.boundary_rows)
        if not rows:
            raise ValueError("need at least one boundary row")
        if any(b <= a for a, b in zip(rows, rows[1:])):
            raise ValueError("boundary rows must be strictly increasing")
        if rows[0] < 1 or rows[-1] > self.height - 1:
            raise ValueError("boundary rows must lie strictly inside the image")
        n_layers = len(rows) + 1
        for name in ("layer_bases", "layer_col_gradients"):
            if len(getattr(self, name)) != n_layers:
                raise ValueError(f"{name} must have {n_layers} entries")
        if self.layer_row_gradients is not None and len(self.layer_row_gradients) != n_layers:
            raise ValueError(f"layer_row_gradients must have {n_layers} entries")
        if self.layer_classes is not None:
            if len(self.layer_classes) != n_layers:
                raise ValueError(f"layer_classes must have {n_layers} entries")
            if min(self.layer_classes) < 1:
                raise ValueError("layer classes must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.void_half_width < 0:
            raise ValueError("void half-width must be >= 0")
        object.__setattr__(self, "boundary_rows", rows)

    @property
    def n_layers(self) -> int:
        return len(self.boundary_rows) + 1

    @property
    def classes(self) -> tuple[int, ...]:
        if self.layer_classes is not None:
            return tuple(int(c) for c in self.layer_classes)
        return tuple(range(1, self.n_layers + 1))

    @property
    def row_gradients(self) -> tuple[float, ...]:
        if self.layer_row_gradients is not None:
            return tuple(float(g) for g in self.layer_row_gradients)
        return (0.0,) * self.n_layers


def make_cylinder_phantom(
    spec: CylinderPhantomSpec, seed: int
) -> tuple[GrayImage, ClassMask, tuple[float, ...]]:
    """Build (image, training mask, truth interface rows) for a layer stack.

    The k-th truth value is boundary_rows[k] - 0.5, the geometric position
    of the interface between the last row of layer k and the first row of
    layer k+1.  Deterministic per (spec, seed).
    """
    height, width = spec.height, spec.width
    rows = np.arange(height)
    bounds = np.array(spec.boundary_rows)
    layer_of_row = np.searchsorted(bounds, rows, side="right")
    starts = np.concatenate(([0], bounds))

    bases = np.array(spec.layer_bases, dtype=np.float64)
    col_g = np.array(spec.layer_col_gradients, dtype=np.float64)
    row_g = np.array(spec.row_gradients, dtype=np.float64)
    cols = np.arange(width, dtype=np.float64)

    row_term = bases[layer_of_row] + row_g[layer_of_row] * (rows - starts[layer_of_row])
    clean = row_term[:, None] + col_g[layer_of_row][:, None] * cols[None, :]
    pixels = clean + spec.noise_sigma * gaussian_field(height, width, seed)

    interfaces = bounds - 0.5
    dist_to_interface = np.min(np.abs(rows[:, None] - interfaces[None, :]), axis=1)
    labeled_row = dist_to_interface >= spec.void_half_width
    class_of_row = np.array(spec.classes, dtype=np.int32)[layer_of_row]
    mask_rows = np.where(labeled_row, class_of_row, 0).astype(np.int32)
    mask = np.repeat(mask_rows[:, None], width, axis=1)

    return (
        GrayImage(pixels),
        ClassMask(mask, class_count=int(max(spec.classes))),
        tuple(float(v) for v in interfaces),
    )


@dataclass(frozen=True)
class RingPhantomSpec:
    """Concentric annuli around a center, constant intensity per annulus.

    radii are the true circle radii (increasing); annulus_intensities has
    one more entry than radii (innermost disk first, outside last).
    Pixels within void_half_width of a true circle stay unlabeled.
    """

    width: int
    height: int
    center_row: float
    center_col: float
    radii: tuple[float, ...]
    annulus_intensities: tuple[float, ...]
    noise_sigma: float
    void_half_width: float

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("phantom dimensions must be positive")
        radii = tuple(float(r) for r in self.radii)
        if not radii or radii[0] <= 0:
            raise ValueError("need at least one positive radius")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if not (0 <= self.center_row <= self.height - 1 and 0 <= self.center_col <= self.width - 1):
            raise ValueError("center must lie inside the image")
        if len(self.annulus_intensities) != len(radii) + 1:
            raise ValueError(f"annulus_intensities must have {len(radii) + 1} entries")
        if self.noise_sigma < 0 or self.void_half_width < 0:
            raise ValueError("noise sigma and void half-width must be >= 0")
        object.__setattr__(self, "radii", radii)

    @property
    def n_annuli(self) -> int:
        return len(self.radii) + 1


def make_ring_phantom(
    spec: RingPhantomSpec, seed: int
) -> tuple[GrayImage, ClassMask, tuple[tuple[float, float, float], ...]]:
    """Build (image, training mask, truth circles) for concentric annuli.

    Truth circles are (center_row, center_col, radius) triples.  A pixel at
    distance d from the center belongs to annulus #{radii strictly < d}.
    Deterministic per (spec, seed).
    """
    height, width = spec.height, spec.width
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    dist = np.hypot(rr - spec.center_row, cc - spec.center_col)
    radii = np.array(spec.radii)
    annulus = np.searchsorted(radii, dist.ravel(), side="left").reshape(dist.shape)

    intensities = np.array(spec.annulus_intensities, dtype=np.float64)
    pixels = intensities[annulus] + spec.noise_sigma * gaussian_field(height, width, seed)

    gap = np.min(np.abs(dist[:, :, None] - radii[None, None, :]), axis=2)
    mask = np.where(gap >= spec.void_half_width, annulus + 1, 0).astype(np.int32)

    truth = tuple((float(spec.center_row), float(spec.center_col), float(r)) for r in radii)
    return GrayImage(pixels), ClassMask(mask, class_count=spec.n_annuli), truth


# ---------------------------------------------------------------------------
# Flat key=value config parsing (shared with the CLI)
# ---------------------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def cylinder_spec_from_config(cfg: dict[str, str]) -> CylinderPhantomSpec:
    """Build a CylinderPhantomSpec from flat key=value entries.

    Required keys: width, height, boundary_rows, layer_bases,
    layer_col_gradients, noise_sigma, void_half_width.
    Optional: layer_row_gradients, layer_classes.
    """
    try:
        return CylinderPhantomSpec(
            width=int(cfg["width"]),
            height=int(cfg["height"]),
            boundary_rows=_ints(cfg["boundary_rows"]),
            layer_bases=_floats(cfg["layer_bases"]),
            layer_col_gradients=_floats(cfg["layer_col_gradients"]),
            noise_sigma=float(cfg["noise_sigma"]),
            void_half_width=float(cfg["void_half_width"]),
            layer_row_gradients=(
                _floats(cfg["layer_row_gradients"]) if "layer_row_gradients" in cfg else None
            ),
            layer_classes=_ints(cfg["layer_classes"]) if "layer_classes" in cfg else None,
        )
    except KeyError as exc:
        raise ValueError(f"cylinder phantom config is missing key {exc.args[0]!r}") from None


def ring_spec_from_config(cfg: dict[str, str]) -> RingPhantomSpec:
    """Build a RingPhantomSpec from flat key=value entries.

    Required keys: width, height, center_row, center_col, radii,
    annulus_intensities, noise_sigma, void_half_width.
    """
    try:
        return RingPhantomSpec(
            width=int(cfg["width"]),
            height=int(cfg["height"]),
            center_row=float(cfg["center_row"]),
            center_col=float(cfg["center_col"]),
            radii=_floats(cfg["radii"]),
            annulus_intensities=_floats(cfg["annulus_intensities"]),
            noise_sigma=float(cfg["noise_sigma"]),
            void_half_width=float(cfg["void_half_width"]),
        )
    except KeyError as exc:
        raise ValueError(f"ring phantom config is missing key {exc.args[0]!r}") from None
