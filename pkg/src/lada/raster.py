"""Raster containers and bit-exact PGM / CSV file IO.

Four container types cover the pipeline: grayscale intensity images,
per-pixel training masks, segmented label maps, and [0, 1] scalar maps
(p-values) with NaN marking undefined pixels.  All containers wrap
read-only numpy arrays and are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GrayImage",
    "ClassMask",
    "LabelMap",
    "ScalarMap",
    "PgmFormatError",
    "PgmLengthError",
    "PgmRangeError",
    "read_pgm",
    "write_pgm",
    "write_float_map",
    "read_float_map",
    "scalar_map_to_pgm",
]

MAX_PGM_VALUE = 65535


class PgmFormatError(ValueError):
    """Malformed PGM header or illegal maxval."""


class PgmLengthError(ValueError):
    """Payload shorter or longer than the header promises."""


class PgmRangeError(ValueError):
    """Raster value not representable at the chosen maxval."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GrayImage:
    """2-D grayscale image of finite real intensities, row-major."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite (no NaN/Inf)")
        object.__setattr__(self, "pixels", _freeze(arr))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class ClassMask:
    """Per-pixel training labels: 0 means unlabeled, 1..class_count are classes."""

    labels: np.ndarray
    class_count: int = -1  # -1: infer from max label present

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("mask labels must be integers")
        arr = arr.astype(np.int32)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"mask must be 2-D and non-empty, got shape {arr.shape}")
        if arr.min() < 0:
            raise ValueError("mask labels must be >= 0")
        present = int(arr.max())
        count = present if self.class_count == -1 else int(self.class_count)
        if count < present:
            raise ValueError(f"declared class_count {count} < max label {present}")
        object.__setattr__(self, "labels", _freeze(arr))
        object.__setattr__(self, "class_count", count)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class LabelMap:
    """Segmentation output: labels in 1..class_count+1, the last being the bonus class."""

    labels: np.ndarray
    class_count: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("labels must be integers")
        arr = arr.astype(np.int32)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"label map must be 2-D and non-empty, got shape {arr.shape}")
        c = int(self.class_count)
        if c < 1:
            raise ValueError("class_count must be >= 1")
        if arr.min() < 1 or arr.max() > c + 1:
            raise ValueError(f"labels must lie in 1..{c + 1}")
        object.__setattr__(self, "labels", _freeze(arr))
        object.__setattr__(self, "class_count", c)

    @property
    def bonus_label(self) -> int:
        return self.class_count + 1

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True)
class ScalarMap:
    """Per-pixel values in [0, 1]; NaN marks pixels where the value is undefined."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"scalar map must be 2-D and non-empty, got shape {arr.shape}")
        defined = arr[np.isfinite(arr)]
        if defined.size and (defined.min() < 0.0 or defined.max() > 1.0):
            raise ValueError("defined scalar values must lie in [0, 1]")
        if np.any(np.isinf(arr)):
            raise ValueError("scalar map may contain NaN but not Inf")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# PGM (P2 ascii / P5 binary) reading and writing
# ---------------------------------------------------------------------------

def _pgm_header_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` integer header tokens, skipping whitespace and # comments.

    Returns the tokens and the offset of the byte right after the single
    whitespace character terminating the last token.
    """
    tokens: list[int] = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise PgmFormatError("truncated PGM header")
        tok = data[start:i]
        try:
            tokens.append(int(tok))
        except ValueError:
            raise PgmFormatError(f"bad PGM header token {tok!r}") from None
        if len(tokens) == count:
            if i >= n:
                raise PgmLengthError("PGM payload missing after header")
            i += 1  # exactly one whitespace byte separates header and payload
    return tokens, i


def _parse_pgm(data: bytes) -> tuple[int, int, np.ndarray]:
    if data[:2] not in (b"P2", b"P5"):
        raise PgmFormatError("not a PGM stream (want magic P2 or P5)")
    magic = data[:2]
    width, height, maxval = None, None, None
    try:
        (width, height, maxval), offset = _pgm_header_tokens(data[2:], 3)
    except PgmLengthError:
        raise
    offset += 2
    if width is None or width < 1 or height is None or height < 1:
        raise PgmFormatError(f"bad PGM dimensions {width}x{height}")
    if maxval is None or maxval < 1 or maxval > MAX_PGM_VALUE:
        raise PgmFormatError(f"bad PGM maxval {maxval}")
    npix = width * height
    if magic == b"P5":
        stride = 2 if maxval > 255 else 1
        payload = data[offset : offset + npix * stride]
        if len(payload) != npix * stride or len(data) > offset + npix * stride:
            raise PgmLengthError(
                f"P5 payload has {len(data) - offset} bytes, expected {npix * stride}"
            )
        dtype = ">u2" if stride == 2 else np.uint8
        values = np.frombuffer(payload, dtype=dtype).astype(np.int64)
    else:
        body = data[offset - 1 :]
        # strip comments before splitting; P2 bodies are whitespace-separated ints
        lines = [ln.split(b"#", 1)[0] for ln in body.splitlines()]
        toks = b" ".join(lines).split()
        if len(toks) != npix:
            raise PgmLengthError(f"P2 payload has {len(toks)} values, expected {npix}")
        try:
            values = np.array([int(t) for t in toks], dtype=np.int64)
        except ValueError:
            raise PgmFormatError("non-integer value in P2 payload") from None
    if values.min() < 0 or values.max() > maxval:
        raise PgmFormatError("PGM value outside 0..maxval")
    return width, height, values.reshape(height, width)


def read_pgm(
    data: bytes, as_mask: bool = False, class_count: int | None = None
) -> GrayImage | ClassMask:
    """Decode PGM bytes into a GrayImage, or a ClassMask when as_mask is set.

    Raw integer sample values are kept verbatim (no normalization); for
    masks they are interpreted directly as class labels.
    """
    _, _, values = _parse_pgm(data)
    if as_mask:
        return ClassMask(values, -1 if class_count is None else class_count)
    return GrayImage(values.astype(np.float64))


def _raster_values(raster: GrayImage | ClassMask | LabelMap | np.ndarray) -> np.ndarray:
    if isinstance(raster, GrayImage):
        return raster.pixels
    if isinstance(raster, (ClassMask, LabelMap)):
        return raster.labels
    return np.asarray(raster)


def write_pgm(
    raster: GrayImage | ClassMask | LabelMap | np.ndarray,
    mode: str = "ascii",
    maxval: int = 255,
) -> bytes:
    """Encode an integer-valued raster as PGM ("ascii" -> P2, "binary" -> P5).

    Round-trip law: read_pgm(write_pgm(r)) recovers r exactly for any
    integer raster whose values lie in 0..maxval.
    """
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', got {mode!r}")
    if not 1 <= maxval <= MAX_PGM_VALUE:
        raise PgmFormatError(f"maxval must be in 1..{MAX_PGM_VALUE}, got {maxval}")
    arr = np.asarray(_raster_values(raster))
    if arr.ndim != 2:
        raise ValueError("raster must be 2-D")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise PgmRangeError("raster has non-integer values; quantize before writing")
    values = arr.astype(np.int64)
    if values.min() < 0 or values.max() > maxval:
        raise PgmRangeError(
            f"values span {values.min()}..{values.max()}, outside 0..{maxval}"
        )
    height, width = values.shape
    header = f"P{'2' if mode == 'ascii' else '5'}\n{width} {height}\n{maxval}\n"
    if mode == "ascii":
        rows = "\n".join(" ".join(str(v) for v in row) for row in values)
        return (header + rows + "\n").encode("ascii")
    dtype = ">u2" if maxval > 255 else np.uint8
    return header.encode("ascii") + values.astype(dtype).tobytes()


# ---------------------------------------------------------------------------
# Scalar map CSV + 8-bit visualization
# ---------------------------------------------------------------------------

def _format_scalar(v: float) -> str:
    if np.isnan(v):
        return "nan"
    if v == 0.0:
        return "0.000000000"
    if v >= 0.1:
        return f"{v:.9f}"
    return f"{v:.9e}"  # keeps >= 9 significant digits for small p-values


def write_float_map(smap: ScalarMap) -> bytes:
    """Serialize a ScalarMap as CSV, one row per image row, undefined as "nan"."""
    lines = []
    for row in smap.values:
        lines.append(",".join(_format_scalar(v) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def read_float_map(data: bytes) -> ScalarMap:
    """Parse CSV produced by write_float_map back into a ScalarMap."""
    rows = []
    for line in data.decode("ascii").splitlines():
        if not line.strip():
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError("empty scalar map CSV")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("ragged scalar map CSV")
    return ScalarMap(np.array(rows, dtype=np.float64))


def scalar_map_to_pgm(smap: ScalarMap, mode: str = "binary") -> bytes:
    """8-bit visualization: linear [0,1] -> [0,255]; undefined renders white (255)."""
    vals = smap.values
    out = np.full(vals.shape, 255, dtype=np.int64)
    defined = np.isfinite(vals)
    out[defined] = np.rint(vals[defined] * 255.0).astype(np.int64)
    return write_pgm(out, mode=mode, maxval=255)
