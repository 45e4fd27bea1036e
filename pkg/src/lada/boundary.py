"""Boundary extraction, geometric model fitting and uncertainty bands.

Boundaries are the pixels whose 4-neighborhood mixes two labels.  Three
model families cover the geometries of interest: lines for near-horizontal
interfaces, four-parameter logistic curves for step-like interfaces, and
circles for ring-shaped fronts.  A band collects the low-p pixels of a
significance map near a fitted model; for circles it reduces to a radial
interval about the fitted center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .raster import GrayImage, LabelMap, ScalarMap, write_pgm

__all__ = [
    "FitError",
    "BoundarySet",
    "LineModel",
    "LogisticModel",
    "CircleModel",
    "UncertaintyBand",
    "boundary_pixels",
    "fit_line",
    "fit_logistic",
    "fit_circle",
    "uncertainty_band",
    "render_overlay",
    "boundary_table_csv",
]

_MAX_LM_ITER = 200
_SSE_REL_TOL = 1e-10


class FitError(RuntimeError):
    """Model fit failed; `trace` carries (iteration, sse, damping) triples."""

    def __init__(self, message: str, trace: list[tuple[int, float, float]] | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class BoundarySet:
    """Interface pixels between one unordered label pair (class_a < class_b)."""

    class_a: int
    class_b: int
    points: np.ndarray  # (k, 2) int64 rows of (row, col), row-major order


@dataclass(frozen=True)
class LineModel:
    """row = slope * col + intercept."""

    slope: float
    intercept: float
    rms: float = 0.0

    def predict(self, cols: np.ndarray) -> np.ndarray:
        return self.slope * np.asarray(cols, dtype=np.float64) + self.intercept


@dataclass(frozen=True)
class LogisticModel:
    """row(col) = low + (high - low) / (1 + exp(-rate * (col - midpoint)))."""

    low: float
    high: float
    rate: float
    midpoint: float
    rms: float = 0.0

    def predict(self, cols: np.ndarray) -> np.ndarray:
        arg = np.clip(-self.rate * (np.asarray(cols, dtype=np.float64) - self.midpoint), -700.0, 700.0)
        return self.low + (self.high - self.low) / (1.0 + np.exp(arg))


@dataclass(frozen=True)
class CircleModel:
    """Circle with center (center_row, center_col) and positive radius."""

    center_row: float
    center_col: float
    radius: float
    rms: float = 0.0


@dataclass(frozen=True)
class UncertaintyBand:
    """Low-p pixels near a fitted model at significance `alpha`.

    For circles the band is summarized as the radial interval spanned by
    the selected pixels' distances to the fitted center; it need not be
    symmetric about the fitted radius.  An empty selection gives an empty,
    zero-width band.
    """

    model: LineModel | LogisticModel | CircleModel
    alpha: float
    proximity: float
    pixels: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    radial_interval: tuple[float, float] | None = None

    @property
    def is_empty(self) -> bool:
        return len(self.pixels) == 0

    @property
    def radial_width(self) -> float:
        if self.radial_interval is None:
            return 0.0
        return self.radial_interval[1] - self.radial_interval[0]

    def mean_column_thickness(self) -> float:
        """Average count of band pixels per occupied column.

        Robust stripe-thickness measure for near-horizontal bands: the
        handful of isolated low-p pixels that any significance threshold
        admits barely move it, unlike a min/max row extent.
        """
        if self.is_empty:
            return 0.0
        _, counts = np.unique(self.pixels[:, 1], return_counts=True)
        return float(counts.mean())


def boundary_pixels(labels: LabelMap, ignore_bonus: bool = True) -> list[BoundarySet]:
    """Group interface pixels by unordered label pair.

    A pixel belongs to the set of pair (a, b) when it carries one of the
    two labels and some 4-neighbor carries the other.  Bonus-class
    interfaces are dropped unless ignore_bonus is False.  Point lists are
    row-major sorted and duplicate-free; pairs come out sorted.
    """
    lab = labels.labels
    height, width = lab.shape
    bonus = labels.bonus_label
    buckets: dict[tuple[int, int], set[int]] = {}

    def collect(a_lab: np.ndarray, b_lab: np.ndarray, rows: np.ndarray, cols: np.ndarray):
        mixed = a_lab != b_lab
        if ignore_bonus:
            mixed &= (a_lab != bonus) & (b_lab != bonus)
        if not mixed.any():
            return
        aa, bb = a_lab[mixed], b_lab[mixed]
        rr, cc = rows[mixed], cols[mixed]
        lo = np.minimum(aa, bb)
        hi = np.maximum(aa, bb)
        enc = rr.astype(np.int64) * width + cc
        for a, b, e in zip(lo.tolist(), hi.tolist(), enc.tolist()):
            buckets.setdefault((a, b), set()).add(e)

    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    # vertical neighbors: both sides of each horizontal interface join the set
    collect(lab[:-1, :], lab[1:, :], rr[:-1, :], cc[:-1, :])
    collect(lab[1:, :], lab[:-1, :], rr[1:, :], cc[1:, :])
    # horizontal neighbors
    collect(lab[:, :-1], lab[:, 1:], rr[:, :-1], cc[:, :-1])
    collect(lab[:, 1:], lab[:, :-1], rr[:, 1:], cc[:, 1:])

    out = []
    for (a, b), encs in sorted(buckets.items()):
        enc = np.array(sorted(encs), dtype=np.int64)
        points = np.column_stack((enc // width, enc % width))
        out.append(BoundarySet(class_a=int(a), class_b=int(b), points=points))
    return out


def _as_points(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("points must be an (k, 2) array of (row, col)")
    return arr[:, 0], arr[:, 1]


def fit_line(points) -> LineModel:
    """Ordinary least squares of row on col."""
    rows, cols = _as_points(points)
    if len(rows) < 2:
        raise ValueError("line fit needs at least 2 points")
    col_mean = cols.mean()
    var = np.sum((cols - col_mean) ** 2)
    if var == 0.0:
        raise ValueError(
            "all points share one column (vertical boundary); swap axes and refit"
        )
    row_mean = rows.mean()
    slope = float(np.sum((cols - col_mean) * (rows - row_mean)) / var)
    intercept = float(row_mean - slope * col_mean)
    resid = rows - (slope * cols + intercept)
    return LineModel(slope=slope, intercept=intercept, rms=float(np.sqrt(np.mean(resid**2))))


def _logistic_eval(theta: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    low, high, rate, mid = theta
    arg = np.clip(-rate * (cols - mid), -700.0, 700.0)
    s = 1.0 / (1.0 + np.exp(arg))
    pred = low + (high - low) * s
    ds = s * (1.0 - s)
    jac = np.column_stack(
        (1.0 - s, s, (high - low) * ds * (cols - mid), -(high - low) * ds * rate)
    )
    return pred, jac


def fit_logistic(points) -> LogisticModel:
    """Least-squares logistic fit via Gauss-Newton with Levenberg damping.

    Initialization: low/high from the 5th/95th row percentiles, midpoint
    from the median column, rate from a central difference of the row
    trend.  Converges when the relative SSE improvement drops below 1e-10;
    raises FitError with the iteration trace otherwise.
    """
    rows, cols = _as_points(points)
    if len(rows) < 4:
        raise ValueError("logistic fit needs at least 4 points")
    low0 = float(np.percentile(rows, 5.0))
    high0 = float(np.percentile(rows, 95.0))
    if high0 == low0:
        raise FitError("rows show no step; points lie on a single plateau")
    mid0 = float(np.median(cols))
    order = np.argsort(cols, kind="stable")
    uc, idx = np.unique(cols[order], return_index=True)
    ur = np.array([rows[order][s:e].mean() for s, e in zip(idx, list(idx[1:]) + [len(rows)])])
    span = uc[-1] - uc[0]
    if span == 0.0:
        raise FitError("all points share one column; logistic is unidentifiable")
    h = span / 4.0
    slope0 = (np.interp(mid0 + h, uc, ur) - np.interp(mid0 - h, uc, ur)) / (2.0 * h)
    rate0 = 4.0 * slope0 / (high0 - low0)
    if rate0 == 0.0:
        rate0 = 1.0 / h

    theta = np.array([low0, high0, rate0, mid0], dtype=np.float64)
    pred, _ = _logistic_eval(theta, cols)
    sse = float(np.sum((pred - rows) ** 2))
    lam = 1e-3
    trace: list[tuple[int, float, float]] = [(0, sse, lam)]
    converged = False
    for it in range(1, _MAX_LM_ITER + 1):
        pred, jac = _logistic_eval(theta, cols)
        resid = pred - rows
        grad = jac.T @ resid
        hess = jac.T @ jac
        damp = np.diag(hess).copy()
        damp[damp == 0.0] = 1.0
        accepted = False
        for _ in range(30):
            try:
                delta = np.linalg.solve(hess + lam * np.diag(damp), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + delta
            cand_pred, _ = _logistic_eval(cand, cols)
            cand_sse = float(np.sum((cand_pred - rows) ** 2))
            if cand_sse < sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # stuck at a (possibly exact) minimum: converged if already tiny
            if sse <= 1e-20:
                converged = True
                trace.append((it, sse, lam))
                break
            raise FitError("logistic fit stalled without SSE improvement", trace=trace)
        rel_drop = (sse - cand_sse) / sse if sse > 0.0 else 0.0
        theta = cand
        sse = cand_sse
        lam = max(lam * 0.1, 1e-14)
        trace.append((it, sse, lam))
        if rel_drop < _SSE_REL_TOL or sse == 0.0:
            converged = True
            break
    if not converged:
        raise FitError(f"logistic fit did not converge in {_MAX_LM_ITER} iterations", trace=trace)
    low, high, rate, mid = (float(v) for v in theta)
    if rate == 0.0 or not all(map(math.isfinite, (low, high, rate, mid))):
        raise FitError("logistic fit converged to a degenerate parameterization", trace=trace)
    return LogisticModel(low=low, high=high, rate=rate, midpoint=mid,
                         rms=float(np.sqrt(sse / len(rows))))


def fit_circle(points) -> CircleModel:
    """Algebraic least-squares circle (Kasa); exact on noise-free circles."""
    rows, cols = _as_points(points)
    if len(rows) < 3:
        raise ValueError("circle fit needs at least 3 points")
    a_mat = np.column_stack((2.0 * rows, 2.0 * cols, np.ones(len(rows))))
    rhs = rows**2 + cols**2
    sol, _, rank, _ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    if rank < 3:
        raise FitError("points are collinear; no circle fits them")
    crow, ccol, const = (float(v) for v in sol)
    rad2 = const + crow**2 + ccol**2
    if rad2 <= 0.0:
        raise FitError("circle fit produced a non-positive radius")
    radius = math.sqrt(rad2)
    dist = np.hypot(rows - crow, cols - ccol)
    return CircleModel(center_row=crow, center_col=ccol, radius=radius,
                       rms=float(np.sqrt(np.mean((dist - radius) ** 2))))


def _distance_to_model(model, rows: np.ndarray, cols: np.ndarray, width: int) -> np.ndarray:
    if isinstance(model, LineModel):
        return np.abs(model.slope * cols - rows + model.intercept) / math.hypot(model.slope, 1.0)
    if isinstance(model, CircleModel):
        return np.abs(np.hypot(rows - model.center_row, cols - model.center_col) - model.radius)
    if isinstance(model, LogisticModel):
        sample_cols = np.arange(-0.5, width - 0.5 + 0.25, 0.25)
        sample_rows = model.predict(sample_cols)
        out = np.empty(len(rows))
        for start in range(0, len(rows), 2048):
            sl = slice(start, start + 2048)
            d = np.hypot(
                rows[sl, None] - sample_rows[None, :],
                cols[sl, None] - sample_cols[None, :],
            )
            out[sl] = d.min(axis=1)
        return out
    raise TypeError(f"unsupported model type {type(model).__name__}")


def uncertainty_band(
    pmap: ScalarMap,
    model: LineModel | LogisticModel | CircleModel,
    alpha: float,
    proximity: float,
) -> UncertaintyBand:
    """Collect defined pixels with p < alpha within `proximity` of the model.

    Lines and logistic curves keep the pixel set itself; circles reduce it
    to the [min, max] interval of the selected pixels' center distances.
    No qualifying pixels yields an empty band, not an error.
    """
    if proximity <= 0.0:
        raise ValueError(f"proximity must be > 0, got {proximity}")
    vals = pmap.values
    sel = np.isfinite(vals) & (vals < alpha)
    rows, cols = np.nonzero(sel)
    if len(rows) == 0:
        return UncertaintyBand(model=model, alpha=alpha, proximity=proximity)
    frows = rows.astype(np.float64)
    fcols = cols.astype(np.float64)
    near = _distance_to_model(model, frows, fcols, pmap.width) <= proximity
    if not near.any():
        return UncertaintyBand(model=model, alpha=alpha, proximity=proximity)
    pix = np.column_stack((rows[near], cols[near])).astype(np.int64)
    interval = None
    if isinstance(model, CircleModel):
        radial = np.hypot(frows[near] - model.center_row, fcols[near] - model.center_col)
        interval = (float(radial.min()), float(radial.max()))
    return UncertaintyBand(
        model=model, alpha=alpha, proximity=proximity, pixels=pix, radial_interval=interval
    )


# ---------------------------------------------------------------------------
# Rendering and tabulation
# ---------------------------------------------------------------------------

_BAND_GRAY = 170
_CURVE_BLACK = 0


def render_overlay(
    shape: tuple[int, int],
    models: list[LineModel | LogisticModel | CircleModel],
    bands: list[UncertaintyBand],
    base: GrayImage | None = None,
    mode: str = "binary",
) -> bytes:
    """PGM overlay: fitted boundaries in black, uncertainty bands in gray."""
    height, width = shape
    if base is not None:
        if base.pixels.shape != shape:
            raise ValueError("base image shape differs from overlay shape")
        lo, hi = float(base.pixels.min()), float(base.pixels.max())
        span = hi - lo
        if span == 0.0:
            canvas = np.full(shape, 200, dtype=np.int64)
        else:
            canvas = np.rint((base.pixels - lo) / span * 255.0).astype(np.int64)
    else:
        canvas = np.full(shape, 235, dtype=np.int64)

    rr, cc = None, None
    for band in bands:
        if isinstance(band.model, CircleModel) and band.radial_interval is not None:
            if rr is None:
                rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
            radial = np.hypot(rr - band.model.center_row, cc - band.model.center_col)
            lo_r, hi_r = band.radial_interval
            canvas[(radial >= lo_r) & (radial <= hi_r)] = _BAND_GRAY
        elif len(band.pixels):
            canvas[band.pixels[:, 0], band.pixels[:, 1]] = _BAND_GRAY

    for model in models:
        if isinstance(model, CircleModel):
            n = max(int(math.ceil(2.0 * math.pi * model.radius * 4.0)), 16)
            theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
            prow = np.rint(model.center_row + model.radius * np.sin(theta)).astype(np.int64)
            pcol = np.rint(model.center_col + model.radius * np.cos(theta)).astype(np.int64)
        else:
            pcol = np.arange(width, dtype=np.int64)
            prow = np.rint(model.predict(pcol)).astype(np.int64)
        keep = (prow >= 0) & (prow < height) & (pcol >= 0) & (pcol < width)
        canvas[prow[keep], pcol[keep]] = _CURVE_BLACK

    return write_pgm(canvas, mode=mode, maxval=255)


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.9g}"


def boundary_table_csv(
    entries: list[tuple[int, int, LineModel | LogisticModel | CircleModel, UncertaintyBand | None]],
) -> bytes:
    """CSV of fitted boundary parameters, residuals and band summaries.

    Parameter columns by model type: line (slope, intercept), logistic
    (low, high, rate, midpoint), circle (center_row, center_col, radius).
    """
    lines = [
        "class_a,class_b,model,param1,param2,param3,param4,rms,band_low,band_high,band_pixels"
    ]
    for class_a, class_b, model, band in entries:
        if isinstance(model, LineModel):
            kind, params = "line", [model.slope, model.intercept, None, None]
        elif isinstance(model, LogisticModel):
            kind, params = "logistic", [model.low, model.high, model.rate, model.midpoint]
        elif isinstance(model, CircleModel):
            kind, params = "circle", [model.center_row, model.center_col, model.radius, None]
        else:
            raise TypeError(f"unsupported model type {type(model).__name__}")
        if band is None:
            blo, bhi, bn = None, None, 0
        elif band.radial_interval is not None:
            (blo, bhi), bn = band.radial_interval, len(band.pixels)
        else:
            blo, bhi, bn = None, None, len(band.pixels)
        cells = [str(class_a), str(class_b), kind]
        cells += [_fmt(p) for p in params]
        cells += [_fmt(model.rms), _fmt(blo), _fmt(bhi), str(bn)]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("ascii")
