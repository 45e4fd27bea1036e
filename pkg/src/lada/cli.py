"""Command-line driver for reproducible segmentation and boundary runs.

Subcommands: segment, qda, phantom, boundaries, report.  Flags override
values from an optional flat key=value config file.  Exit codes: 0 on
success, 2 for bad inputs, 3 for an internal model-fit failure (artifacts
produced before the failure are kept).

All numeric artifacts are byte-deterministic for identical inputs; only
run_report.txt carries wall-clock timings.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import boundary as bnd
from .engine import LadaParams, SegmentationResult, lda_local_segment, qda_segment, segment
from .phantom import (
    cylinder_spec_from_config,
    make_cylinder_phantom,
    make_ring_phantom,
    ring_spec_from_config,
)
from .raster import (
    ClassMask,
    GrayImage,
    LabelMap,
    read_float_map,
    read_pgm,
    scalar_map_to_pgm,
    write_float_map,
    write_pgm,
)

RUN_REPORT = "run_report.txt"
ARTIFACTS = (
    "labels.pgm",
    "mle_p.csv",
    "mle_p.pgm",
    "anova_p.csv",
    "anova_p.pgm",
    "boundaries.csv",
    "overlay.pgm",
)


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    cfg: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def _setting(args_value, cfg: dict[str, str], key: str, cast, default):
    """Flag beats config beats default."""
    if args_value is not None:
        return args_value
    if key in cfg:
        return cast(cfg[key])
    return default


def _resolve_threads(args_value, cfg: dict[str, str]) -> int:
    env = os.environ.get("LADA_THREADS")
    fallback = int(env) if env else 1
    return int(_setting(args_value, cfg, "threads", int, fallback))


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _normalized(image: GrayImage) -> GrayImage:
    lo = float(image.pixels.min())
    span = float(image.pixels.max()) - lo
    if span == 0.0:
        return GrayImage(np.zeros_like(image.pixels))
    return GrayImage((image.pixels - lo) / span)


def _pair_models(global_model: str, overrides: list[str]) -> dict:
    table: dict[tuple[int, int], str] = {}
    for item in overrides:
        try:
            pair, model = item.split(":", 1)
            a_txt, b_txt = pair.split("-", 1)
            a, b = int(a_txt), int(b_txt)
        except ValueError:
            raise ValueError(f"pair model override must look like A-B:model, got {item!r}")
        if model not in ("line", "logistic", "circle"):
            raise ValueError(f"unknown boundary model {model!r}")
        table[(min(a, b), max(a, b))] = model
    table[(-1, -1)] = global_model
    return table


def _write(outdir: Path, name: str, data: bytes) -> None:
    (outdir / name).write_bytes(data)


def _fit_boundaries(
    result: SegmentationResult,
    pmap,
    models: dict,
    alpha: float,
    proximity: float,
    outdir: Path,
    base: GrayImage | None,
) -> None:
    """Fit a model per label-pair interface and write CSV + overlay.

    Raises bnd.FitError (or ValueError for degenerate point sets) after
    writing whatever rows were completed, so partial artifacts survive.
    """
    sets = bnd.boundary_pixels(result.labels, ignore_bonus=True)
    entries = []
    fitted_models = []
    bands = []
    failure: Exception | None = None
    for bset in sets:
        kind = models.get((bset.class_a, bset.class_b), models[(-1, -1)])
        try:
            if kind == "line":
                model = bnd.fit_line(bset.points)
            elif kind == "logistic":
                model = bnd.fit_logistic(bset.points)
            else:
                model = bnd.fit_circle(bset.points)
        except (bnd.FitError, ValueError) as exc:
            failure = exc
            break
        band = bnd.uncertainty_band(pmap, model, alpha=alpha, proximity=proximity)
        entries.append((bset.class_a, bset.class_b, model, band))
        fitted_models.append(model)
        bands.append(band)
    _write(outdir, "boundaries.csv", bnd.boundary_table_csv(entries))
    shape = result.labels.labels.shape
    _write(outdir, "overlay.pgm", bnd.render_overlay(shape, fitted_models, bands, base=base))
    if failure is not None:
        raise failure


def _write_report(outdir: Path, fields: list[tuple[str, object]]) -> None:
    lines = [f"{key}={value}" for key, value in fields]
    (outdir / RUN_REPORT).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_segmentation(args, mode: str) -> int:
    cfg = _load_config(args.config)
    image_path = _setting(args.image, cfg, "image", str, None)
    mask_path = _setting(args.mask, cfg, "mask", str, None)
    if image_path is None or mask_path is None:
        raise ValueError("both --image and --mask are required")
    outdir = Path(_setting(args.out, cfg, "out", str, "."))
    outdir.mkdir(parents=True, exist_ok=True)

    alpha = float(_setting(args.alpha, cfg, "alpha", float, 0.05))
    sigma_floor_rel = float(_setting(args.sigma_floor_rel, cfg, "sigma_floor_rel", float, 1e-12))
    normalize = bool(_setting(args.normalize or None, cfg, "normalize", _parse_bool, False))
    threads = _resolve_threads(args.threads, cfg)
    band_map = _setting(args.band_map, cfg, "band_map", str, "mle")
    if band_map not in ("mle", "anova"):
        raise ValueError(f"band map must be 'mle' or 'anova', got {band_map!r}")
    global_model = _setting(args.boundary_model, cfg, "boundary_model", str, "line")
    if global_model not in ("line", "logistic", "circle"):
        raise ValueError(f"unknown boundary model {global_model!r}")
    overrides = [
        f"{key.split('.', 1)[1]}:{value}"
        for key, value in cfg.items()
        if key.startswith("boundary_model.")
    ]
    overrides += list(args.pair_model or [])  # flags win over config entries
    models = _pair_models(global_model, overrides)

    mask_classes = _setting(args.mask_classes, cfg, "mask_classes", int, None)
    image = read_pgm(Path(image_path).read_bytes())
    mask = read_pgm(Path(mask_path).read_bytes(), as_mask=True, class_count=mask_classes)
    assert isinstance(image, GrayImage) and isinstance(mask, ClassMask)
    if normalize:
        image = _normalized(image)

    if mode == "qda":
        radius = None
        max_samples = None
    else:
        radius = _setting(args.radius, cfg, "radius", int, None)
        max_samples = _setting(args.max_samples, cfg, "max_samples", int, None)
        if radius is None or max_samples is None:
            raise ValueError("segment needs -d/--radius and -n/--max-samples")

    t0 = time.perf_counter()
    if mode == "qda":
        result = qda_segment(image, mask, threads=threads, alpha=alpha,
                             sigma_floor_rel=sigma_floor_rel)
    else:
        params = LadaParams(radius=radius, max_samples=max_samples, alpha=alpha,
                            sigma_floor_rel=sigma_floor_rel, mode=mode)
        if mode == "lda-local":
            result = lda_local_segment(image, mask, params, threads=threads)
        else:
            result = segment(image, mask, params, threads=threads)
    seg_seconds = time.perf_counter() - t0

    _write(outdir, "labels.pgm", write_pgm(result.labels, mode="ascii"))
    _write(outdir, "mle_p.csv", write_float_map(result.mle_p))
    _write(outdir, "mle_p.pgm", scalar_map_to_pgm(result.mle_p))
    _write(outdir, "anova_p.csv", write_float_map(result.anova_p))
    _write(outdir, "anova_p.pgm", scalar_map_to_pgm(result.anova_p))

    proximity = _setting(args.proximity, cfg, "proximity", float, result.params.radius / 2.0)
    pmap = result.mle_p if band_map == "mle" else result.anova_p

    fit_error: Exception | None = None
    t1 = time.perf_counter()
    try:
        _fit_boundaries(result, pmap, models, alpha, proximity, outdir, base=image)
    except (bnd.FitError, ValueError) as exc:
        fit_error = exc
    fit_seconds = time.perf_counter() - t1

    _write_report(outdir, [
        ("command", mode),
        ("image", image_path),
        ("mask", mask_path),
        ("width", image.width),
        ("height", image.height),
        ("classes", mask.class_count),
        ("radius", result.params.radius),
        ("max_samples", result.params.max_samples),
        ("alpha", alpha),
        ("mode", result.params.mode),
        ("sigma_floor_rel", sigma_floor_rel),
        ("normalize", normalize),
        ("threads", threads),
        ("band_map", band_map),
        ("proximity", proximity),
        ("bonus_fraction", f"{result.bonus_fraction:.9f}"),
        ("training_consistency", f"{result.training_consistency:.9f}"),
        ("segment_seconds", f"{seg_seconds:.3f}"),
        ("boundaries_seconds", f"{fit_seconds:.3f}"),
        ("artifacts", ",".join(ARTIFACTS)),
        ("status", "fit_failed" if fit_error else "ok"),
    ])
    if fit_error is not None:
        print(f"boundary fit failed: {fit_error}", file=sys.stderr)
        return 3
    return 0


def _cmd_segment(args) -> int:
    mode = args.mode or "lada"
    if mode not in ("lada", "qda", "lda-local"):
        raise ValueError(f"unknown mode {mode!r}")
    return _run_segmentation(args, mode)


def _cmd_qda(args) -> int:
    args.mode = "qda"
    return _run_segmentation(args, "qda")


def _cmd_phantom(args) -> int:
    cfg = _load_config(args.config)
    seed = int(_setting(args.seed, cfg, "seed", int, 0))
    outdir = Path(_setting(args.out, cfg, "out", str, "."))
    outdir.mkdir(parents=True, exist_ok=True)

    if args.kind == "cylinder":
        spec = cylinder_spec_from_config(cfg)
        image, mask, truth = make_cylinder_phantom(spec, seed)
        truth_lines = ["interface_row"] + [f"{v:.9g}" for v in truth]
    else:
        spec = ring_spec_from_config(cfg)
        image, mask, truth = make_ring_phantom(spec, seed)
        truth_lines = ["center_row,center_col,radius"] + [
            f"{r:.9g},{c:.9g},{rad:.9g}" for r, c, rad in truth
        ]

    quantized = np.clip(np.rint(image.pixels), 0, 65535).astype(np.int64)
    maxval = 255 if quantized.max() <= 255 else 65535
    _write(outdir, "image.pgm", write_pgm(quantized, mode="binary", maxval=maxval))
    _write(outdir, "mask.pgm", write_pgm(mask, mode="ascii", maxval=max(255, mask.class_count)))
    _write(outdir, "truth.csv", ("\n".join(truth_lines) + "\n").encode("ascii"))
    print(f"phantom {args.kind}: {image.width}x{image.height}, "
          f"{mask.class_count} classes, labeled fraction "
          f"{float(np.mean(mask.labels > 0)):.4f}")
    return 0


def _cmd_boundaries(args) -> int:
    cfg = _load_config(args.config)
    labels_path = _setting(args.labels, cfg, "labels", str, None)
    pmap_path = _setting(args.pmap, cfg, "pmap", str, None)
    classes = _setting(args.classes, cfg, "classes", int, None)
    if labels_path is None or pmap_path is None or classes is None:
        raise ValueError("boundaries needs --labels, --pmap and --classes")
    outdir = Path(_setting(args.out, cfg, "out", str, "."))
    outdir.mkdir(parents=True, exist_ok=True)
    alpha = float(_setting(args.alpha, cfg, "alpha", float, 0.05))
    proximity = float(_setting(args.proximity, cfg, "proximity", float, 10.0))
    global_model = _setting(args.boundary_model, cfg, "boundary_model", str, "line")
    models = _pair_models(global_model, list(args.pair_model or []))

    label_raster = read_pgm(Path(labels_path).read_bytes(), as_mask=True)
    assert isinstance(label_raster, ClassMask)
    labels = LabelMap(label_raster.labels, class_count=int(classes))
    pmap = read_float_map(Path(pmap_path).read_bytes())
    base = None
    if args.image is not None:
        base = read_pgm(Path(args.image).read_bytes())

    sets = bnd.boundary_pixels(labels, ignore_bonus=True)
    entries = []
    fitted = []
    bands = []
    failure: Exception | None = None
    for bset in sets:
        kind = models.get((bset.class_a, bset.class_b), models[(-1, -1)])
        try:
            if kind == "line":
                model = bnd.fit_line(bset.points)
            elif kind == "logistic":
                model = bnd.fit_logistic(bset.points)
            else:
                model = bnd.fit_circle(bset.points)
        except (bnd.FitError, ValueError) as exc:
            failure = exc
            break
        band = bnd.uncertainty_band(pmap, model, alpha=alpha, proximity=proximity)
        entries.append((bset.class_a, bset.class_b, model, band))
        fitted.append(model)
        bands.append(band)
    _write(outdir, "boundaries.csv", bnd.boundary_table_csv(entries))
    _write(outdir, "overlay.pgm",
           bnd.render_overlay(labels.labels.shape, fitted, bands, base=base))
    if failure is not None:
        print(f"boundary fit failed: {failure}", file=sys.stderr)
        return 3
    return 0


def _cmd_report(args) -> int:
    rundir = Path(args.dir)
    report = rundir / RUN_REPORT
    if not report.is_file():
        raise ValueError(f"no {RUN_REPORT} in {rundir}")
    sys.stdout.write(report.read_text(encoding="utf-8"))
    missing = [name for name in ARTIFACTS if not (rundir / name).is_file()]
    if missing:
        print(f"missing artifacts: {', '.join(missing)}", file=sys.stderr)
        return 2
    return 0


def _add_common_segment_flags(sub, with_dn: bool) -> None:
    sub.add_argument("--image", help="input grayscale PGM")
    sub.add_argument("--mask", help="training mask PGM (0 = unlabeled)")
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--out", help="output directory (default: .)")
    if with_dn:
        sub.add_argument("-d", "--radius", type=int, help="locality radius in pixels")
        sub.add_argument("-n", "--max-samples", dest="max_samples", type=int,
                         help="per-class cap on local training samples")
    sub.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    sub.add_argument("--sigma-floor-rel", dest="sigma_floor_rel", type=float,
                     help="relative sigma floor (default 1e-12)")
    sub.add_argument("--normalize", action="store_true", default=None,
                     help="rescale intensities to [0, 1] before segmenting")
    sub.add_argument("--threads", type=int, help="worker threads (env LADA_THREADS)")
    sub.add_argument("--boundary-model", dest="boundary_model",
                     choices=("line", "logistic", "circle"),
                     help="default model per interface (default line)")
    sub.add_argument("--pair-model", dest="pair_model", action="append",
                     help="per-pair model override, e.g. 1-2:circle (repeatable)")
    sub.add_argument("--band-map", dest="band_map", choices=("mle", "anova"),
                     help="p-value map thresholded for uncertainty bands (default mle)")
    sub.add_argument("--proximity", type=float,
                     help="band search distance from the fitted boundary (default radius/2)")
    sub.add_argument("--mask-classes", dest="mask_classes", type=int,
                     help="declared class count if above the largest mask label")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lada",
        description="Locally adaptive discriminant analysis segmentation "
                    "with p-value uncertainty maps and fitted boundaries.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    seg = subs.add_parser("segment", help="segment an image with local training windows")
    _add_common_segment_flags(seg, with_dn=True)
    seg.add_argument("--mode", choices=("lada", "qda", "lda-local"),
                     help="classifier variant (default lada)")
    seg.set_defaults(func=_cmd_segment)

    qda = subs.add_parser("qda", help="global-limit baseline segmentation")
    _add_common_segment_flags(qda, with_dn=False)
    qda.set_defaults(func=_cmd_qda)

    ph = subs.add_parser("phantom", help="generate a synthetic ground-truth phantom")
    ph.add_argument("kind", choices=("cylinder", "ring"))
    ph.add_argument("--config", required=True, help="flat key=value phantom spec")
    ph.add_argument("--seed", type=int, help="noise seed (default 0)")
    ph.add_argument("--out", help="output directory (default: .)")
    ph.set_defaults(func=_cmd_phantom)

    bd = subs.add_parser("boundaries", help="fit boundary models to an existing label map")
    bd.add_argument("--labels", help="label map PGM from a previous run")
    bd.add_argument("--classes", type=int, help="class count C (bonus label is C+1)")
    bd.add_argument("--pmap", help="p-value CSV used for the uncertainty bands")
    bd.add_argument("--image", help="optional grayscale PGM as overlay background")
    bd.add_argument("--config", help="flat key=value config file")
    bd.add_argument("--out", help="output directory (default: .)")
    bd.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    bd.add_argument("--proximity", type=float, help="band search distance (default 10)")
    bd.add_argument("--boundary-model", dest="boundary_model",
                    choices=("line", "logistic", "circle"))
    bd.add_argument("--pair-model", dest="pair_model", action="append")
    bd.set_defaults(func=_cmd_boundaries)

    rp = subs.add_parser("report", help="print a previous run's report and check artifacts")
    rp.add_argument("--dir", required=True, help="run output directory")
    rp.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except bnd.FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
