"""Locally adaptive discriminant analysis for supervised image segmentation.

Per-pixel Gaussian classification restricted to nearby training samples,
with two per-pixel significance maps (winning-class tail probability and
largest pairwise class-equality p-value), fitted geometric boundaries and
significance-thresholded uncertainty bands.
"""

from .boundary import (
    BoundarySet,
    CircleModel,
    FitError,
    LineModel,
    LogisticModel,
    UncertaintyBand,
    boundary_pixels,
    fit_circle,
    fit_line,
    fit_logistic,
    render_overlay,
    uncertainty_band,
)
from .engine import (
    LadaParams,
    SegmentationResult,
    classify_pixel,
    lda_local_segment,
    local_class_stats,
    qda_segment,
    segment,
)
from .neighborhood import LocalTrainingSet, OffsetTable, disk_offsets, select_local_training
from .phantom import (
    CylinderPhantomSpec,
    RingPhantomSpec,
    make_cylinder_phantom,
    make_ring_phantom,
)
from .raster import (
    ClassMask,
    GrayImage,
    LabelMap,
    PgmFormatError,
    PgmLengthError,
    PgmRangeError,
    ScalarMap,
    read_float_map,
    read_pgm,
    scalar_map_to_pgm,
    write_float_map,
    write_pgm,
)
from .stats import (
    GaussianStats,
    anova_pair_pvalue,
    f_cdf,
    mle_pvalue,
    normal_cdf,
    regularized_incomplete_beta,
)

__version__ = "0.1.0"

__all__ = [
    "BoundarySet",
    "CircleModel",
    "ClassMask",
    "CylinderPhantomSpec",
    "FitError",
    "GaussianStats",
    "GrayImage",
    "LabelMap",
    "LadaParams",
    "LineModel",
    "LocalTrainingSet",
    "LogisticModel",
    "OffsetTable",
    "PgmFormatError",
    "PgmLengthError",
    "PgmRangeError",
    "RingPhantomSpec",
    "ScalarMap",
    "SegmentationResult",
    "UncertaintyBand",
    "anova_pair_pvalue",
    "boundary_pixels",
    "classify_pixel",
    "disk_offsets",
    "f_cdf",
    "fit_circle",
    "fit_line",
    "fit_logistic",
    "lda_local_segment",
    "local_class_stats",
    "make_cylinder_phantom",
    "make_ring_phantom",
    "mle_pvalue",
    "normal_cdf",
    "qda_segment",
    "read_float_map",
    "read_pgm",
    "regularized_incomplete_beta",
    "render_overlay",
    "scalar_map_to_pgm",
    "segment",
    "select_local_training",
    "uncertainty_band",
    "write_float_map",
    "write_pgm",
]
