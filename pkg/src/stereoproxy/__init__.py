"""stereoproxy: dense disparity proxy labels from rectified stereo pairs.

Classical matching produces sparse reliable seeds, an image-guided
completer densifies them, and a variance-gated consensus over repeated
randomized completions keeps only trustworthy labels. A metrics suite
evaluates proxies and predictions against ground truth.
"""

from .completion import CompleterConfig, ExternalCompleterError, complete
from .consensus import (
    AugDraw,
    ConsensusAccumulator,
    ConsensusConfig,
    DistillationError,
    augment,
    distill,
)
from .matching import (
    CensusField,
    CostVolume,
    build_cost_volume,
    build_cost_volume_sad,
    census_transform,
    confidence_pkr,
    right_disparity,
    wta,
)
from .metrics import (
    DepthMetrics,
    EvalReport,
    UndefinedMetricError,
    bad2,
    d1,
    density_overlap,
    depth_metrics,
    epe,
    noc_mask_from_gt,
    valid_correct,
)
from .raster_io import (
    Calibration,
    DisparityMap,
    FormatError,
    colorize,
    load_disparity_png,
    load_image,
    load_pfm,
    save_disparity_png,
    save_image,
    save_pfm,
    to_grayscale,
)
from .seeds import (
    FilterConfig,
    SeedSet,
    filter_confidence,
    filter_lrc,
    load_seeds,
    sample_seeds,
    save_seeds,
)
from .sgm import SgmParams, aggregate, aggregate_path, hole_fill, lrc_filter

__version__ = "0.1.0"
