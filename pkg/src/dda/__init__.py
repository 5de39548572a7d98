"""Content-adaptive demoireing toolkit.

Scores image patches with a closed-form moire complexity prior, routes
each patch to a width-sliced subnet of a weight-shared convolutional
supernet, and accounts for the compute saved against the full-width
baseline.
"""

from .image import (
    CorruptPngError,
    PatchGrid,
    PngError,
    UnsupportedPngError,
    as_image,
    concat,
    extract,
    load_png,
    save_png,
    split,
    srgb_to_lab,
    to_luminance,
)
from .metrics import MetricResult, ciede2000, compare, delta_e_image, psnr, ssim
from .pipeline import FlopsReport, GroupFlops, demoire_dda, demoire_full, evaluate
from .prior import (
    MoireScore,
    PriorConfig,
    colorfulness,
    gaussian_blur,
    gaussian_kernel_1d,
    highpass,
    moire_score,
    score_grid,
)
from .router import (
    GroupAssignment,
    Thresholds,
    assign_groups,
    assignment_from_thresholds,
    classify_by_threshold,
    dataset_thresholds,
    validate_widths,
)
from .supernet import (
    AdamState,
    SubnetView,
    SupernetSpec,
    SupernetWeights,
    TruncatedWeightsError,
    WeightsFormatError,
    WeightsIOError,
    WeightsVersionError,
    backward,
    conv_flops,
    flops,
    forward,
    hidden_channels,
    init_weights,
    load_weights,
    loss,
    save_weights,
    slice_weights,
    train_step,
    train_supernet,
)
from .synthgen import (
    MoireParams,
    gen_clean,
    gen_dataset,
    gen_pair,
    load_manifest,
    overlay_moire,
    params_from_dict,
    params_to_dict,
    sample_params,
)

__version__ = "0.1.0"
