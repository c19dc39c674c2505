"""Dense stereo disparity estimation and benchmarking for aerial imagery.

Matchers: semi-global block matching with SAD, Birchfield-Tomasi or
AD-Census costs, and slanted-plane PatchMatch. Evaluation: MSE, bad-matched
pixel curves, SSIM and timing over dataset manifests.
"""

from .bench import (
    Manifest,
    ManifestEntry,
    ManifestError,
    METHODS,
    RunConfig,
    eval_single,
    evaluate_pair,
    parse_manifest,
    run_benchmark,
)
from .costs import (
    CensusImage,
    CostParams,
    ad_census_cost,
    bt_cost,
    census_transform,
    hamming,
    robust_rho,
    sad_cost,
)
from .image import (
    INVALID_DISPARITY,
    CorruptDataError,
    ImageFormatError,
    as_disparity_map,
    as_gray_image,
    load_disparity,
    load_gray_image,
    normalize_disparity,
    valid_mask,
    write_disparity,
)
from .metrics import (
    DEFAULT_BMP_THRESHOLDS,
    MetricReport,
    SsimParams,
    bmp,
    bmp_curve,
    compute_report,
    mse,
    ssim,
    time_method,
)
from .patchmatch import (
    PatchMatchConfig,
    Plane,
    PlaneMap,
    evaluate_costs,
    patchmatch_match,
    plane_cost,
    plane_disparity,
    plane_from_point_normal,
    plane_refinement,
    random_init,
    spatial_propagation,
)
from .postproc import (
    PostprocConfig,
    fill_occlusions,
    lr_consistency,
    median_filter,
    speckle_filter,
)
from .sgbm import (
    SgbmConfig,
    aggregate_all,
    aggregate_path,
    default_penalties,
    select_disparity,
    sgbm_match,
)
from .synthetic import KINDS, generate_synthetic

__version__ = "0.1.0"
