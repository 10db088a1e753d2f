"""Deterministic peg-in-hole alignment simulator and control library."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    BehindCameraError,
    CameraIntrinsics,
    CameraModel,
    DEFAULT_INTRINSICS,
    InvalidDepthError,
    PixelPoint,
    RigidTransform,
    backproject_at_depth,
    optical_depth,
    perturb_extrinsics,
    project,
)
from .scene import (  # noqa: F401
    CameraSamplingRanges,
    HoleScenario,
    StartSamplingRanges,
    builtin_scenarios,
    default_start_ranges,
    sample_camera_pose,
    sample_peg_start,
    scenario_by_name,
)
from .heatmap import (  # noqa: F401
    AugmentParams,
    Heatmap,
    HeatmapParams,
    argmax_point,
    augment,
    composite_overlay,
    gaussian_heatmap,
    heatmap_mse,
)
from .estimator import (  # noqa: F401
    ESTIMATOR_PRESETS,
    EstimatePair,
    NoiseModel,
    OracleEstimator,
    PointEstimator,
    accuracy_curve,
    oracle_estimate,
)
from .world import (  # noqa: F401
    MotionModel,
    PerturbBounds,
    TrialResult,
    WorldState,
    attempt_insertion,
    contact_query,
    make_world,
    step_toward,
)
from .servo import (  # noqa: F401
    ServoConfig,
    ServoOutcome,
    ServoState,
    ViewConstraint,
    compute_view_constraint,
    default_servo_config,
    run_servo,
    servo_step,
    solve_error,
)
from .baselines import (  # noqa: F401
    RandomSearchParams,
    SpiralParams,
    default_spiral_params,
    optimal_align,
    random_search,
    spiral_search,
)
from .bench import (  # noqa: F401
    BenchConfig,
    BenchReport,
    export_report,
    import_report,
    run_bench,
    significance_flags,
)
