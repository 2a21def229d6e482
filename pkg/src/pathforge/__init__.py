"""Robust path smoothing, arrest detection and arena-boundary estimation."""

__version__ = "0.1.0"

from .arena import (
    BoundaryEstimate,
    CenterEstimate,
    CoverageWarning,
    SectorQuantiles,
    distance_from_wall,
    estimate_boundary,
    estimate_center,
    sector_quantiles,
    smooth_boundary,
    to_polar,
)
from .config import SessionConfig, load_config
from .lowess import (
    AxisFits,
    KinematicSeries,
    LocalFit,
    RawPath,
    detect_outliers,
    fit_window,
    kinematics,
    smooth_axis,
    tricube_weight,
)
from .pipeline import (
    EndpointSummary,
    Segment,
    SegmentList,
    classify_segments,
    combine,
    endpoints,
)
from .radius_mse import (
    RadialModel,
    advantage_threshold,
    estimate_radius,
    monte_carlo_mse,
    mse_closed_form,
)
from .rrm import (
    ArrestMask,
    DEFAULT_SCHEDULE,
    detect_arrests,
    repeated_running_median,
    running_median,
)
from .simulate import (
    AnalysisParams,
    SimParams,
    SimulatedPath,
    corrupt,
    evaluate,
    generate_profile_pool,
    simulate_path,
    synthesize_path,
)
