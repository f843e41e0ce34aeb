"""Offset-corrected RGB: estimate and remove the additive color cast that an
ambient second light source adds to shadowed pixels, so that downstream
chromaticity-based tools see shadow-invariant color."""

from .colorspace import (
    ChannelSet,
    convert,
    hsv_to_rgb,
    to_cieluv,
    to_hsv,
    to_rg_chromaticity,
)
from .demos import (
    LabelImage,
    SegMetrics,
    canny_edges,
    kmeans_segment,
    region_color_stddev,
    segmentation_metrics,
)
from .errors import (
    DegenerateBundleError,
    DegenerateKError,
    DimensionMismatchError,
    EmptyRegionError,
    FlatRegionError,
    FormatError,
    GridMismatchError,
    InvalidEpsilonError,
    OrgbError,
    ParameterError,
    SceneError,
)
from .image import (
    ChannelImage,
    LinearImage,
    RegionMask,
    histogram_equalize,
    invert,
    load_image,
    make_mask_rect,
    save_image,
    srgb_decode,
    srgb_encode,
)
from .offset import (
    ChannelFit,
    ColorLine,
    ConvergenceReport,
    Epsilon,
    correct,
    estimate_convergence_point,
    estimate_epsilon,
    fit_channel_line,
    fit_color_line,
    line_origin_distance,
    subtract_ambient,
    uncorrect,
)
from .simulate import (
    CheckerConfig,
    OcclusionPattern,
    RenderedScene,
    ScenePatch,
    SceneSpec,
    SensorSet,
    SpectralGrid,
    Spectrum,
    incident_light,
    load_scene,
    make_colorchecker_scene,
    reflect,
    render,
    scene_from_json,
    scene_to_json,
    sensor_response,
)

__version__ = "0.1.0"
