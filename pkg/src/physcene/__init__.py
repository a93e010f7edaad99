"""Language-based rigid-body scenes: parse, simulate, render, mine, score, search."""

from .errors import (
    CompositionError,
    ConfigError,
    ConfigSyntaxError,
    DivergenceError,
    DomainError,
    LayoutError,
    MismatchError,
    SceneError,
    SchemaError,
    ShapeError,
    TagError,
)
from .scene import (
    CameraSpec,
    GravitySpec,
    ObjectSpec,
    ParamLayout,
    ParamVector,
    SceneConfig,
    Violation,
    discretize_x,
    discretize_y,
    discretize_z,
    extract_answer,
    flatten_parameters,
    parse_config,
    serialize_config,
    unflatten_parameters,
    validate,
)
from .simulate import ContactEvent, RigidState, SimTrace, detect_initial_overlap, initial_contact_pairs, simulate
from .render import (
    CameraModel,
    FlowMaps,
    FrameArtifacts,
    MaskMaps,
    build_camera,
    pixel_rays,
    project,
    render_flow,
    render_masks,
    sampled_frame_indices,
    sampled_pair_indices,
    visibility_series,
)
from .events import MotionDescription, MotionEvent, mine_events, render_description, stop_frame
from .metrics import (
    EvalReport,
    ReferenceArtifacts,
    composition_accuracy,
    evaluate,
    flow_epe,
    mask_iou,
    param_mae,
    per_object_iou,
    score_renders,
    worst_case_report,
)
from .search import (
    BestOfKResult,
    CandidateScore,
    CmaEs,
    GenerationStats,
    best_of_k,
    cmaes_search,
    fitness,
    pro_loss,
    soft_preference_weights,
)
from .datagen import (
    FilterResult,
    SamplingRanges,
    default_ranges,
    filter_scene,
    generate_dataset,
    sample_config,
    validate_manifest,
)
from . import formats

__version__ = "0.1.0"

__all__ = [
    "BestOfKResult",
    "CameraModel",
    "CameraSpec",
    "CandidateScore",
    "CmaEs",
    "CompositionError",
    "ConfigError",
    "ConfigSyntaxError",
    "ContactEvent",
    "DivergenceError",
    "DomainError",
    "EvalReport",
    "FilterResult",
    "FlowMaps",
    "FrameArtifacts",
    "GenerationStats",
    "GravitySpec",
    "LayoutError",
    "MaskMaps",
    "MismatchError",
    "MotionDescription",
    "MotionEvent",
    "ObjectSpec",
    "ParamLayout",
    "ParamVector",
    "ReferenceArtifacts",
    "RigidState",
    "SamplingRanges",
    "SceneConfig",
    "SceneError",
    "SchemaError",
    "ShapeError",
    "SimTrace",
    "TagError",
    "Violation",
    "best_of_k",
    "build_camera",
    "cmaes_search",
    "composition_accuracy",
    "default_ranges",
    "detect_initial_overlap",
    "initial_contact_pairs",
    "discretize_x",
    "discretize_y",
    "discretize_z",
    "evaluate",
    "extract_answer",
    "filter_scene",
    "fitness",
    "flatten_parameters",
    "flow_epe",
    "formats",
    "generate_dataset",
    "mask_iou",
    "mine_events",
    "param_mae",
    "parse_config",
    "per_object_iou",
    "pixel_rays",
    "pro_loss",
    "project",
    "render_description",
    "render_flow",
    "render_masks",
    "sample_config",
    "sampled_frame_indices",
    "sampled_pair_indices",
    "serialize_config",
    "simulate",
    "soft_preference_weights",
    "stop_frame",
    "unflatten_parameters",
    "validate",
    "validate_manifest",
    "visibility_series",
    "score_renders",
    "worst_case_report",
]
