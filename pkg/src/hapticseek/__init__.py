"""Camera-aiming guidance for non-visual object search.

Spoken coarse directions plus tiered vibration cadences steer a user toward
centering a detected object; heavier perception calls ride a FIFO offload
service. Ships with a deterministic pan/tilt world simulator, a benchmark
harness, and questionnaire statistics used to evaluate the loop end to end.
"""
from . import bench, guidance, labels, offload, surveystats, worldsim
from .guidance import (
    APPROACHING_PATTERN,
    LOCKED_PATTERN,
    NUM_CLASSES,
    PERIPHERAL_PATTERN,
    SPEECH_TEXT,
    Detection,
    Direction,
    FrameGeometry,
    GuidanceConfig,
    GuidanceState,
    Phase,
    PulsePattern,
    Tier,
    directional_command,
    guidance_tick,
    haptic_tier,
    normalized_center_distance,
    select_target,
)
from .labels import class_id, class_name, resolve_class
from .offload import OffloadClient, OffloadService, Request, Response, serve
from .worldsim import CameraPose, Scene, SceneObject, detect, load_scene, step_camera

__version__ = "0.1.0"

__all__ = [
    "APPROACHING_PATTERN",
    "CameraPose",
    "Detection",
    "Direction",
    "FrameGeometry",
    "GuidanceConfig",
    "GuidanceState",
    "LOCKED_PATTERN",
    "NUM_CLASSES",
    "OffloadClient",
    "OffloadService",
    "PERIPHERAL_PATTERN",
    "Phase",
    "PulsePattern",
    "Request",
    "Response",
    "SPEECH_TEXT",
    "Scene",
    "SceneObject",
    "Tier",
    "bench",
    "class_id",
    "class_name",
    "detect",
    "directional_command",
    "guidance",
    "guidance_tick",
    "haptic_tier",
    "labels",
    "load_scene",
    "normalized_center_distance",
    "offload",
    "resolve_class",
    "select_target",
    "serve",
    "step_camera",
    "surveystats",
    "worldsim",
    "__version__",
]
