"""Convex-primitive scene toolkit.

Fit editable convex primitives to depth maps, ray-trace them to conditioning
rasters, edit primitives and cameras, evaluate depth fidelity, and exchange
render requests with a statistical renderer over a fixed wire protocol.
"""

from .core import (
    Camera,
    ConvexPrimitive,
    DepthMap,
    GeometryError,
    Halfspace,
    IdBuffer,
    Pose,
    Scene,
    SceneError,
    contains,
    contains_points,
    default_camera,
    make_parallelepiped,
)
from .decompose import (
    FitConfig,
    FitReport,
    LabeledSample,
    decompose,
    fit_loss,
    polish,
    sample_labels,
    seed_primitives,
    smooth_occupancy,
    union_occupancy,
)
from .edit import (
    AddPrimitive,
    DeletePrimitive,
    EditOp,
    SetCameraPose,
    SetPrompt,
    SetSeed,
    TextureBadge,
    TranslatePrimitive,
    apply_edit,
    apply_script,
    move_badge,
    orbit_camera,
    random_badge,
)
from .io import dumps_scene, load_scene, loads_scene, save_scene
from .metrics import (
    ConfusionMatrix,
    DepthErrorReport,
    confusion_and_bacc,
    depth_errors,
    evaluate_batch,
    fit_scale_shift,
)
from .raytrace import Ray, intersect_convex, pixel_ray, render_depth, silhouette, unproject
from .bridge import RenderRequest, RenderResult, render_remote, stub_render

__version__ = "0.1.0"
