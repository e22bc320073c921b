"""Scene edits: move/add/delete primitives, camera moves, texture badges.

All edits are pure: they return a new Scene and leave the input untouched.
A texture badge pairs a color image with a removed-region mask so a renderer
can inpaint exactly the pixels a primitive move disturbed while keeping the
rest of the image fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy import ndimage

from .core import Camera, ConvexPrimitive, Halfspace, Pose, Scene, SceneError
from .io import DocumentError, doc_to_primitive, primitive_to_doc
from .raytrace import silhouette

DEFAULT_BADGE_MARGIN = 4  # px dilation at 704x512; hides aliasing seams


@dataclass(frozen=True)
class TranslatePrimitive:
    id: str
    delta: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if d.shape != (3,) or not np.all(np.isfinite(d)):
            raise SceneError("translation delta must be a finite 3-vector")
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class AddPrimitive:
    primitive: ConvexPrimitive


@dataclass(frozen=True)
class DeletePrimitive:
    id: str


@dataclass(frozen=True)
class SetCameraPose:
    pose: Pose


@dataclass(frozen=True)
class SetPrompt:
    prompt: str


@dataclass(frozen=True)
class SetSeed:
    seed: int


EditOp = Union[TranslatePrimitive, AddPrimitive, DeletePrimitive, SetCameraPose, SetPrompt, SetSeed]


def translate_primitive(p: ConvexPrimitive, delta) -> ConvexPrimitive:
    """Shift the whole convex by delta: each offset moves by dot(normal, delta)."""
    d = np.asarray(delta, dtype=float)
    hs = tuple(Halfspace(h.normal, h.offset + float(np.dot(h.normal, d))) for h in p.halfspaces)
    return ConvexPrimitive(id=p.id, halfspaces=hs, label=p.label)


def apply_edit(scene: Scene, op: EditOp) -> Scene:
    """One edit -> new immutable Scene; unknown ids and budget violations raise."""
    if isinstance(op, TranslatePrimitive):
        scene.find(op.id)
        prims = tuple(
            translate_primitive(p, op.delta) if p.id == op.id else p for p in scene.primitives
        )
        return Scene(prims, scene.camera, scene.prompt, scene.seed, scene.budget)
    if isinstance(op, AddPrimitive):
        prims = scene.primitives + (op.primitive,)
        return Scene(prims, scene.camera, scene.prompt, scene.seed, scene.budget)
    if isinstance(op, DeletePrimitive):
        scene.find(op.id)
        prims = tuple(p for p in scene.primitives if p.id != op.id)
        return Scene(prims, scene.camera, scene.prompt, scene.seed, scene.budget)
    if isinstance(op, SetCameraPose):
        cam = scene.camera
        new_cam = Camera(cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height, op.pose)
        return Scene(scene.primitives, new_cam, scene.prompt, scene.seed, scene.budget)
    if isinstance(op, SetPrompt):
        return Scene(scene.primitives, scene.camera, op.prompt, scene.seed, scene.budget)
    if isinstance(op, SetSeed):
        return Scene(scene.primitives, scene.camera, scene.prompt, op.seed, scene.budget)
    raise SceneError(f"unknown edit operation {type(op).__name__}")


# --- texture badges ---------------------------------------------------------


@dataclass(frozen=True)
class TextureBadge:
    """Color hint image plus removed-region mask (True = to be inpainted)."""

    image: np.ndarray  # (H,W,3) uint8
    mask: np.ndarray  # (H,W) bool

    def __post_init__(self):
        img = np.asarray(self.image)
        msk = np.asarray(self.mask)
        if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
            raise SceneError(f"badge image must be (H,W,3) uint8, got {img.shape} {img.dtype}")
        if msk.shape != img.shape[:2] or msk.dtype != np.bool_:
            raise SceneError("badge mask must be a boolean raster matching the image")
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "mask", msk)

    def blacked_image(self) -> np.ndarray:
        """The exported hint: image with masked pixels set to pure black."""
        out = self.image.copy()
        out[self.mask] = 0
        return out


def _check_image_matches(scene: Scene, image: np.ndarray) -> None:
    h, w = image.shape[:2]
    if (scene.camera.width, scene.camera.height) != (w, h):
        raise SceneError(
            f"image raster {w}x{h} does not match camera raster "
            f"{scene.camera.width}x{scene.camera.height}"
        )


def dilate_mask(mask: np.ndarray, margin: int) -> np.ndarray:
    """Chebyshev dilation by `margin` pixels (3x3 square, `margin` passes)."""
    if margin <= 0:
        return mask
    return ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool), iterations=margin)


def move_badge(
    scene_before: Scene,
    scene_after: Scene,
    moved_ids: Iterable[str],
    image: np.ndarray,
    margin: int = DEFAULT_BADGE_MARGIN,
) -> TextureBadge:
    """Badge masking a primitive move: union of the source and target
    silhouettes of the moved primitives, dilated by `margin` pixels.

    An id present in only one scene contributes that side's silhouette alone
    (covers add/delete); an id in neither scene is an error.
    """
    image = np.asarray(image)
    _check_image_matches(scene_before, image)
    _check_image_matches(scene_after, image)
    moved = set(moved_ids)
    before_ids = moved & set(scene_before.ids)
    after_ids = moved & set(scene_after.ids)
    missing = moved - before_ids - after_ids
    if missing:
        raise SceneError(f"id(s) {sorted(missing)} present in neither scene")
    mask = np.zeros(image.shape[:2], dtype=bool)
    if before_ids:
        mask |= silhouette(scene_before, before_ids)
    if after_ids:
        mask |= silhouette(scene_after, after_ids)
    return TextureBadge(image=image, mask=dilate_mask(mask, margin))


def random_badge(scene: Scene, image: np.ndarray, fraction: float, rng_seed: int) -> TextureBadge:
    """Badge removing a seeded random subset of primitives (training-style pairs)."""
    if not 0.0 <= fraction <= 1.0:
        raise SceneError(f"fraction must be in [0, 1], got {fraction!r}")
    image = np.asarray(image)
    _check_image_matches(scene, image)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    draws = rng.random(len(scene.primitives))
    selected = {p.id for p, r in zip(scene.primitives, draws) if r < fraction}
    mask = silhouette(scene, selected) if selected else np.zeros(image.shape[:2], dtype=bool)
    return TextureBadge(image=image, mask=mask)


# --- camera orbit -------------------------------------------------------------

_WORLD_UP = np.array([0.0, -1.0, 0.0])  # y points down in this convention


def _axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    a = axis / np.linalg.norm(axis)
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = a
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1 - c) * (k @ k)


def orbit_camera(scene: Scene, pivot, yaw: float, pitch: float, dolly: float) -> Scene:
    """Rotate the camera about the pivot (yaw about world up, then pitch about
    the camera's right axis) and move it `dolly` meters toward the pivot.

    Rotations preserve the camera-pivot distance, so the distance changes by
    exactly the dolly amount. Primitives are untouched.
    """
    pivot = np.asarray(pivot, dtype=float)
    cam = scene.camera
    r = cam.pose.rotation
    c = cam.pose.translation
    if yaw == 0.0 and pitch == 0.0:
        new_r, new_c = r.copy(), c.copy()
    else:
        r_orbit = _axis_angle(_WORLD_UP, yaw)
        right = (r_orbit @ r)[:, 0]
        r_orbit = _axis_angle(right, pitch) @ r_orbit
        new_r = r_orbit @ r
        new_c = pivot + r_orbit @ (c - pivot)
        # scrub accumulated rounding so Pose's orthonormality gate stays happy
        u, _, vt = np.linalg.svd(new_r)
        new_r = u @ vt
    to_pivot = pivot - new_c
    dist = np.linalg.norm(to_pivot)
    if dolly != 0.0 and dist > 0:
        new_c = new_c + dolly * (to_pivot / dist)
    return apply_edit(scene, SetCameraPose(Pose(new_r, new_c)))


# --- edit scripts and wire encoding -----------------------------------------------


def op_to_doc(op: EditOp) -> dict:
    if isinstance(op, TranslatePrimitive):
        return {"op": "translate", "id": op.id, "delta": [float(x) for x in op.delta]}
    if isinstance(op, AddPrimitive):
        return {"op": "add", "primitive": primitive_to_doc(op.primitive)}
    if isinstance(op, DeletePrimitive):
        return {"op": "delete", "id": op.id}
    if isinstance(op, SetCameraPose):
        return {
            "op": "set_camera_pose",
            "rotation": [[float(x) for x in row] for row in op.pose.rotation],
            "translation": [float(x) for x in op.pose.translation],
        }
    if isinstance(op, SetPrompt):
        return {"op": "set_prompt", "prompt": op.prompt}
    if isinstance(op, SetSeed):
        return {"op": "set_seed", "seed": op.seed}
    raise SceneError(f"unknown edit operation {type(op).__name__}")


def op_from_doc(doc: dict) -> EditOp:
    if not isinstance(doc, dict) or "op" not in doc:
        raise DocumentError("edit op must be an object with an 'op' field")
    kind = doc["op"]
    try:
        if kind == "translate":
            return TranslatePrimitive(id=doc["id"], delta=np.array(doc["delta"], dtype=float))
        if kind == "add":
            return AddPrimitive(primitive=doc_to_primitive(doc["primitive"], "op.primitive"))
        if kind == "delete":
            return DeletePrimitive(id=doc["id"])
        if kind == "set_camera_pose":
            return SetCameraPose(
                pose=Pose(np.array(doc["rotation"], dtype=float), np.array(doc["translation"], dtype=float))
            )
        if kind == "set_prompt":
            return SetPrompt(prompt=doc["prompt"])
        if kind == "set_seed":
            return SetSeed(seed=int(doc["seed"]))
    except KeyError as e:
        raise DocumentError(f"edit op {kind!r}: missing field {e}") from e
    raise DocumentError(f"unknown edit op kind {kind!r}")


def apply_script(scene: Scene, text: str) -> Scene:
    """Replay a line-oriented edit script (see docs/formats.md).

    One operation per line; '#' lines and blanks are skipped. The `orbit`
    line is sugar that lowers to a set-camera-pose on the current camera.
    """
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            scene = _apply_script_line(scene, line)
        except (SceneError, DocumentError, ValueError) as e:
            raise SceneError(f"edit script line {lineno}: {e}") from e
    return scene


def _apply_script_line(scene: Scene, line: str) -> Scene:
    cmd, _, rest = line.partition(" ")
    if cmd == "translate":
        pid, dx, dy, dz = rest.split()
        return apply_edit(scene, TranslatePrimitive(pid, np.array([float(dx), float(dy), float(dz)])))
    if cmd == "add":
        return apply_edit(scene, AddPrimitive(doc_to_primitive(json.loads(rest), "add")))
    if cmd == "delete":
        return apply_edit(scene, DeletePrimitive(rest.strip()))
    if cmd == "set-camera-pose":
        vals = [float(x) for x in rest.split()]
        if len(vals) != 12:
            raise SceneError("set-camera-pose expects 9 rotation + 3 translation numbers")
        rot = np.array(vals[:9]).reshape(3, 3)
        return apply_edit(scene, SetCameraPose(Pose(rot, np.array(vals[9:]))))
    if cmd == "set-prompt":
        return apply_edit(scene, SetPrompt(rest))
    if cmd == "set-seed":
        return apply_edit(scene, SetSeed(int(rest.strip())))
    if cmd == "orbit":
        px, py, pz, yaw, pitch, dolly = (float(x) for x in rest.split())
        return orbit_camera(scene, (px, py, pz), yaw, pitch, dolly)
    raise SceneError(f"unknown script command {cmd!r}")
