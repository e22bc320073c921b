"""Ray tracing of convex-primitive scenes to z-depth and id rasters.

Rays pass through pixel centers (half-pixel offset). Depth is the
camera-frame z coordinate of the nearest hit, not Euclidean ray length,
matching how monocular depth estimators report values. All functions are
pure and bit-deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .core import Camera, ConvexPrimitive, DepthMap, GeometryError, IdBuffer, Scene, SceneError


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray  # (3,) meters, world frame
    direction: np.ndarray  # (3,) unit vector, world frame

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        if o.shape != (3,) or d.shape != (3,):
            raise GeometryError("ray origin/direction must be 3-vectors")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise GeometryError(f"ray direction must be unit length, |d|={np.linalg.norm(d)!r}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


def _camera_dirs(camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Unit ray directions for every pixel: (P,3) world frame and (P,) camera-frame z."""
    u = (np.arange(camera.width) + 0.5 - camera.cx) / camera.fx
    v = (np.arange(camera.height) + 0.5 - camera.cy) / camera.fy
    uu, vv = np.meshgrid(u, v)
    dirs = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirz = dirs[:, 2].copy()
    return dirs @ camera.pose.rotation.T, dirz


def pixel_ray(camera: Camera, u: int, v: int) -> Ray:
    """World-frame ray through the center of pixel (u, v)."""
    if not (0 <= u < camera.width and 0 <= v < camera.height):
        raise SceneError(f"pixel ({u}, {v}) outside raster {camera.width}x{camera.height}")
    d = np.array([(u + 0.5 - camera.cx) / camera.fx, (v + 0.5 - camera.cy) / camera.fy, 1.0])
    d /= np.linalg.norm(d)
    return Ray(origin=camera.pose.translation.copy(), direction=camera.pose.rotation @ d)


def intersect_convex(ray: Ray, p: ConvexPrimitive) -> Optional[tuple[float, float]]:
    """Parametric interval of the ray inside the convex, clipped to t >= 0.

    Returns None on a miss or when the overlap lies entirely behind the
    origin; an origin inside the convex yields t_near == 0.
    """
    normals, offsets = p.arrays()
    t0, t1 = -np.inf, np.inf
    denom = normals @ ray.direction
    num = offsets - normals @ ray.origin
    for dn, nm in zip(denom, num):
        if dn == 0.0:
            if nm < 0.0:
                return None
            continue
        t = nm / dn
        if dn > 0.0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
    if t0 > t1 or t1 < 0.0:
        return None
    return max(t0, 0.0), t1


def _slab_intervals(
    origin: np.ndarray, dirs: np.ndarray, p: ConvexPrimitive
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized slab clipping for rays sharing one origin: (t0, t1) per ray."""
    normals, offsets = p.arrays()
    n = dirs.shape[0]
    t0 = np.full(n, -np.inf)
    t1 = np.full(n, np.inf)
    num = offsets - normals @ origin  # (H,)
    denom = dirs @ normals.T  # (N,H)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = num[None, :] / denom
    for h in range(len(offsets)):
        dn = denom[:, h]
        pos = dn > 0.0
        neg = dn < 0.0
        t1 = np.where(pos, np.minimum(t1, q[:, h]), t1)
        t0 = np.where(neg, np.maximum(t0, q[:, h]), t0)
        # parallel ray outside this halfspace: force a miss
        t0 = np.where((dn == 0.0) & (num[h] < 0.0), np.inf, t0)
    return t0, t1


def render_depth(scene: Scene) -> tuple[DepthMap, IdBuffer]:
    """Z-depth of the nearest primitive per pixel plus its list index.

    Ties between equal hit distances resolve to the lexicographically
    smallest primitive id, which makes the output invariant under
    reordering of the primitive list.
    """
    cam = scene.camera
    dirs, dirz = _camera_dirs(cam)
    origin = np.asarray(cam.pose.translation, dtype=float)
    best_t = np.full(dirs.shape[0], np.inf)
    best_idx = np.full(dirs.shape[0], -1, dtype=np.int32)
    order = sorted(range(len(scene.primitives)), key=lambda i: scene.primitives[i].id)
    for idx in order:
        t0, t1 = _slab_intervals(origin, dirs, scene.primitives[idx])
        t_near = np.maximum(t0, 0.0)
        hit = (t0 <= t1) & (t1 >= 0.0)
        win = hit & (t_near < best_t)
        best_t = np.where(win, t_near, best_t)
        best_idx = np.where(win, np.int32(idx), best_idx)
    depth = np.where(np.isfinite(best_t), best_t * dirz, np.inf)
    h, w = cam.height, cam.width
    return (
        DepthMap(width=w, height=h, values=depth.reshape(h, w)),
        IdBuffer(width=w, height=h, ids=best_idx.reshape(h, w)),
    )


def silhouette(scene: Scene, ids: Iterable[str]) -> np.ndarray:
    """Pixels whose rays hit any of the selected primitives, ignoring occlusion."""
    ids = set(ids)
    known = set(scene.ids)
    unknown = ids - known
    if unknown:
        raise SceneError(f"unknown primitive id(s) {sorted(unknown)}")
    cam = scene.camera
    dirs, _ = _camera_dirs(cam)
    origin = np.asarray(cam.pose.translation, dtype=float)
    mask = np.zeros(dirs.shape[0], dtype=bool)
    for p in scene.primitives:
        if p.id not in ids:
            continue
        t0, t1 = _slab_intervals(origin, dirs, p)
        mask |= (t0 <= t1) & (t1 >= 0.0)
    return mask.reshape(cam.height, cam.width)


def unproject(depth: DepthMap, camera: Camera) -> np.ndarray:
    """World-frame points for the finite pixels, in row-major pixel order."""
    if (depth.width, depth.height) != (camera.width, camera.height):
        raise SceneError(
            f"depth raster {depth.width}x{depth.height} does not match "
            f"camera raster {camera.width}x{camera.height}"
        )
    dirs, dirz = _camera_dirs(camera)
    flat = depth.values.ravel()
    finite = np.isfinite(flat)
    t = flat[finite] / dirz[finite]
    return camera.pose.translation + t[:, None] * dirs[finite]


def scale_camera(camera: Camera, factor: int) -> Camera:
    """Camera for an integer-downscaled raster covering the same field of view."""
    if factor < 1:
        raise SceneError("scale factor must be >= 1")
    return Camera(
        fx=camera.fx / factor,
        fy=camera.fy / factor,
        cx=camera.cx / factor,
        cy=camera.cy / factor,
        width=max(1, camera.width // factor),
        height=max(1, camera.height // factor),
        pose=camera.pose,
    )
