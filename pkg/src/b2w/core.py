"""Domain types: halfspaces, convex primitives, cameras, scenes, depth rasters.

All types are immutable after construction; edits produce new values.
World frame is right-handed; the camera looks down +z with x right and
y down (image rows). Units are meters unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

DEFAULT_BUDGET = 24

# NYUv2 Kinect calibration, used when a dataset provides no intrinsics.
NYU_FOCAL = 518.86


class GeometryError(ValueError):
    """Invalid geometric construction (singular basis, unbounded set, ...)."""


class SceneError(ValueError):
    """Invalid scene-level state (duplicate ids, budget exceeded, ...)."""


def _as_vec3(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape != (3,):
        raise GeometryError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GeometryError(f"{name} must be finite")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Halfspace:
    """One linear constraint: x is inside iff dot(normal, x) - offset <= 0."""

    normal: np.ndarray  # unit 3-vector
    offset: float  # meters

    def __post_init__(self):
        n = _as_vec3(self.normal, "normal")
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise GeometryError(f"halfspace normal must be unit length, |n|={np.linalg.norm(n)!r}")
        if not np.isfinite(self.offset):
            raise GeometryError("halfspace offset must be finite")
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, x) -> float:
        return float(np.dot(self.normal, np.asarray(x, dtype=float)) - self.offset)


def _chebyshev_radius(normals: np.ndarray, offsets: np.ndarray) -> Optional[float]:
    """Largest inscribed-ball radius, or None if the inradius is unbounded."""
    h = len(offsets)
    c = np.zeros(4)
    c[3] = -1.0  # maximize r
    a_ub = np.hstack([normals, np.ones((h, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=offsets, bounds=[(None, None)] * 4, method="highs")
    if res.status == 3:
        return None
    if res.status != 0:
        raise GeometryError(f"feasibility LP failed: {res.message}")
    return float(-res.fun)


def _axis_bounds(normals: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding intervals of {x : N x <= d} via 6 LPs.

    Raises GeometryError if the set is unbounded along any axis.
    """
    lo = np.zeros(3)
    hi = np.zeros(3)
    bounds = [(None, None)] * 3
    for axis in range(3):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(3)
            c[axis] = sign
            res = linprog(c, A_ub=normals, b_ub=offsets, bounds=bounds, method="highs")
            if res.status == 3:
                raise GeometryError(f"halfspace set unbounded along axis {axis}")
            if res.status != 0:
                raise GeometryError(f"bound LP failed: {res.message}")
            out[axis] = sign * res.fun
    return lo, hi


@dataclass(frozen=True)
class ConvexPrimitive:
    """Bounded intersection of halfspaces; parallelepipeds are the 6-face case.

    Construction verifies a non-empty interior (Chebyshev inradius > 0) and
    boundedness (axis-extent LPs); the resulting axis-aligned bounds are kept
    on the instance as `aabb`.
    """

    id: str
    halfspaces: tuple[Halfspace, ...]
    label: Optional[str] = None
    aabb: tuple[np.ndarray, np.ndarray] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise GeometryError("primitive id must be a non-empty string")
        hs = tuple(self.halfspaces)
        if len(hs) < 4:
            raise GeometryError(f"need at least 4 halfspaces to bound a volume, got {len(hs)}")
        object.__setattr__(self, "halfspaces", hs)
        n, d = self.arrays()
        r = _chebyshev_radius(n, d)
        if r is None:
            raise GeometryError(f"primitive {self.id!r}: halfspace set is unbounded")
        if r <= 1e-9:
            raise GeometryError(f"primitive {self.id!r}: empty or degenerate interior (inradius {r:.3g})")
        lo, hi = _axis_bounds(n, d)
        object.__setattr__(self, "aabb", (_frozen(lo), _frozen(hi)))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (H,3) normals and (H,) offsets."""
        n = np.stack([h.normal for h in self.halfspaces])
        d = np.array([h.offset for h in self.halfspaces])
        return n, d

    def volume_estimate(self) -> float:
        """Product of the axis-aligned bounding-interval lengths."""
        lo, hi = self.aabb
        return float(np.prod(hi - lo))


def make_parallelepiped(center, basis, id: str = "p0", label: Optional[str] = None) -> ConvexPrimitive:
    """Build the 6-halfspace primitive {x : |basis^-1 (x - center)|_inf <= 1}.

    `basis` columns are the half-axis vectors. Faces come in antipodal pairs
    ordered (+x, -x, +y, -y, +z, -z) of the basis axes.
    """
    c = _as_vec3(center, "center")
    b = np.asarray(basis, dtype=float)
    if b.shape != (3, 3):
        raise GeometryError(f"basis must be 3x3, got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise GeometryError("basis must be finite")
    if np.linalg.cond(b) >= 1e8:
        raise GeometryError(f"singular basis (condition number {np.linalg.cond(b):.3g} >= 1e8)")
    rows = np.linalg.inv(b)  # row i: gradient of the i-th box coordinate
    halfspaces = []
    for i in range(3):
        r = rows[i]
        scale = np.linalg.norm(r)
        n = r / scale
        rc = float(np.dot(r, c))
        halfspaces.append(Halfspace(n, (1.0 + rc) / scale))
        halfspaces.append(Halfspace(-n, (1.0 - rc) / scale))
    return ConvexPrimitive(id=id, halfspaces=tuple(halfspaces), label=label)


def contains(p: ConvexPrimitive, x) -> bool:
    """True iff every halfspace of `p` is satisfied at point `x`."""
    n, d = p.arrays()
    return bool(np.all(n @ np.asarray(x, dtype=float) - d <= 0.0))


def contains_points(p: ConvexPrimitive, pts: np.ndarray) -> np.ndarray:
    """Vectorized membership test for an (N,3) array of points."""
    n, d = p.arrays()
    return np.all(pts @ n.T - d <= 0.0, axis=1)


@dataclass(frozen=True)
class Pose:
    """Rigid world-from-camera transform: x_world = rotation @ x_cam + translation."""

    rotation: np.ndarray  # (3,3) orthonormal, det +1
    translation: np.ndarray  # (3,) meters

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = _as_vec3(self.translation, "translation")
        if r.shape != (3, 3) or not np.all(np.isfinite(r)):
            raise GeometryError("rotation must be a finite 3x3 matrix")
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise GeometryError("rotation must be orthonormal with determinant +1 (tolerance 1e-9)")
        object.__setattr__(self, "rotation", _frozen(r))
        object.__setattr__(self, "translation", _frozen(t))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: intrinsics in pixels plus a rigid world-from-camera pose."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("raster size must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point must lie inside the raster")

    def world_to_camera(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts - self.pose.translation) @ self.pose.rotation

    def camera_to_world(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts @ self.pose.rotation.T + self.pose.translation

    def project(self, pts_world: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Continuous pixel coordinates (u, v) and camera-frame depth z.

        Pixel (i, j) has center at continuous coordinate (i + 0.5, j + 0.5).
        Points with z <= 0 get NaN coordinates.
        """
        cam = self.world_to_camera(pts_world)
        z = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(z > 0, self.fx * cam[:, 0] / z + self.cx, np.nan)
            v = np.where(z > 0, self.fy * cam[:, 1] / z + self.cy, np.nan)
        return u, v, z


def default_camera(width: int = 704, height: int = 512, pose: Optional[Pose] = None) -> Camera:
    """Camera with the standard NYUv2 Kinect focal length and centered principal point."""
    return Camera(
        fx=NYU_FOCAL,
        fy=NYU_FOCAL,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        width=width,
        height=height,
        pose=pose or Pose.identity(),
    )


@dataclass(frozen=True)
class Scene:
    """Ordered primitives plus camera, prompt and seed; the document being edited."""

    primitives: tuple[ConvexPrimitive, ...]
    camera: Camera
    prompt: str = ""
    seed: int = 0
    budget: int = field(default=DEFAULT_BUDGET, compare=False)

    def __post_init__(self):
        prims = tuple(self.primitives)
        object.__setattr__(self, "primitives", prims)
        object.__setattr__(self, "seed", int(self.seed))
        if self.seed < 0:
            raise SceneError("seed must be a non-negative integer")
        if not isinstance(self.prompt, str):
            raise SceneError("prompt must be a string")
        if self.budget < 1:
            raise SceneError("budget must be >= 1")
        if len(prims) > self.budget:
            raise SceneError(f"{len(prims)} primitives exceed budget {self.budget}")
        seen = set()
        for p in prims:
            if p.id in seen:
                raise SceneError(f"duplicate primitive id {p.id!r}")
            seen.add(p.id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.primitives)

    def find(self, pid: str) -> ConvexPrimitive:
        for p in self.primitives:
            if p.id == pid:
                return p
        raise SceneError(f"unknown primitive id {pid!r}")


@dataclass(frozen=True)
class DepthMap:
    """Row-major z-depth raster in meters; +inf marks no-hit pixels."""

    width: int
    height: int
    values: np.ndarray  # (height, width) float64

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.height, self.width):
            raise SceneError(f"depth raster shape {v.shape} != (height={self.height}, width={self.width})")
        if np.any(np.isnan(v)) or np.any(v < 0) or np.any(v == 0) or np.any(np.isneginf(v)):
            raise SceneError("depth values must be finite positive or +inf")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)


@dataclass(frozen=True)
class IdBuffer:
    """Per-pixel index of the front-most primitive in the scene's list; -1 = none."""

    width: int
    height: int
    ids: np.ndarray  # (height, width) int32

    def __post_init__(self):
        a = np.asarray(self.ids, dtype=np.int32)
        if a.shape != (self.height, self.width):
            raise SceneError(f"id raster shape {a.shape} != (height={self.height}, width={self.width})")
        if np.any(a < -1):
            raise SceneError("id raster entries must be >= -1")
        object.__setattr__(self, "ids", _frozen(a))
