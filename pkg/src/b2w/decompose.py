"""Fit a budget of convex primitives to a depth map.

The pipeline turns a depth raster into inside/outside labeled point samples
(treating everything between the visible surface and a back plane as solid),
seeds axis-aligned boxes by k-means over the inside samples, then refines all
halfspace parameters with Adam on a smooth-occupancy classification loss and
prunes convexes that stopped earning their keep.

Occupancy of one convex at x is Phi(x) = sigmoid(-sigma * Delta(x)) with
Delta(x) = (1/delta) * log sum_h exp(delta * (n_h . x - d_h)), the smooth max
of the per-face signed distances. The union over convexes is the
complementary product 1 - prod_k (1 - Phi_k).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Camera, ConvexPrimitive, DepthMap, Halfspace, Scene, SceneError, make_parallelepiped

# Fixed accumulation chunk: keeps reductions bit-stable regardless of thread count.
_CHUNK = 8192
_HOLDOUT_FRACTION = 0.1
_BACK_PLANE_MARGIN = 0.5  # meters beyond the deepest finite pixel


@dataclass(frozen=True)
class LabeledSample:
    """A world-frame point tagged 1 (inside the depth volume) or 0 (outside)."""

    position: np.ndarray
    label: int

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float)
        if p.shape != (3,):
            raise ValueError("sample position must be a 3-vector")
        if self.label not in (0, 1):
            raise ValueError(f"sample label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class FitConfig:
    budget: int = 24
    delta: float = 75.0  # smooth-max sharpness
    sigma: float = 75.0  # indicator gain
    surface_band: float = 0.05  # meters either side of the surface
    n_surface: int = 60000
    n_uniform: int = 60000
    step_size: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    iterations: int = 2000
    prune_threshold: float = 0.002
    w_overlap: float = 0.01
    w_volume: float = 1e-4

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        for f in fields(self):
            v = getattr(self, f.name)
            if not v > 0 and f.name not in ("w_overlap", "w_volume"):
                raise ValueError(f"FitConfig.{f.name} must be positive, got {v!r}")
            if v < 0:
                raise ValueError(f"FitConfig.{f.name} must be non-negative, got {v!r}")


@dataclass(frozen=True)
class FitReport:
    final_loss: float
    coverage: dict  # primitive id -> unique inside-coverage fraction
    pruned_ids: tuple
    iterations_run: int
    holdout_accuracy: float
    entry_holdout_accuracy: float = 1.0
    loss_history: tuple = ()


def load_fit_config(path) -> FitConfig:
    import json

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("fit config must be a JSON object")
    known = {f.name for f in fields(FitConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"fit config: unknown field(s) {sorted(unknown)}")
    return FitConfig(**doc)


def fit_config_to_doc(cfg: FitConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(FitConfig)}


# --- numerics ---------------------------------------------------------------


def _log_one_minus_phi(delta_vals: np.ndarray, sigma: float) -> np.ndarray:
    """log(1 - Phi) = log sigmoid(sigma * Delta), computed without overflow."""
    z = sigma * delta_vals
    # log sigmoid(z) = -softplus(-z) = min(z, 0) - log1p(exp(-|z|))
    return np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))


def _smooth_max(points: np.ndarray, normals: np.ndarray, offsets: np.ndarray, delta: float):
    """Smooth max of face distances and its softmax weights: (N,), (N,H)."""
    s = points @ normals.T - offsets  # (N,H)
    z = delta * s
    m = np.max(z, axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.sum(np.exp(z - m), axis=1))
    w = np.exp(z - lse[:, None])
    return lse / delta, w


_OPEN_LO = 5e-324
_OPEN_HI = float(np.nextafter(1.0, 0.0))


def smooth_occupancy(p: ConvexPrimitive, x, delta: float = 75.0, sigma: float = 75.0):
    """Soft membership of x in p, strictly inside (0, 1).

    Values exceed 0.5 inside the convex and decay monotonically with the
    smooth-max face distance; safe for coordinates up to 1e6 in magnitude.
    """
    if delta <= 0 or sigma <= 0:
        raise ValueError("delta and sigma must be positive")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = p.arrays()
    dist, _ = _smooth_max(pts, n, d, delta)
    phi = np.clip(-np.expm1(_log_one_minus_phi(dist, sigma)), _OPEN_LO, _OPEN_HI)
    return float(phi[0]) if np.asarray(x).ndim == 1 else phi


def union_occupancy(primitives: Sequence[ConvexPrimitive], x, delta: float = 75.0, sigma: float = 75.0):
    """Soft membership in the union: 1 - prod_k (1 - Phi_k), in (0, 1)."""
    if not primitives:
        raise ValueError("union_occupancy needs at least one primitive")
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    log1m = np.zeros(pts.shape[0])
    for p in primitives:
        n, d = p.arrays()
        dist, _ = _smooth_max(pts, n, d, delta)
        log1m = log1m + _log_one_minus_phi(dist, sigma)
    u = np.clip(-np.expm1(log1m), _OPEN_LO, _OPEN_HI)
    return float(u[0]) if np.asarray(x).ndim == 1 else u


# --- axis-aligned volume estimate --------------------------------------------


def _aabb_volume(normals: np.ndarray, offsets: np.ndarray) -> float:
    """Volume of the axis-aligned box spanned by the polytope's vertices.

    Vertices are enumerated from all 3-subsets of face planes; for a bounded
    non-degenerate convex this equals the LP-based bounding intervals. A set
    with no feasible vertex reports volume 0.
    """
    h = len(offsets)
    combos = np.array(list(itertools.combinations(range(h), 3)))
    a = normals[combos]  # (C,3,3)
    b = offsets[combos]  # (C,3)
    det = np.linalg.det(a)
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return 0.0
    verts = np.linalg.solve(a[ok], b[ok][..., None])[..., 0]  # (V,3)
    feasible = np.all(verts @ normals.T - offsets <= 1e-9, axis=1)
    if not np.any(feasible):
        return 0.0
    v = verts[feasible]
    return float(np.prod(v.max(axis=0) - v.min(axis=0)))


# --- loss and gradient --------------------------------------------------------


def _params_from_primitives(primitives: Sequence[ConvexPrimitive]) -> list:
    out = []
    for p in primitives:
        n, d = p.arrays()
        out.append(np.hstack([n, d[:, None]]))
    return out


def _primitive_from_params(param: np.ndarray, pid: str, label) -> ConvexPrimitive:
    hs = tuple(Halfspace(row[:3] / np.linalg.norm(row[:3]), row[3] / np.linalg.norm(row[:3])) for row in param)
    return ConvexPrimitive(id=pid, halfspaces=hs, label=label)


def _loss_and_grad(params: list, x: np.ndarray, y: np.ndarray, cfg: FitConfig, want_grad: bool = True):
    """Mean-squared occupancy error + pairwise overlap + volume, with gradient.

    Accumulates over fixed-size sample chunks so the result is bit-identical
    regardless of thread count. The volume term contributes its value but a
    constant inward push per face offset instead of its true derivative.
    """
    n_samples = x.shape[0]
    k = len(params)
    sq_sum = 0.0
    ov_sum = 0.0
    grads = [np.zeros_like(p) for p in params] if want_grad else None
    for start in range(0, n_samples, _CHUNK):
        xc = x[start : start + _CHUNK]
        yc = y[start : start + _CHUNK]
        c = xc.shape[0]
        log1m = np.zeros((c, k))
        weights = []
        for j, p in enumerate(params):
            dist, w = _smooth_max(xc, p[:, :3], p[:, 3], cfg.delta)
            log1m[:, j] = _log_one_minus_phi(dist, cfg.sigma)
            weights.append(w)
        s_total = np.sum(log1m, axis=1)
        u = -np.expm1(s_total)
        phi = -np.expm1(log1m)  # (C,K)
        resid = u - yc
        sq_sum += float(np.dot(resid, resid))
        phi_sum = np.sum(phi, axis=1)
        ov_sum += float(0.5 * np.sum(phi_sum * phi_sum - np.sum(phi * phi, axis=1)))
        if not want_grad:
            continue
        du = np.exp(s_total[:, None] - log1m)  # dU/dPhi_k, (C,K)
        g_phi = 2.0 * resid[:, None] * du + cfg.w_overlap * (phi_sum[:, None] - phi)
        pq = phi * np.exp(log1m)  # Phi * (1 - Phi)
        g_delta = g_phi * (-cfg.sigma * pq)  # (C,K)
        for j in range(k):
            gw = g_delta[:, j][:, None] * weights[j]  # (C,H)
            grads[j][:, :3] += np.einsum("nh,nd->hd", gw, xc, optimize=False)
            grads[j][:, 3] -= np.sum(gw, axis=0)
    mse = sq_sum / n_samples
    overlap = cfg.w_overlap * ov_sum / n_samples
    volume_raw = 0.0
    if cfg.w_volume != 0.0:
        volume_raw = sum(_aabb_volume(p[:, :3], p[:, 3]) for p in params)
    volume = cfg.w_volume * volume_raw
    if want_grad:
        for g in grads:
            g /= n_samples
            g[:, 3] += cfg.w_volume  # straight-through: shrink every face
    terms = {"mse": mse, "overlap": overlap, "volume": volume, "total": mse + overlap + volume}
    return terms["total"], grads, terms


def _samples_to_arrays(samples: Sequence[LabeledSample]):
    if len(samples) == 0:
        raise ValueError("need at least one labeled sample")
    x = np.stack([s.position for s in samples])
    y = np.array([float(s.label) for s in samples])
    return x, y


def fit_loss(primitives: Sequence[ConvexPrimitive], samples: Sequence[LabeledSample], cfg: FitConfig):
    """Loss and analytic gradient per primitive as (H,4) arrays of d/d[n|d]."""
    x, y = _samples_to_arrays(samples)
    loss, grads, _ = _loss_and_grad(_params_from_primitives(primitives), x, y, cfg)
    return loss, grads


def loss_breakdown(primitives: Sequence[ConvexPrimitive], samples: Sequence[LabeledSample], cfg: FitConfig) -> dict:
    """Individual weighted loss terms: mse, overlap, volume, total."""
    x, y = _samples_to_arrays(samples)
    _, _, terms = _loss_and_grad(_params_from_primitives(primitives), x, y, cfg, want_grad=False)
    return terms


# --- labeled sample generation --------------------------------------------------


def inside_depth_volume(pts_world, depth: DepthMap, camera: Camera, back_plane: float = None) -> np.ndarray:
    """Membership of world points in the solid region behind a depth map.

    A point is inside iff it projects into the raster, the pixel has finite
    depth, and its camera-frame z lies between that surface depth and the
    back plane (default: deepest finite pixel + 0.5 m).
    """
    pts = np.atleast_2d(np.asarray(pts_world, dtype=float))
    if back_plane is None:
        finite = depth.finite_mask
        if not np.any(finite):
            raise SceneError("cannot place a back plane behind an all-infinity depth map")
        back_plane = float(np.max(depth.values[finite])) + _BACK_PLANE_MARGIN
    return _volume_test(pts, depth, camera, back_plane)


def _volume_test(pts_world: np.ndarray, depth: DepthMap, camera: Camera, z_back: float) -> np.ndarray:
    """Membership in the depth volume: between the visible surface and the
    back plane, within the lateral frustum of the raster."""
    cam = camera.world_to_camera(pts_world)
    z = cam[:, 2]
    front = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(front, camera.fx * cam[:, 0] / z + camera.cx, -1.0)
        v = np.where(front, camera.fy * cam[:, 1] / z + camera.cy, -1.0)
    ui = np.floor(u).astype(np.int64)
    vi = np.floor(v).astype(np.int64)
    in_raster = (ui >= 0) & (ui < camera.width) & (vi >= 0) & (vi < camera.height)
    ui_safe = np.clip(ui, 0, camera.width - 1)
    vi_safe = np.clip(vi, 0, camera.height - 1)
    surf = depth.values[vi_safe, ui_safe]
    return front & in_raster & np.isfinite(surf) & (z >= surf) & (z <= z_back)


def _sample_arrays(depth: DepthMap, camera: Camera, cfg: FitConfig, rng_seed: int):
    if (depth.width, depth.height) != (camera.width, camera.height):
        raise SceneError("depth raster does not match camera raster size")
    finite = depth.finite_mask
    if not np.any(finite):
        raise SceneError("cannot sample an all-infinity depth map")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    z_back = float(np.max(depth.values[finite])) + _BACK_PLANE_MARGIN

    # pixel-center rays
    ucoord = (np.arange(camera.width) + 0.5 - camera.cx) / camera.fx
    vcoord = (np.arange(camera.height) + 0.5 - camera.cy) / camera.fy
    uu, vv = np.meshgrid(ucoord, vcoord)
    dirs_cam = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
    dirs_cam /= np.linalg.norm(dirs_cam, axis=-1, keepdims=True)

    fin_v, fin_u = np.nonzero(finite)
    n_pairs = (cfg.n_surface + 1) // 2
    pick = rng.integers(0, fin_v.size, size=n_pairs)
    pv, pu = fin_v[pick], fin_u[pick]
    d_pick = depth.values[pv, pu]
    dirz = dirs_cam[pv, pu, 2]
    t_surf = d_pick / dirz
    dirs_world = dirs_cam[pv, pu] @ camera.pose.rotation.T
    origin = camera.pose.translation
    behind = origin + (t_surf + cfg.surface_band)[:, None] * dirs_world
    front = origin + (t_surf - cfg.surface_band)[:, None] * dirs_world
    near = np.empty((2 * n_pairs, 3))
    near[0::2] = behind
    near[1::2] = front
    near = near[: cfg.n_surface]

    # uniform draws in the camera-frame bounding box of the truncated frustum
    x_lo = min((0.0 - camera.cx) / camera.fx, 0.0) * z_back
    x_hi = max((camera.width - camera.cx) / camera.fx, 0.0) * z_back
    y_lo = min((0.0 - camera.cy) / camera.fy, 0.0) * z_back
    y_hi = max((camera.height - camera.cy) / camera.fy, 0.0) * z_back
    box_lo = np.array([x_lo, y_lo, 0.0])
    box_hi = np.array([x_hi, y_hi, z_back])
    uni_cam = rng.uniform(box_lo, box_hi, size=(cfg.n_uniform, 3))
    uniform = camera.camera_to_world(uni_cam)

    pts = np.vstack([near, uniform])
    labels = _volume_test(pts, depth, camera, z_back).astype(float)
    return pts, labels, z_back


def sample_labels(depth: DepthMap, camera: Camera, cfg: FitConfig, rng_seed: int) -> list:
    """Inside/outside samples: paired points straddling the surface along each
    picked pixel ray, plus uniform draws over the frustum box. Deterministic
    for a fixed rng_seed."""
    pts, labels, _ = _sample_arrays(depth, camera, cfg, rng_seed)
    return [LabeledSample(position=p, label=int(l)) for p, l in zip(pts, labels)]


# --- seeding ------------------------------------------------------------------


def _kmeans(points: np.ndarray, k: int, rng: np.random.Generator, iters: int = 100):
    """Plain seeded k-means++ / Lloyd; deterministic for a fixed generator state."""
    n = points.shape[0]
    centers = np.empty((k, 3))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[j] = points[rng.integers(n)]
        else:
            centers[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        assign = np.argmin(dist, axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = points[assign == j]
            if members.size:
                new_centers[j] = members.mean(axis=0)
            else:
                far = np.argmax(np.min(dist, axis=1))
                new_centers[j] = points[far]
        if np.max(np.abs(new_centers - centers)) < 1e-12:
            centers = new_centers
            break
        centers = new_centers
    dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return centers, np.argmin(dist, axis=1)


def seed_primitives(
    samples: Sequence[LabeledSample],
    budget: int,
    rng_seed: int,
    min_half_extent: float = 0.05,
) -> list:
    """Axis-aligned starter boxes: one k-means cluster each, half-extents
    1.5x the per-axis standard deviation floored at min_half_extent."""
    inside = np.array([s.position for s in samples if s.label == 1])
    if inside.size == 0:
        raise SceneError("no inside-labeled samples to seed from")
    k = budget
    if inside.shape[0] < budget:
        warnings.warn(
            f"only {inside.shape[0]} inside samples for budget {budget}; reducing seed count",
            stacklevel=2,
        )
        k = inside.shape[0]
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    centers, assign = _kmeans(inside, k, rng)
    order = sorted(range(k), key=lambda j: tuple(centers[j]))
    prims = []
    for rank, j in enumerate(order):
        members = inside[assign == j]
        mu = members.mean(axis=0) if members.size else centers[j]
        std = members.std(axis=0) if members.size else np.zeros(3)
        half = np.maximum(1.5 * std, min_half_extent)
        prims.append(make_parallelepiped(mu, np.diag(half), id=f"p{rank:02d}"))
    return prims


# --- polishing -------------------------------------------------------------------


def _unique_coverage(params: list, x_inside: np.ndarray, cfg: FitConfig) -> np.ndarray:
    """Per convex: fraction of inside samples where it alone has Phi > 0.5."""
    k = len(params)
    if x_inside.shape[0] == 0:
        return np.zeros(k)
    over = np.zeros((x_inside.shape[0], k), dtype=bool)
    for j, p in enumerate(params):
        dist, _ = _smooth_max(x_inside, p[:, :3], p[:, 3], cfg.delta)
        phi = -np.expm1(_log_one_minus_phi(dist, cfg.sigma))
        over[:, j] = phi > 0.5
    counts = np.sum(over, axis=1)
    unique = over & (counts == 1)[:, None]
    return unique.sum(axis=0) / x_inside.shape[0]


def _classification_accuracy(params: list, x: np.ndarray, y: np.ndarray, cfg: FitConfig) -> float:
    if x.shape[0] == 0:
        return 1.0
    log1m = np.zeros(x.shape[0])
    for p in params:
        dist, _ = _smooth_max(x, p[:, :3], p[:, 3], cfg.delta)
        log1m = log1m + _log_one_minus_phi(dist, cfg.sigma)
    u = -np.expm1(log1m)
    return float(np.mean((u > 0.5) == (y > 0.5)))


def classification_accuracy(
    primitives: Sequence[ConvexPrimitive], samples: Sequence[LabeledSample], cfg: FitConfig = FitConfig()
) -> float:
    """Hard-threshold union accuracy against the sample labels."""
    x, y = _samples_to_arrays(samples)
    return _classification_accuracy(_params_from_primitives(primitives), x, y, cfg)


def polish(
    primitives: Sequence[ConvexPrimitive],
    samples: Sequence[LabeledSample],
    cfg: FitConfig,
    rng_seed: int = 0,
):
    """Refine halfspace parameters with Adam, then prune.

    Tracks the best training-loss iterate so the exit loss never exceeds the
    entry loss. Normals are re-projected to unit length (offsets rescaled to
    preserve the plane) after every step. Convexes are dropped when their
    unique coverage of inside samples falls below cfg.prune_threshold or when
    they fail bounded/non-degenerate re-validation.
    """
    if not primitives:
        raise SceneError("polish needs at least one primitive")
    x_all, y_all = _samples_to_arrays(samples)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    perm = rng.permutation(x_all.shape[0])
    n_hold = int(round(_HOLDOUT_FRACTION * x_all.shape[0]))
    hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
    if train_idx.size == 0:
        train_idx, hold_idx = perm, perm[:0]
    x_train, y_train = x_all[train_idx], y_all[train_idx]
    x_hold, y_hold = x_all[hold_idx], y_all[hold_idx]

    params = _params_from_primitives(primitives)
    entry_accuracy = _classification_accuracy(params, x_hold, y_hold, cfg) if x_hold.size else 1.0
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    best_loss = math.inf
    best_params = [p.copy() for p in params]
    history = []
    iterations_run = 0
    for it in range(cfg.iterations):
        loss, grads, _ = _loss_and_grad(params, x_train, y_train, cfg)
        if not math.isfinite(loss):
            break
        history.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_params = [p.copy() for p in params]
        t = it + 1
        for j, g in enumerate(grads):
            m[j] = cfg.beta1 * m[j] + (1 - cfg.beta1) * g
            v[j] = cfg.beta2 * v[j] + (1 - cfg.beta2) * g * g
            mhat = m[j] / (1 - cfg.beta1**t)
            vhat = v[j] / (1 - cfg.beta2**t)
            params[j] = params[j] - cfg.step_size * mhat / (np.sqrt(vhat) + 1e-8)
            norms = np.linalg.norm(params[j][:, :3], axis=1, keepdims=True)
            norms = np.where(norms > 1e-12, norms, 1.0)
            params[j] = params[j] / norms  # rescales offset too: same plane
        iterations_run = t
    final_loss, _, _ = _loss_and_grad(params, x_train, y_train, cfg, want_grad=False)
    if math.isfinite(final_loss):
        history.append(final_loss)
        if final_loss < best_loss:
            best_loss = final_loss
            best_params = [p.copy() for p in params]

    inside = x_all[y_all > 0.5]
    coverage = _unique_coverage(best_params, inside, cfg)
    survivors = []
    surviving_params = []
    pruned = []
    for j, prim in enumerate(primitives):
        if coverage[j] < cfg.prune_threshold:
            pruned.append(prim.id)
            continue
        try:
            survivors.append(_primitive_from_params(best_params[j], prim.id, prim.label))
            surviving_params.append(best_params[j])
        except Exception:
            pruned.append(prim.id)
    if survivors:
        exit_loss, _, _ = _loss_and_grad(surviving_params, x_train, y_train, cfg, want_grad=False)
        accuracy = _classification_accuracy(surviving_params, x_hold, y_hold, cfg) if x_hold.size else 1.0
    else:
        exit_loss = best_loss
        accuracy = 0.0
    report = FitReport(
        final_loss=float(exit_loss),
        coverage={prim.id: float(coverage[j]) for j, prim in enumerate(primitives)},
        pruned_ids=tuple(pruned),
        iterations_run=iterations_run,
        holdout_accuracy=accuracy,
        entry_holdout_accuracy=entry_accuracy,
        loss_history=tuple(history),
    )
    return survivors, report


def decompose(depth: DepthMap, camera: Camera, cfg: FitConfig, rng_seed: int):
    """sample_labels -> seed_primitives -> polish, returning a Scene.

    Fully deterministic for fixed (depth, camera, cfg, rng_seed); the scene
    carries the rng_seed as its render seed and an empty prompt.
    """
    pts, labels, _ = _sample_arrays(depth, camera, cfg, rng_seed)
    samples = [LabeledSample(position=p, label=int(l)) for p, l in zip(pts, labels)]
    seeds = seed_primitives(samples, cfg.budget, rng_seed, min_half_extent=cfg.surface_band)
    survivors, report = polish(seeds, samples, cfg, rng_seed)
    scene = Scene(primitives=tuple(survivors), camera=camera, prompt="", seed=rng_seed, budget=cfg.budget)
    return scene, report
