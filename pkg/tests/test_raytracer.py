"""Ray/convex intersection, depth rendering, silhouettes, unprojection."""

import numpy as np
import pytest

from b2w.core import Camera, Pose, Scene, SceneError, make_parallelepiped
from b2w.raytrace import Ray, intersect_convex, pixel_ray, render_depth, silhouette, unproject

from oracles import march_ray, random_convex, random_ray_at, random_rotation


def _cam(width=64, height=48, f=80.0, pose=None):
    return Camera(
        fx=f, fy=f, cx=(width - 1) / 2, cy=(height - 1) / 2, width=width, height=height,
        pose=pose or Pose.identity(),
    )


def _cube(center, half=1.0, pid="c0"):
    return make_parallelepiped(center, np.eye(3) * half, id=pid)


# --- pixel_ray -----------------------------------------------------------------


def test_pixel_ray_at_principal_point():
    cam = _cam()  # cx=31.5 -> pixel 31 center is exactly the principal point
    ray = pixel_ray(cam, 31, 23)
    assert np.allclose(ray.direction, [0, 0, 1])
    assert np.allclose(ray.origin, [0, 0, 0])


def test_pixel_ray_one_focal_length_off_axis():
    cam = Camera(fx=8, fy=8, cx=7.5, cy=7.5, width=32, height=16)
    ray = pixel_ray(cam, 15, 7)  # u + 0.5 - cx = 8 = fx
    expected = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)
    assert np.allclose(ray.direction, expected)


def test_pixel_ray_out_of_range():
    cam = _cam()
    with pytest.raises(SceneError):
        pixel_ray(cam, 64, 0)
    with pytest.raises(SceneError):
        pixel_ray(cam, 0, -1)


def test_pixel_ray_projects_back_to_pixel_center():
    rng = np.random.default_rng(5)
    rot = random_rotation(rng)
    cam = _cam(pose=Pose(rot, rng.uniform(-2, 2, size=3)))
    for u, v in [(0, 0), (63, 47), (17, 29)]:
        ray = pixel_ray(cam, u, v)
        point = ray.origin + 3.7 * ray.direction
        uu, vv, zz = cam.project(point[None, :])
        assert zz[0] > 0
        assert abs(uu[0] - (u + 0.5)) < 1e-6
        assert abs(vv[0] - (v + 0.5)) < 1e-6


# --- intersect_convex ---------------------------------------------------------


def test_intersect_unit_cube_head_on():
    ray = Ray(np.array([0.0, 0.0, -5.0]), np.array([0.0, 0.0, 1.0]))
    hit = intersect_convex(ray, _cube((0, 0, 0)))
    assert hit is not None
    assert hit[0] == pytest.approx(4.0, abs=1e-12)
    assert hit[1] == pytest.approx(6.0, abs=1e-12)


def test_intersect_translated_cube_misses():
    ray = Ray(np.array([0.0, 0.0, -5.0]), np.array([0.0, 0.0, 1.0]))
    assert intersect_convex(ray, _cube((10, 0, 0))) is None


def test_intersect_rotated_cube_matches_march_oracle():
    theta = np.pi / 4
    rot = np.array(
        [[np.cos(theta), 0, np.sin(theta)], [0, 1, 0], [-np.sin(theta), 0, np.cos(theta)]]
    )
    prim = make_parallelepiped((0, 0, 0), rot, id="rot")
    ray = Ray(np.array([0.0, 0.0, -5.0]), np.array([0.0, 0.0, 1.0]))
    hit = intersect_convex(ray, prim)
    assert hit is not None
    assert hit[0] == pytest.approx(5.0 - np.sqrt(2.0), abs=1e-9)
    marched = march_ray(ray.origin, ray.direction, prim)
    assert marched is not None
    assert abs(hit[0] - marched) < 2e-4


def test_intersect_origin_inside_clamps_to_zero():
    ray = Ray(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    hit = intersect_convex(ray, _cube((0, 0, 0)))
    assert hit == (0.0, 1.0)


def test_intersect_behind_origin_is_miss():
    ray = Ray(np.array([0.0, 0.0, 5.0]), np.array([0.0, 0.0, 1.0]))
    assert intersect_convex(ray, _cube((0, 0, 0))) is None


def test_intersect_parallel_ray_outside_slab():
    ray = Ray(np.array([0.0, 5.0, -5.0]), np.array([0.0, 0.0, 1.0]))
    assert intersect_convex(ray, _cube((0, 0, 0))) is None


def test_slab_vs_march_oracle_randomized():
    rng = np.random.default_rng(20240817)
    checked_hits = 0
    for i in range(300):
        prim = random_convex(rng, extra_cuts=rng.integers(0, 3))
        origin, direction = random_ray_at(rng, prim)
        hit = intersect_convex(Ray(origin, direction), prim)
        marched = march_ray(origin, direction, prim)
        if hit is None:
            assert marched is None, f"case {i}: slab missed, march hit at {marched}"
        else:
            assert marched is not None, f"case {i}: slab hit {hit}, march missed"
            assert abs(hit[0] - marched) < 2e-4, f"case {i}: {hit[0]} vs {marched}"
            checked_hits += 1
    assert checked_hits > 150  # the generator must actually exercise hits


# --- render_depth ----------------------------------------------------------------


def test_render_empty_scene():
    scene = Scene((), _cam())
    depth, ids = render_depth(scene)
    assert np.all(np.isinf(depth.values))
    assert np.all(ids.ids == -1)


def test_render_single_cube_center_depth():
    scene = Scene((_cube((0, 0, 5)),), _cam())
    depth, ids = render_depth(scene)
    assert depth.values[23, 31] == pytest.approx(4.0, abs=1e-12)
    assert ids.ids[23, 31] == 0
    assert np.isinf(depth.values[0, 0])
    assert ids.ids[0, 0] == -1


def test_depth_is_z_not_ray_length():
    # off-axis pixel on a wall at z=4: z-depth stays 4, ray length exceeds it
    wall = make_parallelepiped((0, 0, 4.5), np.diag([10, 10, 0.5]), id="wall")
    scene = Scene((wall,), _cam())
    depth, _ = render_depth(scene)
    assert depth.values[23, 31] == pytest.approx(4.0, abs=1e-9)
    assert depth.values[0, 0] == pytest.approx(4.0, abs=1e-9)


def test_render_two_overlapping_cubes_matches_per_pixel_loop():
    cam = _cam(width=64, height=64, f=64.0)
    a = _cube((0.4, 0.0, 5.0), half=1.0, pid="a")
    b = _cube((-0.4, 0.2, 4.5), half=1.0, pid="b")
    scene = Scene((a, b), cam)
    depth, ids = render_depth(scene)
    for v in range(64):
        for u in range(64):
            ray = pixel_ray(cam, u, v)
            best = (np.inf, -1)
            for idx, prim in enumerate(scene.primitives):
                hit = intersect_convex(ray, prim)
                if hit is not None and hit[0] < best[0]:
                    best = (hit[0], idx)
            assert ids.ids[v, u] == best[1]
            if best[1] >= 0:
                assert depth.values[v, u] == pytest.approx(best[0] * ray.direction[2], rel=1e-12)
            else:
                assert np.isinf(depth.values[v, u])


def test_render_invariant_under_reordering():
    cam = _cam()
    a = _cube((0.4, 0.0, 5.0), pid="a")
    b = _cube((-0.4, 0.2, 4.5), pid="b")
    c = _cube((0.0, -0.3, 6.0), pid="c")
    d1, i1 = render_depth(Scene((a, b, c), cam))
    d2, i2 = render_depth(Scene((c, a, b), cam))
    assert np.array_equal(d1.values, d2.values)
    # indices differ by permutation; resolved ids must agree
    ids1 = np.where(i1.ids >= 0, np.array(["a", "b", "c", ""])[i1.ids], "")
    ids2 = np.where(i2.ids >= 0, np.array(["c", "a", "b", ""])[i2.ids], "")
    assert np.array_equal(ids1, ids2)


def test_render_translation_compensation():
    cam = _cam()
    cube = _cube((0.5, 0.0, 5.0))
    d1, _ = render_depth(Scene((cube,), cam))
    delta = np.array([2.0, -1.0, 3.0])
    moved = make_parallelepiped((0.5, 0.0, 5.0) + delta, np.eye(3), id="c0")
    cam2 = Camera(cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height, Pose(np.eye(3), delta))
    d2, _ = render_depth(Scene((moved,), cam2))
    assert np.array_equal(d1.values, d2.values)


# --- silhouette ---------------------------------------------------------------------


def test_silhouette_empty_ids():
    scene = Scene((_cube((0, 0, 5)),), _cam())
    mask = silhouette(scene, set())
    assert mask.shape == (48, 64)
    assert not mask.any()


def test_silhouette_all_ids_equals_finite_depth():
    scene = Scene((_cube((0, 0, 5)),), _cam())
    depth, _ = render_depth(scene)
    mask = silhouette(scene, {"c0"})
    assert np.array_equal(mask, np.isfinite(depth.values))


def test_silhouette_unknown_id():
    scene = Scene((_cube((0, 0, 5)),), _cam())
    with pytest.raises(SceneError, match="nosuch"):
        silhouette(scene, {"nosuch"})


def test_silhouette_ignores_occlusion():
    cam = _cam(width=64, height=64, f=64.0)
    back = _cube((0.0, 0.0, 6.0), half=1.0, pid="a")
    front = make_parallelepiped((0.0, 0.0, 3.0), np.diag([2.0, 2.0, 0.5]), id="b")
    scene = Scene((back, front), cam)
    mask = silhouette(scene, {"a"})
    _, ids = render_depth(scene)
    assert not (ids.ids == 0).any()  # cube a fully occluded in the id buffer
    for v in range(64):
        for u in range(64):
            hit = intersect_convex(pixel_ray(cam, u, v), back)
            assert mask[v, u] == (hit is not None)
    assert mask.any()


# --- unproject ------------------------------------------------------------------------


def test_unproject_roundtrip_depth():
    rng = np.random.default_rng(9)
    cam = _cam(pose=Pose(random_rotation(rng), rng.uniform(-1, 1, 3)))
    scene = Scene((_cube(cam.pose.translation + cam.pose.rotation @ [0, 0, 5.0]),), cam)
    depth, _ = render_depth(scene)
    cloud = unproject(depth, cam)
    assert cloud.shape[0] == int(np.isfinite(depth.values).sum())
    _, _, z = cam.project(cloud)
    assert np.allclose(z, depth.values[np.isfinite(depth.values)], atol=1e-6)


def test_unproject_principal_pixel():
    cam = _cam()
    values = np.full((48, 64), np.inf)
    values[23, 31] = 3.25
    cloud = unproject(type(render_depth(Scene((), cam))[0])(64, 48, values), cam)
    assert cloud.shape == (1, 3)
    assert np.allclose(cloud[0], [0, 0, 3.25], atol=1e-12)


def test_unproject_empty_and_mismatch():
    cam = _cam()
    values = np.full((48, 64), np.inf)
    from b2w.core import DepthMap

    empty = DepthMap(64, 48, values)
    assert unproject(empty, cam).shape == (0, 3)
    with pytest.raises(SceneError, match="match"):
        unproject(DepthMap(32, 32, np.full((32, 32), np.inf)), cam)
