"""Generate test fixtures from the backend: a scene document and pick cases.

The pick cases pair pixel coordinates with the primitive id the backend's
id buffer reports, so the UI's click-picking math is tested against the
renderer it must agree with. Run from the frontend directory:

    python3 scripts/make_fixtures.py
"""

import json
from pathlib import Path

import numpy as np

from b2w.core import Camera, Pose, Scene, make_parallelepiped
from b2w.io import scene_to_doc
from b2w.raytrace import render_depth

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def build_scene() -> Scene:
    theta = 0.35
    rot = np.array(
        [[np.cos(theta), 0, np.sin(theta)], [0, 1, 0], [-np.sin(theta), 0, np.cos(theta)]]
    )
    prims = (
        make_parallelepiped((-1.0, 0.3, 4.2), np.diag([0.7, 0.9, 0.6]), id="a"),
        make_parallelepiped((1.0, -0.2, 4.8), rot @ np.diag([0.8, 0.6, 0.7]), id="b"),
        make_parallelepiped((0.1, 0.8, 3.5), np.diag([0.5, 0.4, 0.5]), id="c", label="crate"),
    )
    cam_rot = np.array(
        [[np.cos(0.1), 0, np.sin(0.1)], [0, 1, 0], [-np.sin(0.1), 0, np.cos(0.1)]]
    )
    cam = Camera(fx=70.0, fy=70.0, cx=31.5, cy=31.5, width=64, height=64,
                 pose=Pose(cam_rot, np.array([0.2, -0.1, 0.0])))
    return Scene(prims, cam, prompt="a workshop", seed=4)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    scene = build_scene()
    _, ids = render_depth(scene)
    rng = np.random.default_rng(0)
    cases = []
    # mix random pixels with guaranteed hits on each primitive
    pixels = [(int(u), int(v)) for u, v in rng.integers(0, 64, size=(120, 2))]
    for idx in range(len(scene.primitives)):
        vs, us = np.nonzero(ids.ids == idx)
        for k in range(0, len(us), max(1, len(us) // 10)):
            pixels.append((int(us[k]), int(vs[k])))
    for u, v in pixels:
        idx = int(ids.ids[v, u])
        cases.append({"u": u, "v": v, "expected": scene.primitives[idx].id if idx >= 0 else None})
    (OUT / "pick_cases.json").write_text(
        json.dumps({"scene": scene_to_doc(scene), "cases": cases}, indent=2) + "\n"
    )
    (OUT / "scene.json").write_text(json.dumps(scene_to_doc(scene), indent=2) + "\n")
    print(f"wrote {len(cases)} pick cases")


if __name__ == "__main__":
    main()
