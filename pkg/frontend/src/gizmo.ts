/** Gizmo math: axis-constrained drags and camera orbits.
 *
 * A 2D pointer can't specify depth, so translations are constrained to a
 * chosen world axis: the drag is projected onto the axis's screen-space
 * direction at the object's depth. */

import { CameraDoc, EditOpDoc, PoseDoc } from "./types.js";
import { Vec3, add, axisAngle, dot, matMul, matTVec, matVec, norm, normalize, scale, sub } from "./math.js";

export type Axis = "x" | "y" | "z";

const AXIS_DIR: Record<Axis, Vec3> = { x: [1, 0, 0], y: [0, 1, 0], z: [0, 0, 1] };

// y points down in the world convention, so "up" for orbits is -y
const WORLD_UP: Vec3 = [0, -1, 0];

function projectPoint(cam: CameraDoc, p: Vec3): [number, number] | null {
  const c = matTVec(cam.pose.rotation, sub(p, cam.pose.translation as Vec3));
  if (c[2] <= 0) return null;
  return [(cam.fx * c[0]) / c[2] + cam.cx, (cam.fy * c[1]) / c[2] + cam.cy];
}

/** World-space translation for a screen drag constrained to one axis.
 *
 * anchor: a world point on the selection (e.g. its center); dxPx/dyPx: drag
 * in raster pixel coordinates. Returns null for a degenerate drag (zero
 * length, anchor behind the camera, or the axis foreshortened to a point).
 */
export function dragTranslation(
  axis: Axis,
  cam: CameraDoc,
  anchor: Vec3,
  dxPx: number,
  dyPx: number,
): Vec3 | null {
  if (dxPx === 0 && dyPx === 0) return null;
  const dir = AXIS_DIR[axis];
  const p0 = projectPoint(cam, anchor);
  const p1 = projectPoint(cam, add(anchor, dir));
  if (p0 === null || p1 === null) return null;
  const sx = p1[0] - p0[0];
  const sy = p1[1] - p0[1];
  const s2 = sx * sx + sy * sy;
  if (s2 < 1e-12) return null;
  const amount = (dxPx * sx + dyPx * sy) / s2;
  if (amount === 0) return null;
  return scale(dir, amount);
}

/** Translate ops for every selected primitive (one gesture, one batch). */
export function translateOps(selection: Iterable<string>, delta: Vec3): EditOpDoc[] {
  return [...selection].map((id) => ({ op: "translate", id, delta: [...delta] }));
}

/** Orbit the camera pose about a pivot: yaw about world up, pitch about the
 * camera's right axis, then dolly meters toward the pivot. Matches the
 * backend's orbit semantics so the distance to the pivot changes by exactly
 * the dolly amount. */
export function orbitPose(
  pose: PoseDoc,
  pivot: Vec3,
  yaw: number,
  pitch: number,
  dolly: number,
): PoseDoc {
  let rotation = pose.rotation.map((r) => [...r]);
  let center: Vec3 = [pose.translation[0], pose.translation[1], pose.translation[2]];
  if (yaw !== 0 || pitch !== 0) {
    let orbit = axisAngle(WORLD_UP, yaw);
    const right: Vec3 = [
      matMul(orbit, rotation)[0][0],
      matMul(orbit, rotation)[1][0],
      matMul(orbit, rotation)[2][0],
    ];
    orbit = matMul(axisAngle(right, pitch), orbit);
    rotation = matMul(orbit, rotation);
    center = add(pivot, matVec(orbit, sub(center, pivot)));
  }
  const toPivot = sub(pivot, center);
  const dist = norm(toPivot);
  if (dolly !== 0 && dist > 0) {
    center = add(center, scale(normalize(toPivot), dolly));
  }
  return { rotation, translation: [...center] };
}

export function setCameraPoseOp(pose: PoseDoc): EditOpDoc {
  return { op: "set_camera_pose", rotation: pose.rotation, translation: pose.translation };
}
