/** Click-to-primitive picking: the same pixel-ray + slab math the backend
 * ray tracer uses, so a click selects exactly the primitive whose pixel it
 * lands on in the rendered id buffer. */

import { CameraDoc, PrimitiveDoc, SceneDoc } from "./types.js";
import { Vec3, matVec, normalize } from "./math.js";

export interface PixelRay {
  origin: Vec3;
  dir: Vec3;
}

/** Ray through continuous pixel coordinate (u, v); pixel centers sit at
 * half-integers. */
export function pixelRay(cam: CameraDoc, u: number, v: number): PixelRay {
  const dirCam: Vec3 = normalize([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1]);
  return {
    origin: [cam.pose.translation[0], cam.pose.translation[1], cam.pose.translation[2]],
    dir: matVec(cam.pose.rotation, dirCam),
  };
}

/** Slab-clip the ray against every halfspace; null on a miss or an interval
 * entirely behind the origin. t_near clamps to 0 when the origin is inside. */
export function intersectConvex(ray: PixelRay, prim: PrimitiveDoc): [number, number] | null {
  let t0 = -Infinity;
  let t1 = Infinity;
  for (const h of prim.halfspaces) {
    const n = h.normal;
    const denom = n[0] * ray.dir[0] + n[1] * ray.dir[1] + n[2] * ray.dir[2];
    const num =
      h.offset - (n[0] * ray.origin[0] + n[1] * ray.origin[1] + n[2] * ray.origin[2]);
    if (denom === 0) {
      if (num < 0) return null;
      continue;
    }
    const t = num / denom;
    if (denom > 0) {
      if (t < t1) t1 = t;
    } else if (t > t0) {
      t0 = t;
    }
  }
  if (t0 > t1 || t1 < 0) return null;
  return [Math.max(t0, 0), t1];
}

/** Front-most primitive under the pixel, or null; ties go to the smaller id
 * (matching the renderer's reorder-invariant id buffer). */
export function pickPrimitive(scene: SceneDoc, u: number, v: number): string | null {
  const ray = pixelRay(scene.camera, u, v);
  let bestT = Infinity;
  let bestId: string | null = null;
  const byId = [...scene.primitives].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  for (const prim of byId) {
    const hit = intersectConvex(ray, prim);
    if (hit !== null && hit[0] < bestT) {
      bestT = hit[0];
      bestId = prim.id;
    }
  }
  return bestId;
}
