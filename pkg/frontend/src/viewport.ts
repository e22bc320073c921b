/** three.js viewport: primitives as shaded boxes + wireframes, scene-camera
 * view, selection highlighting. Picking is not three's raycaster but the
 * shared pixel-ray math in pick.ts, so clicks agree with the backend's id
 * buffer. */

import * as THREE from "three";
import { ConvexGeometry } from "three/examples/jsm/geometries/ConvexGeometry.js";

import { PrimitiveDoc, SceneDoc } from "./types.js";

/** Enumerate polytope vertices from all 3-plane intersections. */
export function primitiveVertices(prim: PrimitiveDoc): number[][] {
  const hs = prim.halfspaces;
  const out: number[][] = [];
  for (let i = 0; i < hs.length; i++)
    for (let j = i + 1; j < hs.length; j++)
      for (let k = j + 1; k < hs.length; k++) {
        const rows = [hs[i].normal, hs[j].normal, hs[k].normal];
        const b = [hs[i].offset, hs[j].offset, hs[k].offset];
        const det =
          rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1]) -
          rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0]) +
          rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]);
        if (Math.abs(det) < 1e-12) continue;
        // Cramer's rule
        const solveCol = (col: number) => {
          const m = rows.map((r) => [...r]);
          for (let r = 0; r < 3; r++) m[r][col] = b[r];
          return (
            (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
            det
          );
        };
        const v = [solveCol(0), solveCol(1), solveCol(2)];
        const feasible = hs.every(
          (h) =>
            h.normal[0] * v[0] + h.normal[1] * v[1] + h.normal[2] * v[2] - h.offset <= 1e-9,
        );
        if (feasible) out.push(v);
      }
  return out;
}

function idHue(id: string): number {
  let h = 0;
  for (const ch of id) h = (h * 31 + ch.charCodeAt(0)) % 360;
  return h / 360;
}

export class Viewport {
  readonly renderer: THREE.WebGLRenderer;
  readonly scene3 = new THREE.Scene();
  camera: THREE.PerspectiveCamera;
  private meshes = new Map<string, THREE.Object3D>();

  constructor(readonly canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(50, 1, 0.05, 100);
    this.camera.matrixAutoUpdate = false;
    this.scene3.background = new THREE.Color(0x181a1f);
    this.scene3.add(new THREE.AmbientLight(0xffffff, 0.7));
    const key = new THREE.DirectionalLight(0xffffff, 1.2);
    key.position.set(2, -3, -1);
    this.scene3.add(key);
  }

  /** Rebuild meshes from the scene document and align the view camera. */
  sync(doc: SceneDoc, selection: Set<string>, ghostOffsets?: Map<string, number[]>): void {
    for (const obj of this.meshes.values()) this.scene3.remove(obj);
    this.meshes.clear();
    for (const prim of doc.primitives) {
      const verts = primitiveVertices(prim);
      if (verts.length < 4) continue;
      const points = verts.map((v) => new THREE.Vector3(v[0], v[1], v[2]));
      const geom = new ConvexGeometry(points);
      const selected = selection.has(prim.id);
      const color = new THREE.Color().setHSL(idHue(prim.id), 0.65, selected ? 0.65 : 0.45);
      const mesh = new THREE.Mesh(
        geom,
        new THREE.MeshLambertMaterial({ color, transparent: true, opacity: selected ? 0.85 : 0.6 }),
      );
      const wire = new THREE.LineSegments(
        new THREE.EdgesGeometry(geom),
        new THREE.LineBasicMaterial({ color: selected ? 0xffffff : 0x9aa0a6 }),
      );
      const group = new THREE.Group();
      group.add(mesh);
      group.add(wire);
      const ghost = ghostOffsets?.get(prim.id);
      if (ghost) group.position.set(ghost[0], ghost[1], ghost[2]);
      this.scene3.add(group);
      this.meshes.set(prim.id, group);
    }
    this.alignCamera(doc);
    this.draw();
  }

  /** Match the view to the scene camera (+z forward, y down world). */
  private alignCamera(doc: SceneDoc): void {
    const cam = doc.camera;
    this.camera.fov = (2 * Math.atan(cam.height / (2 * cam.fy)) * 180) / Math.PI;
    this.camera.aspect = (cam.width * cam.fy) / (cam.height * cam.fx);
    this.camera.updateProjectionMatrix();
    const r = cam.pose.rotation;
    const t = cam.pose.translation;
    // three cameras look down -z with +y up; our pose looks down +z, y down
    const m = new THREE.Matrix4();
    m.set(
      r[0][0], -r[0][1], -r[0][2], t[0],
      r[1][0], -r[1][1], -r[1][2], t[1],
      r[2][0], -r[2][1], -r[2][2], t[2],
      0, 0, 0, 1,
    );
    this.camera.matrix.copy(m);
    this.camera.matrixWorld.copy(m);
    this.camera.matrixWorldNeedsUpdate = true;
  }

  draw(): void {
    this.renderer.render(this.scene3, this.camera);
  }

  resize(cssWidth: number, cssHeight: number): void {
    this.renderer.setSize(cssWidth, cssHeight, false);
    this.draw();
  }
}
