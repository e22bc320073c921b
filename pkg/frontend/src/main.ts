/** App wiring: load a scene, click to select, drag to translate along the
 * chosen axis, orbit the camera, edit prompt/seed, request renders. */

import { ApiClient } from "./api.js";
import { Axis, dragTranslation, orbitPose, setCameraPoseOp, translateOps } from "./gizmo.js";
import { Vec3 } from "./math.js";
import { pickPrimitive } from "./pick.js";
import { SceneStore } from "./store.js";
import { primitiveVertices, Viewport } from "./viewport.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function selectionAnchor(store: SceneStore): Vec3 | null {
  if (!store.scene) return null;
  const pts: number[][] = [];
  for (const prim of store.scene.primitives) {
    if (store.selection.has(prim.id)) pts.push(...primitiveVertices(prim));
  }
  if (pts.length === 0) return null;
  const c: Vec3 = [0, 0, 0];
  for (const p of pts) {
    c[0] += p[0];
    c[1] += p[1];
    c[2] += p[2];
  }
  return [c[0] / pts.length, c[1] / pts.length, c[2] / pts.length];
}

function scenePivot(store: SceneStore): Vec3 {
  const anchor = selectionAnchor(store);
  if (anchor) return anchor;
  if (store.scene) {
    const pts = store.scene.primitives.flatMap((p) => primitiveVertices(p));
    if (pts.length > 0) {
      const c: Vec3 = [0, 0, 0];
      for (const p of pts) {
        c[0] += p[0];
        c[1] += p[1];
        c[2] += p[2];
      }
      return [c[0] / pts.length, c[1] / pts.length, c[2] / pts.length];
    }
  }
  return [0, 0, 4];
}

function main(): void {
  const canvas = $<HTMLCanvasElement>("viewport");
  const viewport = new Viewport(canvas);
  let store = new SceneStore(new ApiClient($<HTMLInputElement>("server").value));

  const status = (msg: string) => {
    $<HTMLSpanElement>("status").textContent = msg;
  };

  const refreshUi = () => {
    if (!store.scene) return;
    $<HTMLInputElement>("prompt").value = store.scene.prompt;
    $<HTMLInputElement>("seed").value = String(store.scene.seed);
    $<HTMLSpanElement>("revision").textContent = `rev ${store.revision}`;
    viewport.sync(store.scene, store.selection);
    if (store.lastPreviewB64) {
      $<HTMLImageElement>("preview").src = `data:image/png;base64,${store.lastPreviewB64}`;
    } else {
      $<HTMLImageElement>("preview").src =
        store.api.depthPreviewUrl(store.name) + `?rev=${store.revision}`;
    }
    if (store.lastRender) {
      $<HTMLImageElement>("render").src = `data:image/png;base64,${store.lastRender.image_png_b64}`;
    }
  };

  const attach = () => {
    store.subscribe((ev) => {
      if (ev.kind === "conflict") status(`scene changed elsewhere; reloaded (${ev.message})`);
      else if (ev.kind === "error") status(`error: ${ev.message}`);
      else status(ev.kind);
      refreshUi();
    });
  };
  attach();

  $<HTMLButtonElement>("load").onclick = async () => {
    store = new SceneStore(new ApiClient($<HTMLInputElement>("server").value));
    attach();
    try {
      await store.load($<HTMLInputElement>("scene-name").value);
    } catch (e) {
      status(`load failed: ${e instanceof Error ? e.message : e}`);
    }
  };

  const rasterCoords = (ev: MouseEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const W = store.scene?.camera.width ?? canvas.width;
    const H = store.scene?.camera.height ?? canvas.height;
    return [((ev.clientX - rect.left) / rect.width) * W, ((ev.clientY - rect.top) / rect.height) * H];
  };

  // click = select; drag with a selection = axis-constrained translate
  let downAt: [number, number] | null = null;
  let dragGhost: Vec3 | null = null;
  let lastGhostDraw = 0;
  canvas.addEventListener("mousedown", (ev) => {
    downAt = rasterCoords(ev);
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!downAt || !store.scene || store.selection.size === 0) return;
    const [u, v] = rasterCoords(ev);
    const axis = (document.querySelector('input[name="axis"]:checked') as HTMLInputElement)
      .value as Axis;
    const anchor = selectionAnchor(store);
    if (!anchor) return;
    const delta = dragTranslation(axis, store.scene.camera, anchor, u - downAt[0], v - downAt[1]);
    dragGhost = delta;
    const now = performance.now();
    if (delta && now - lastGhostDraw > 100) {
      // local ghost only; geometry changes land via the server ack
      lastGhostDraw = now;
      const offsets = new Map<string, number[]>();
      for (const id of store.selection) offsets.set(id, delta);
      viewport.sync(store.scene, store.selection, offsets);
    }
  });
  canvas.addEventListener("mouseup", async (ev) => {
    if (!downAt || !store.scene) return;
    const [u, v] = rasterCoords(ev);
    const [u0, v0] = downAt;
    downAt = null;
    const moved = Math.hypot(u - u0, v - v0) > 2;
    if (!moved) {
      store.select(pickPrimitive(store.scene, u, v), ev.shiftKey);
      refreshUi();
      return;
    }
    if (store.selection.size === 0 || dragGhost === null) return;
    const delta = dragGhost;
    dragGhost = null;
    await store.applyOps(translateOps(store.selection, delta));
  });

  const orbit = (yaw: number, pitch: number, dolly: number) => async () => {
    if (!store.scene) return;
    const pose = orbitPose(store.scene.camera.pose, scenePivot(store), yaw, pitch, dolly);
    await store.applyOps([setCameraPoseOp(pose)]);
  };
  $<HTMLButtonElement>("orbit-left").onclick = orbit(-0.15, 0, 0);
  $<HTMLButtonElement>("orbit-right").onclick = orbit(0.15, 0, 0);
  $<HTMLButtonElement>("orbit-up").onclick = orbit(0, -0.12, 0);
  $<HTMLButtonElement>("orbit-down").onclick = orbit(0, 0.12, 0);
  $<HTMLButtonElement>("dolly-in").onclick = orbit(0, 0, 0.3);
  $<HTMLButtonElement>("dolly-out").onclick = orbit(0, 0, -0.3);

  $<HTMLInputElement>("prompt").addEventListener("change", (ev) => {
    void store.setPrompt((ev.target as HTMLInputElement).value);
  });
  $<HTMLInputElement>("seed").addEventListener("change", (ev) => {
    void store.setSeed(Number((ev.target as HTMLInputElement).value));
  });
  $<HTMLButtonElement>("new-seed").onclick = () => void store.newSeed();
  $<HTMLButtonElement>("do-render").onclick = async () => {
    try {
      status("rendering...");
      const ack = await store.requestRender();
      status(`rendered by ${ack.renderer} in ${ack.elapsed_ms.toFixed(0)} ms`);
    } catch (e) {
      status(`render failed: ${e instanceof Error ? e.message : e}`);
    }
  };

  $<HTMLButtonElement>("delete-selected").onclick = () => {
    const ops = [...store.selection].map((id) => ({ op: "delete" as const, id }));
    void store.applyOps(ops);
  };

  viewport.resize(canvas.clientWidth || 704, canvas.clientHeight || 512);
}

main();
