// SceneStore against an in-memory mock of the service API.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SceneStore, StoreEvent } from "../src/store.js";
import { EditOpDoc, SceneDoc } from "../src/types.js";

function makeScene(): SceneDoc {
  return {
    version: "b2w/1",
    camera: {
      fx: 70, fy: 70, cx: 31.5, cy: 31.5, width: 64, height: 64,
      pose: { rotation: [[1, 0, 0], [0, 1, 0], [0, 0, 1]], translation: [0, 0, 0] },
    },
    primitives: [
      {
        id: "a",
        halfspaces: [
          { normal: [1, 0, 0], offset: 1 }, { normal: [-1, 0, 0], offset: 1 },
          { normal: [0, 1, 0], offset: 1 }, { normal: [0, -1, 0], offset: 1 },
          { normal: [0, 0, 1], offset: 5 }, { normal: [0, 0, -1], offset: -3 },
        ],
      },
    ],
    prompt: "start",
    seed: 1,
  };
}

interface MiniService {
  fetchImpl: (url: string, init?: RequestInit) => Promise<Response>;
  state: { revision: number; scene: SceneDoc; posts: string[]; renderCalls: number };
  bumpExternally: () => void;
}

function applyOp(scene: SceneDoc, op: EditOpDoc): SceneDoc {
  const out: SceneDoc = JSON.parse(JSON.stringify(scene));
  if (op.op === "translate") {
    const prim = out.primitives.find((p) => p.id === op.id);
    if (!prim) throw new Error(`unknown id ${op.id}`);
    for (const h of prim.halfspaces) {
      h.offset += h.normal[0] * op.delta[0] + h.normal[1] * op.delta[1] + h.normal[2] * op.delta[2];
    }
  } else if (op.op === "delete") {
    out.primitives = out.primitives.filter((p) => p.id !== op.id);
  } else if (op.op === "set_prompt") {
    out.prompt = op.prompt;
  } else if (op.op === "set_seed") {
    out.seed = op.seed;
  } else if (op.op === "set_camera_pose") {
    out.camera.pose = { rotation: op.rotation, translation: op.translation };
  } else if (op.op === "add") {
    out.primitives.push(op.primitive);
  }
  return out;
}

function miniService(): MiniService {
  const state = { revision: 1, scene: makeScene(), posts: [] as string[], renderCalls: 0 };
  const json = (body: unknown, status = 200, headers: Record<string, string> = {}) =>
    new Response(JSON.stringify(body), { status, headers });
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    state.posts.push(`${init?.method ?? "GET"} ${new URL(url).pathname}`);
    if (url.endsWith("/v1/scene/s") && (!init || !init.method || init.method === "GET")) {
      return json(state.scene, 200, { ETag: String(state.revision) });
    }
    if (url.endsWith("/v1/scene/s/edit")) {
      const body = JSON.parse(String(init!.body)) as { revision: number; ops: EditOpDoc[] };
      if (body.revision !== state.revision) {
        return json({ error: { code: "edit.conflict", message: "stale revision" } }, 409);
      }
      try {
        let scene = state.scene;
        for (const op of body.ops) scene = applyOp(scene, op);
        state.scene = scene;
      } catch (e) {
        return json({ error: { code: "edit.invalid", message: String(e) } }, 400);
      }
      state.revision += 1;
      return json({ revision: state.revision, scene: state.scene, preview_png_b64: "" });
    }
    if (url.endsWith("/v1/scene/s/render")) {
      state.renderCalls += 1;
      await new Promise((r) => setTimeout(r, 20));
      return json({ image_png_b64: "aW1h", renderer: "mock", elapsed_ms: 1.0 });
    }
    return json({ error: { code: "scene.unknown", message: "?" } }, 404);
  };
  return { fetchImpl, state, bumpExternally: () => void (state.revision += 1) };
}

function makeStore(svc: MiniService): SceneStore {
  return new SceneStore(new ApiClient("http://mock", svc.fetchImpl));
}

describe("SceneStore", () => {
  it("updates the mirror only from edit acks", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    expect(store.revision).toBe(1);
    const ok = await store.applyOps([{ op: "translate", id: "a", delta: [0.5, 0, 0] }]);
    expect(ok).toBe(true);
    expect(store.revision).toBe(2);
    expect(store.scene).toEqual(svc.state.scene);
    expect(store.scene!.primitives[0].halfspaces[0].offset).toBe(1.5);
  });

  it("empty op batches never reach the server", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    const before = svc.state.posts.length;
    expect(await store.applyOps([])).toBe(false);
    expect(svc.state.posts.length).toBe(before);
  });

  it("on 409 it refetches, replays nothing, and notifies", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    svc.bumpExternally(); // another client edited
    const events: StoreEvent[] = [];
    store.subscribe((ev) => events.push(ev));
    const ok = await store.applyOps([{ op: "set_seed", seed: 99 }]);
    expect(ok).toBe(false);
    expect(store.revision).toBe(svc.state.revision);
    expect(store.scene).toEqual(svc.state.scene);
    expect(svc.state.scene.seed).toBe(1); // nothing replayed
    expect(events.some((e) => e.kind === "conflict")).toBe(true);
    const editPosts = svc.state.posts.filter((p) => p.endsWith("/edit"));
    expect(editPosts.length).toBe(1);
  });

  it("serializes gestures so each sees the latest revision", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    const [a, b] = await Promise.all([
      store.applyOps([{ op: "set_prompt", prompt: "one" }]),
      store.applyOps([{ op: "set_seed", seed: 2 }]),
    ]);
    expect(a).toBe(true);
    expect(b).toBe(true);
    expect(store.revision).toBe(3);
    expect(store.scene!.prompt).toBe("one");
    expect(store.scene!.seed).toBe(2);
  });

  it("dedups concurrent renders per endpoint", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    const [r1, r2] = await Promise.all([store.requestRender(), store.requestRender()]);
    expect(r1).toBe(r2);
    expect(svc.state.renderCalls).toBe(1);
  });

  it("drops selection for primitives an edit removed", async () => {
    const svc = miniService();
    const store = makeStore(svc);
    await store.load("s");
    store.select("a");
    expect([...store.selection]).toEqual(["a"]);
    await store.applyOps([{ op: "delete", id: "a" }]);
    expect(store.selection.size).toBe(0);
  });
});
