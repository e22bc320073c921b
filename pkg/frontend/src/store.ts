/** Client-side scene state.
 *
 * The server is the single source of truth: the mirror only changes from
 * server responses (load, edit acks, conflict refetches), never from local
 * gesture math. Every call to applyOps corresponds to exactly one user
 * gesture; edits serialize behind one another, and a revision conflict
 * refetches the scene and drops the attempted ops.
 */

import { ApiClient, ConflictError } from "./api.js";
import { EditOpDoc, RenderAck, SceneDoc } from "./types.js";

export interface StoreEvent {
  kind: "loaded" | "edited" | "conflict" | "rendered" | "error";
  message?: string;
}

export class SceneStore {
  scene: SceneDoc | null = null;
  revision = 0;
  name = "";
  selection = new Set<string>();
  lastPreviewB64: string | null = null;
  lastRender: RenderAck | null = null;

  private listeners: Array<(ev: StoreEvent) => void> = [];
  private editChain: Promise<unknown> = Promise.resolve();
  private inflight = new Map<string, Promise<unknown>>();

  constructor(public api: ApiClient) {}

  subscribe(fn: (ev: StoreEvent) => void): void {
    this.listeners.push(fn);
  }

  private emit(ev: StoreEvent): void {
    for (const fn of this.listeners) fn(ev);
  }

  /** Deduplicate concurrent calls hitting the same endpoint key. */
  private dedup<T>(key: string, run: () => Promise<T>): Promise<T> {
    const pending = this.inflight.get(key);
    if (pending) return pending as Promise<T>;
    const p = run().finally(() => this.inflight.delete(key));
    this.inflight.set(key, p);
    return p;
  }

  async load(name: string): Promise<void> {
    this.name = name;
    const { revision, scene } = await this.dedup(`get:${name}`, () => this.api.getScene(name));
    this.scene = scene;
    this.revision = revision;
    this.selection.clear();
    this.emit({ kind: "loaded" });
  }

  /** One gesture -> one edit POST; the mirror updates only from the ack. */
  applyOps(ops: EditOpDoc[]): Promise<boolean> {
    if (ops.length === 0) return Promise.resolve(false);
    const attempt = this.editChain.then(async () => {
      if (!this.scene) throw new Error("no scene loaded");
      try {
        const ack = await this.api.edit(this.name, this.revision, ops);
        this.scene = ack.scene;
        this.revision = ack.revision;
        for (const id of [...this.selection]) {
          if (!ack.scene.primitives.some((p) => p.id === id)) this.selection.delete(id);
        }
        this.lastPreviewB64 = ack.preview_png_b64;
        this.emit({ kind: "edited" });
        return true;
      } catch (e) {
        if (e instanceof ConflictError) {
          // someone else moved the scene: resync, replay nothing
          const { revision, scene } = await this.api.getScene(this.name);
          this.scene = scene;
          this.revision = revision;
          this.emit({ kind: "conflict", message: e.message });
          return false;
        }
        this.emit({ kind: "error", message: e instanceof Error ? e.message : String(e) });
        throw e;
      }
    });
    this.editChain = attempt.catch(() => undefined);
    return attempt;
  }

  setPrompt(prompt: string): Promise<boolean> {
    return this.applyOps([{ op: "set_prompt", prompt }]);
  }

  setSeed(seed: number): Promise<boolean> {
    return this.applyOps([{ op: "set_seed", seed }]);
  }

  newSeed(): Promise<boolean> {
    return this.setSeed(Math.floor(Math.random() * 2 ** 31));
  }

  select(id: string | null, additive = false): void {
    if (!additive) this.selection.clear();
    if (id !== null && this.scene?.primitives.some((p) => p.id === id)) {
      this.selection.add(id);
    }
  }

  /** Render with the scene's current prompt/seed (the mirror's values). */
  requestRender(): Promise<RenderAck> {
    return this.dedup(`render:${this.name}`, async () => {
      const ack = await this.api.render(this.name);
      this.lastRender = ack;
      this.emit({ kind: "rendered" });
      return ack;
    });
  }
}
