/** HTTP client for the scene service (docs/api.md). */

import { EditAck, EditOpDoc, RenderAck, SceneDoc } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, "edit.conflict", message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseFor(resp: Response): Promise<never> {
  let code = "unknown";
  let message = `${resp.status}`;
  try {
    const body = (await resp.json()) as { error?: { code?: string; message?: string } };
    code = body.error?.code ?? code;
    message = body.error?.message ?? message;
  } catch {
    /* non-JSON error body */
  }
  if (resp.status === 409) throw new ConflictError(message);
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async health(): Promise<{ status: string; renderer: string; scenes: string[] }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/health`);
    if (!resp.ok) await raiseFor(resp);
    return resp.json();
  }

  async getScene(name: string): Promise<{ revision: number; scene: SceneDoc }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/scene/${name}`);
    if (!resp.ok) await raiseFor(resp);
    const revision = Number(resp.headers.get("ETag") ?? "0");
    return { revision, scene: (await resp.json()) as SceneDoc };
  }

  async putScene(name: string, document: string): Promise<number> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/scene/${name}`, {
      method: "PUT",
      body: document,
    });
    if (!resp.ok) await raiseFor(resp);
    return ((await resp.json()) as { revision: number }).revision;
  }

  /** Throws ConflictError on a stale revision. */
  async edit(name: string, revision: number, ops: EditOpDoc[]): Promise<EditAck> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/scene/${name}/edit`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ revision, ops }),
    });
    if (!resp.ok) await raiseFor(resp);
    return (await resp.json()) as EditAck;
  }

  async render(
    name: string,
    overrides: { prompt?: string; seed?: number } = {},
  ): Promise<RenderAck> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1/scene/${name}/render`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(overrides),
    });
    if (!resp.ok) await raiseFor(resp);
    return (await resp.json()) as RenderAck;
  }

  depthPreviewUrl(name: string): string {
    return `${this.baseUrl}/v1/scene/${name}/depth.png`;
  }
}
