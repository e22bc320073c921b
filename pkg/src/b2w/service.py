"""HTTP service for live scene authoring (the backend the browser UI drives).

Scene state lives in a directory of JSON files, one per scene, each holding
{"revision": n, "scene": {...}}. Every accepted edit is written to disk with
an atomic replace *before* the response goes out, so an acknowledged revision
survives a crash. Concurrent edits are serialized per scene and checked
against the revision the client edited; a mismatch answers 409.

Endpoints are frozen in docs/api.md: GET/PUT /v1/scene/{name},
POST /v1/scene/{name}/edit, GET /v1/scene/{name}/depth.png,
POST /v1/scene/{name}/render, GET /v1/health.
"""

from __future__ import annotations

import base64
import io as _stdio
import json
import os
import re
import tempfile
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool
from PIL import Image

from . import bridge
from .core import DEFAULT_BUDGET, Scene, SceneError, GeometryError
from .edit import apply_edit, op_from_doc
from .io import DocumentError, canonical_json, dumps_scene, image_to_png_bytes, loads_scene, scene_to_doc
from .raytrace import render_depth, scale_camera

_NAME_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")
PREVIEW_SCALE = 2  # previews render at half resolution for UI latency


class RevisionConflict(Exception):
    def __init__(self, expected: int, got: int):
        super().__init__(f"scene revision is {expected}, client edited {got}")
        self.expected = expected
        self.got = got


class UnknownScene(KeyError):
    pass


def _check_name(name: str) -> str:
    if not _NAME_RE.match(name):
        raise DocumentError(f"invalid scene name {name!r} (use [A-Za-z0-9_-], max 64 chars)")
    return name


class SceneStore:
    """Disk-backed scene map with optimistic revision control.

    All mutation happens under a per-scene lock; the store file is written
    and fsynced before the new revision is visible to callers (write-then-ack).
    """

    def __init__(self, scene_dir, budget: int = DEFAULT_BUDGET):
        self._dir = Path(scene_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._budget = budget
        self._mutex = threading.Lock()
        self._locks: dict = {}
        self._scenes: dict = {}  # name -> (revision, Scene, doc text)
        for path in sorted(self._dir.glob("*.json")):
            name = path.stem
            if not _NAME_RE.match(name):
                continue
            doc = json.loads(path.read_text(encoding="utf-8"))
            scene = loads_scene(canonical_json(doc["scene"]), budget=budget)
            self._scenes[name] = (int(doc["revision"]), scene, dumps_scene(scene))

    def _lock_for(self, name: str) -> threading.Lock:
        with self._mutex:
            if name not in self._locks:
                self._locks[name] = threading.Lock()
            return self._locks[name]

    def names(self) -> list:
        with self._mutex:
            return sorted(self._scenes)

    def get(self, name: str):
        _check_name(name)
        with self._mutex:
            if name not in self._scenes:
                raise UnknownScene(name)
            return self._scenes[name]

    def _persist(self, name: str, revision: int, scene: Scene) -> str:
        text = dumps_scene(scene)
        wrapper = canonical_json({"revision": revision, "scene": scene_to_doc(scene)})
        final = self._dir / f"{name}.json"
        fd, tmp = tempfile.mkstemp(dir=self._dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                f.write(wrapper)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        with self._mutex:
            self._scenes[name] = (revision, scene, text)
        return text

    def put(self, name: str, document: str) -> int:
        _check_name(name)
        scene = loads_scene(document, budget=self._budget)
        with self._lock_for(name):
            with self._mutex:
                revision = self._scenes[name][0] + 1 if name in self._scenes else 1
            self._persist(name, revision, scene)
        return revision

    def edit(self, name: str, base_revision: int, ops: list):
        _check_name(name)
        with self._lock_for(name):
            with self._mutex:
                if name not in self._scenes:
                    raise UnknownScene(name)
                revision, scene, _ = self._scenes[name]
            if base_revision != revision:
                raise RevisionConflict(revision, base_revision)
            for op in ops:
                scene = apply_edit(scene, op)
            new_revision = revision + 1
            text = self._persist(name, new_revision, scene)
        return new_revision, scene, text


def depth_preview_png(scene: Scene, scale: int = PREVIEW_SCALE) -> bytes:
    """8-bit grayscale preview: normalized inverse depth, nearer = brighter."""
    preview_scene = Scene(
        scene.primitives,
        scale_camera(scene.camera, scale),
        scene.prompt,
        scene.seed,
        scene.budget,
    )
    depth, _ = render_depth(preview_scene)
    values = depth.values
    finite = np.isfinite(values)
    lum = np.zeros(values.shape)
    if np.any(finite):
        inv = np.zeros(values.shape)
        inv[finite] = 1.0 / values[finite]
        lo, hi = inv[finite].min(), inv[finite].max()
        lum[finite] = (inv[finite] - lo) / (hi - lo) if hi > lo else 1.0
    img = Image.fromarray(np.rint(lum * 255.0).astype(np.uint8), mode="L")
    buf = _stdio.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def create_service_app(scene_dir, renderer: str = "stub", budget: int = DEFAULT_BUDGET):
    """FastAPI app over a SceneStore; `renderer` is "stub" or a base URL."""
    store = SceneStore(scene_dir, budget=budget)
    app = FastAPI(title="b2w scene service")
    app.state.store = store

    def _error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "renderer": renderer, "version": bridge.PROTOCOL_VERSION, "scenes": store.names()}

    @app.get("/v1/scene/{name}")
    def get_scene(name: str):
        try:
            revision, _, text = store.get(name)
        except UnknownScene:
            return _error(404, "scene.unknown", f"no scene named {name!r}")
        except DocumentError as e:
            return _error(400, "scene.name", str(e))
        return Response(content=text, media_type="application/json", headers={"ETag": str(revision)})

    @app.put("/v1/scene/{name}")
    async def put_scene(name: str, request: Request):
        body = await request.body()

        def work():
            try:
                revision = store.put(name, body.decode("utf-8"))
            except (DocumentError, SceneError, GeometryError, UnicodeDecodeError) as e:
                return _error(400, "scene.invalid", str(e))
            return JSONResponse({"revision": revision})

        return await run_in_threadpool(work)

    @app.post("/v1/scene/{name}/edit")
    async def edit_scene(name: str, request: Request):
        try:
            doc = await request.json()
        except Exception as e:
            return _error(400, "edit.body", f"edit body is not valid JSON: {e}")
        if not isinstance(doc, dict) or "revision" not in doc or "ops" not in doc:
            return _error(400, "edit.body", "edit body must carry 'revision' and 'ops'")
        if isinstance(doc["revision"], bool) or not isinstance(doc["revision"], int):
            return _error(400, "edit.body", "revision must be an integer")
        if not isinstance(doc["ops"], list):
            return _error(400, "edit.body", "ops must be a list")
        try:
            ops = [op_from_doc(o) for o in doc["ops"]]
        except (DocumentError, SceneError, GeometryError, ValueError) as e:
            return _error(400, "edit.op", str(e))

        def work():
            try:
                revision, scene, text = store.edit(name, doc["revision"], ops)
            except UnknownScene:
                return _error(404, "scene.unknown", f"no scene named {name!r}")
            except RevisionConflict as e:
                return _error(409, "edit.conflict", str(e))
            except (SceneError, GeometryError, DocumentError) as e:
                return _error(400, "edit.invalid", str(e))
            preview = depth_preview_png(scene)
            return JSONResponse(
                {
                    "revision": revision,
                    "scene": json.loads(text),
                    "preview_png_b64": base64.b64encode(preview).decode("ascii"),
                }
            )

        return await run_in_threadpool(work)

    @app.get("/v1/scene/{name}/depth.png")
    def scene_depth(name: str):
        try:
            _, scene, _ = store.get(name)
        except UnknownScene:
            return _error(404, "scene.unknown", f"no scene named {name!r}")
        except DocumentError as e:
            return _error(400, "scene.name", str(e))
        return Response(content=depth_preview_png(scene), media_type="image/png")

    @app.post("/v1/scene/{name}/render")
    async def render_scene(name: str, request: Request):
        try:
            _, scene, _ = store.get(name)
        except UnknownScene:
            return _error(404, "scene.unknown", f"no scene named {name!r}")
        except DocumentError as e:
            return _error(400, "scene.name", str(e))
        overrides = {}
        body = await request.body()
        if body:
            try:
                overrides = json.loads(body)
            except json.JSONDecodeError as e:
                return _error(400, "render.body", f"render body is not valid JSON: {e}")
            if not isinstance(overrides, dict) or set(overrides) - {"prompt", "seed", "hints"}:
                return _error(400, "render.body", "render body allows only prompt, seed, hints")
        prompt = overrides.get("prompt", scene.prompt)
        seed = overrides.get("seed", scene.seed)
        if not isinstance(prompt, str) or isinstance(seed, bool) or not isinstance(seed, int):
            return _error(400, "render.body", "prompt must be a string and seed an integer")

        def work():
            depth, _ = render_depth(scene)
            try:
                req = bridge.RenderRequest(
                    prompt=prompt,
                    seed=seed,
                    width=scene.camera.width,
                    height=scene.camera.height,
                    depth=depth,
                    hints=overrides.get("hints"),
                )
                if renderer == "stub":
                    result = bridge.stub_render(req)
                else:
                    result = bridge.render_remote(renderer, req)
            except (bridge.ProtocolError, bridge.RenderTransportError, bridge.RenderServerError) as e:
                return _error(502, "render.upstream", str(e))
            return JSONResponse(
                {
                    "image_png_b64": base64.b64encode(image_to_png_bytes(result.image)).decode("ascii"),
                    "renderer": result.renderer,
                    "elapsed_ms": result.elapsed_ms,
                }
            )

        return await run_in_threadpool(work)

    return app
