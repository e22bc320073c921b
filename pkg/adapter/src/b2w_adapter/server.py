"""The adapter HTTP service: bit-compatible with the stub's wire protocol."""

from __future__ import annotations

import collections
import threading
import time

import numpy as np
from fastapi import FastAPI, Request, Response
from starlette.concurrency import run_in_threadpool

from b2w.bridge import (
    PROTOCOL_VERSION,
    ProtocolError,
    RenderResult,
    decode_request,
    encode_error,
    encode_result,
)

from .config import AdapterConfig


class FifoGate:
    """Serializes inference FIFO with a bounded waiting line."""

    def __init__(self, max_waiting: int):
        self._cv = threading.Condition()
        self._line: collections.deque = collections.deque()
        self._busy = False
        self._max = max_waiting

    def acquire(self) -> bool:
        ticket = object()
        with self._cv:
            if len(self._line) >= self._max + 1:
                return False
            self._line.append(ticket)
            self._cv.wait_for(lambda: self._line[0] is ticket and not self._busy)
            self._line.popleft()
            self._busy = True
            return True

    def release(self) -> None:
        with self._cv:
            self._busy = False
            self._cv.notify_all()


def depth_to_condition(values: np.ndarray, mode: str) -> np.ndarray:
    """Metric depth raster to a 3-channel uint8 conditioning image."""
    if mode != "inverse_minmax":
        raise ValueError(f"unknown normalization {mode!r}")
    finite = np.isfinite(values)
    lum = np.zeros(values.shape)
    if np.any(finite):
        inv = np.zeros(values.shape)
        inv[finite] = 1.0 / values[finite]
        lo, hi = inv[finite].min(), inv[finite].max()
        lum[finite] = (inv[finite] - lo) / (hi - lo) if hi > lo else 1.0
    gray = np.rint(lum * 255.0).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def create_adapter_app(config: AdapterConfig, backend=None) -> FastAPI:
    """Wire protocol front for a render backend (loads diffusers when None)."""
    if backend is None:
        from .backends import load_backend

        backend = load_backend(config)
    gate = FifoGate(config.queue_size)
    app = FastAPI(title="b2w renderer adapter")

    @app.post("/v1/render")
    async def render_endpoint(request: Request):
        data = await request.body()
        # inference and the queue gate block; keep them off the event loop
        return await run_in_threadpool(_render_blocking, data)

    def _render_blocking(data: bytes) -> Response:
        try:
            req = decode_request(data)
        except ProtocolError as e:
            return Response(
                content=encode_error("protocol", str(e)),
                media_type="application/json",
                status_code=400,
            )
        hints = req.hints or {}
        steps = int(hints.get("steps", config.steps))
        guidance = float(hints.get("guidance", config.guidance))
        condition = depth_to_condition(req.depth.values, config.normalization)
        badge_image = req.badge.image if req.badge is not None else None
        badge_mask = req.badge.mask if req.badge is not None else None
        if not gate.acquire():
            return Response(
                content=encode_error("busy", "render queue is full"),
                media_type="application/json",
                status_code=503,
            )
        try:
            t0 = time.perf_counter()
            image = backend.render(
                req.prompt, req.seed, condition, badge_image, badge_mask, steps, guidance
            )
            elapsed = (time.perf_counter() - t0) * 1000.0
        except Exception as e:
            return Response(
                content=encode_error("renderer", f"{type(e).__name__}: {e}"),
                media_type="application/json",
                status_code=500,
            )
        finally:
            gate.release()
        result = RenderResult(image=np.asarray(image, dtype=np.uint8), renderer=backend.identity, elapsed_ms=elapsed)
        return Response(content=encode_result(result), media_type="application/json")

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "renderer": backend.identity,
            "model": config.model_id,
            "version": PROTOCOL_VERSION,
        }

    return app


def serve_adapter(config: AdapterConfig, port: int, host: str = "127.0.0.1", backend=None) -> None:
    import uvicorn

    app = create_adapter_app(config, backend=backend)
    uvicorn.run(app, host=host, port=port, log_level="warning")
