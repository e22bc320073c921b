"""Wire protocol to the statistical renderer, plus a deterministic stub.

Requests travel as a versioned JSON envelope over HTTP POST /v1/render:
{version:"b2w/1", prompt, seed, width, height, depth_b64, badge_image_b64?,
badge_mask_b64?, hints?}. The depth raster is the B2WD binary format,
base64-embedded; images are PNG. Responses carry
{version, image_png_b64, renderer, elapsed_ms} or {error:{code, message}}.

The stub renderer is a pure function of the request, so the whole pipeline
can run and be tested end to end with no ML stack behind it.
"""

from __future__ import annotations

import base64
import binascii
import colorsys
import hashlib
import json
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import requests as _requests
from fastapi import FastAPI, Request, Response

from .core import DepthMap
from .edit import TextureBadge
from .io import (
    b2wd_to_depth,
    depth_to_b2wd,
    image_to_png_bytes,
    mask_to_png_bytes,
    png_bytes_to_image,
    png_bytes_to_mask,
)

PROTOCOL_VERSION = "b2w/1"
RENDER_PATH = "/v1/render"
ENV_RENDERER_URL = "B2W_RENDERER_URL"
STUB_IDENTITY = "b2w-stub/1"


class ProtocolError(ValueError):
    """Malformed or version-incompatible protocol envelope."""


class RenderTransportError(RuntimeError):
    """The renderer endpoint could not be reached."""


class RenderTimeoutError(RenderTransportError):
    """The renderer did not answer within the timeout."""


class RenderServerError(RuntimeError):
    """The renderer answered with a structured failure."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


@dataclass(frozen=True)
class RenderRequest:
    prompt: str
    seed: int
    width: int
    height: int
    depth: DepthMap
    badge: Optional[TextureBadge] = None
    hints: Optional[dict] = None

    def __post_init__(self):
        if not isinstance(self.prompt, str):
            raise ProtocolError("prompt must be a string")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ProtocolError("seed must be a non-negative integer")
        if (self.depth.width, self.depth.height) != (self.width, self.height):
            raise ProtocolError(
                f"depth raster {self.depth.width}x{self.depth.height} does not match "
                f"request size {self.width}x{self.height}"
            )
        if self.badge is not None and self.badge.image.shape[:2] != (self.height, self.width):
            raise ProtocolError("badge rasters do not match the request size")
        if self.hints is not None and not isinstance(self.hints, dict):
            raise ProtocolError("hints must be a JSON object")


@dataclass(frozen=True)
class RenderResult:
    image: np.ndarray  # (H,W,3) uint8
    renderer: str
    elapsed_ms: float

    def __post_init__(self):
        img = np.asarray(self.image)
        if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
            raise ProtocolError("result image must be (H,W,3) uint8")
        object.__setattr__(self, "image", img)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(doc: dict, key: str) -> bytes:
    v = doc[key]
    if not isinstance(v, str):
        raise ProtocolError(f"{key}: expected a base64 string")
    try:
        return base64.b64decode(v, validate=True)
    except (binascii.Error, ValueError) as e:
        raise ProtocolError(f"{key}: invalid base64 ({e})") from e


def encode_request(req: RenderRequest) -> bytes:
    doc = {
        "version": PROTOCOL_VERSION,
        "prompt": req.prompt,
        "seed": req.seed,
        "width": req.width,
        "height": req.height,
        "depth_b64": _b64(depth_to_b2wd(req.depth)),
    }
    if req.badge is not None:
        doc["badge_image_b64"] = _b64(image_to_png_bytes(req.badge.image))
        doc["badge_mask_b64"] = _b64(mask_to_png_bytes(req.badge.mask))
    if req.hints is not None:
        doc["hints"] = req.hints
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


_REQUIRED_REQ = {"version", "prompt", "seed", "width", "height", "depth_b64"}
_OPTIONAL_REQ = {"badge_image_b64", "badge_mask_b64", "hints"}


def decode_request(data: bytes) -> RenderRequest:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"request envelope is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ProtocolError("request envelope must be a JSON object")
    unknown = set(doc) - _REQUIRED_REQ - _OPTIONAL_REQ
    if unknown:
        raise ProtocolError(f"request envelope: unknown field(s) {sorted(unknown)}")
    missing = _REQUIRED_REQ - set(doc)
    if missing:
        raise ProtocolError(f"request envelope: missing field(s) {sorted(missing)}")
    if doc["version"] != PROTOCOL_VERSION:
        raise ProtocolError(f"version: expected {PROTOCOL_VERSION!r}, got {doc['version']!r}")
    for key in ("seed", "width", "height"):
        if isinstance(doc[key], bool) or not isinstance(doc[key], int):
            raise ProtocolError(f"{key}: expected an integer")
    if not isinstance(doc["prompt"], str):
        raise ProtocolError("prompt: expected a string")
    try:
        depth = b2wd_to_depth(_unb64(doc, "depth_b64"))
    except ValueError as e:
        raise ProtocolError(f"depth_b64: {e}") from e
    badge = None
    if ("badge_image_b64" in doc) != ("badge_mask_b64" in doc):
        raise ProtocolError("badge_image_b64 and badge_mask_b64 must come together")
    if "badge_image_b64" in doc:
        try:
            image = png_bytes_to_image(_unb64(doc, "badge_image_b64"))
            mask = png_bytes_to_mask(_unb64(doc, "badge_mask_b64"))
        except ProtocolError:
            raise
        except Exception as e:
            raise ProtocolError(f"badge rasters: {e}") from e
        if image.shape[:2] != mask.shape:
            raise ProtocolError("badge image and mask sizes differ")
        badge = TextureBadge(image=image, mask=mask)
    hints = doc.get("hints")
    if hints is not None and not isinstance(hints, dict):
        raise ProtocolError("hints: expected a JSON object")
    try:
        return RenderRequest(
            prompt=doc["prompt"],
            seed=doc["seed"],
            width=doc["width"],
            height=doc["height"],
            depth=depth,
            badge=badge,
            hints=hints,
        )
    except ProtocolError:
        raise
    except ValueError as e:
        raise ProtocolError(str(e)) from e


def encode_result(res: RenderResult) -> bytes:
    doc = {
        "version": PROTOCOL_VERSION,
        "image_png_b64": _b64(image_to_png_bytes(res.image)),
        "renderer": res.renderer,
        "elapsed_ms": res.elapsed_ms,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_error(code: str, message: str) -> bytes:
    return json.dumps({"error": {"code": code, "message": message}}, sort_keys=True).encode("utf-8")


def decode_result(data: bytes) -> RenderResult:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"result envelope is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ProtocolError("result envelope must be a JSON object")
    if "error" in doc:
        err = doc["error"]
        if not isinstance(err, dict) or "code" not in err or "message" not in err:
            raise ProtocolError("error envelope must carry code and message")
        raise RenderServerError(str(err["code"]), str(err["message"]))
    expected = {"version", "image_png_b64", "renderer", "elapsed_ms"}
    unknown = set(doc) - expected
    if unknown:
        raise ProtocolError(f"result envelope: unknown field(s) {sorted(unknown)}")
    missing = expected - set(doc)
    if missing:
        raise ProtocolError(f"result envelope: missing field(s) {sorted(missing)}")
    if doc["version"] != PROTOCOL_VERSION:
        raise ProtocolError(f"version: expected {PROTOCOL_VERSION!r}, got {doc['version']!r}")
    image = png_bytes_to_image(_unb64(doc, "image_png_b64"))
    if isinstance(doc["elapsed_ms"], bool) or not isinstance(doc["elapsed_ms"], (int, float)):
        raise ProtocolError("elapsed_ms: expected a number")
    return RenderResult(image=image, renderer=str(doc["renderer"]), elapsed_ms=float(doc["elapsed_ms"]))


# --- deterministic stub renderer ------------------------------------------------


def _prompt_seed_hue(prompt: str, seed: int) -> float:
    digest = hashlib.sha256(prompt.encode("utf-8") + b"\x00" + str(seed).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def stub_render(req: RenderRequest) -> RenderResult:
    """Pure stand-in for the statistical renderer.

    Normalized inverse depth becomes luminance (nearer = brighter), the hue is
    hashed from (prompt, seed), and pixels outside the badge mask are copied
    from the badge image verbatim, so the edit-locality contract a real
    renderer approximates is checkable end to end.
    """
    t0 = time.perf_counter()
    values = req.depth.values
    finite = np.isfinite(values)
    lum = np.zeros(values.shape)
    if np.any(finite):
        inv = np.zeros(values.shape)
        inv[finite] = 1.0 / values[finite]
        lo, hi = inv[finite].min(), inv[finite].max()
        if hi > lo:
            lum[finite] = (inv[finite] - lo) / (hi - lo)
        else:
            lum[finite] = 1.0
    base = np.array(colorsys.hsv_to_rgb(_prompt_seed_hue(req.prompt, req.seed), 0.6, 1.0))
    image = np.rint(lum[:, :, None] * base[None, None, :] * 255.0).astype(np.uint8)
    if req.badge is not None:
        keep = ~req.badge.mask
        image[keep] = req.badge.image[keep]
    elapsed = (time.perf_counter() - t0) * 1000.0
    return RenderResult(image=image, renderer=STUB_IDENTITY, elapsed_ms=elapsed)


# --- HTTP client ------------------------------------------------------------------


def _render_url(endpoint: str) -> str:
    endpoint = endpoint.rstrip("/")
    if endpoint.endswith(RENDER_PATH):
        return endpoint
    return endpoint + RENDER_PATH


def render_remote(endpoint: str, req: RenderRequest, timeout: float = 60.0, retries: int = 2) -> RenderResult:
    """POST the encoded request; retry transport failures with identical bytes.

    Protocol and renderer-reported failures are not retried. Renderer-side
    determinism for a fixed seed is the renderer's contract, not checked here.
    """
    body = encode_request(req)
    url = _render_url(endpoint)
    last: Exception = RenderTransportError("no attempt made")
    for _ in range(max(1, retries + 1)):
        try:
            resp = _requests.post(
                url, data=body, headers={"Content-Type": "application/json"}, timeout=timeout
            )
        except _requests.Timeout as e:
            last = RenderTimeoutError(f"renderer did not answer within {timeout}s: {e}")
            continue
        except _requests.RequestException as e:
            last = RenderTransportError(f"cannot reach renderer at {url}: {e}")
            continue
        return decode_result(resp.content)
    raise last


# --- stub HTTP server --------------------------------------------------------------


def create_stub_app():
    """FastAPI app exposing the stub renderer behind the wire protocol."""
    app = FastAPI(title="b2w stub renderer")

    @app.post(RENDER_PATH)
    async def render(request: Request):
        body = await request.body()
        try:
            req = decode_request(body)
        except ProtocolError as e:
            return Response(content=encode_error("protocol", str(e)), media_type="application/json", status_code=400)
        result = stub_render(req)
        return Response(content=encode_result(result), media_type="application/json")

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "renderer": STUB_IDENTITY, "version": PROTOCOL_VERSION}

    return app
