"""Renderer-protocol conformance checks, runnable against any live endpoint.

Any server claiming to speak POST /v1/render can be validated with
run_render_conformance(base_url); the stub server and external adapters run
the identical checks.
"""

from __future__ import annotations

import base64
import json

import numpy as np
import requests

from .bridge import (
    PROTOCOL_VERSION,
    RenderRequest,
    RenderServerError,
    decode_result,
    encode_request,
    render_remote,
)
from .core import DepthMap
from .edit import TextureBadge


def conformance_request(seed: int) -> RenderRequest:
    """Deterministic randomized request: varied sizes, infinities, badges, hints."""
    rng = np.random.default_rng(seed)
    w = int(rng.integers(1, 17))
    h = int(rng.integers(1, 17))
    values = rng.uniform(0.2, 50.0, size=(h, w)).astype(np.float32).astype(np.float64)
    values[rng.random((h, w)) < 0.2] = np.inf
    badge = None
    if rng.random() < 0.5:
        badge = TextureBadge(
            image=rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8).astype(np.uint8),
            mask=rng.random((h, w)) < 0.3,
        )
    hints = {"steps": int(rng.integers(1, 8))} if rng.random() < 0.5 else None
    prompt = "".join(rng.choice(list("abc xyz"), size=rng.integers(0, 10)))
    return RenderRequest(
        prompt=prompt,
        seed=int(rng.integers(0, 2**32)),
        width=w,
        height=h,
        depth=DepthMap(width=w, height=h, values=values),
        badge=badge,
        hints=hints,
    )


def run_render_conformance(base_url: str, cases: int = 50, timeout: float = 120.0) -> dict:
    """Exercise a render endpoint; raises AssertionError on the first violation.

    Checks: valid requests yield decodable results with matching image size
    and the protocol version; a fixed seed is answered identically twice;
    malformed envelopes (bad version, unknown field, missing field, corrupt
    depth payload, mismatched dimensions) are rejected as protocol errors,
    not crashes.
    """
    rendered = 0
    for seed in range(cases):
        req = conformance_request(seed)
        res = render_remote(base_url, req, timeout=timeout, retries=0)
        assert res.image.shape == (req.height, req.width, 3), (
            f"case {seed}: image {res.image.shape} != request {req.height}x{req.width}"
        )
        rendered += 1

    fixed = conformance_request(1)
    first = render_remote(base_url, fixed, timeout=timeout, retries=0)
    second = render_remote(base_url, fixed, timeout=timeout, retries=0)
    assert np.array_equal(first.image, second.image), "same request rendered differently twice"

    doc = json.loads(encode_request(conformance_request(2)))
    mutations = {
        "bad-version": lambda d: d.update(version="b2w/999"),
        "unknown-field": lambda d: d.update(surprise=1),
        "missing-field": lambda d: d.pop("seed"),
        "corrupt-depth": lambda d: d.update(
            depth_b64=base64.b64encode(base64.b64decode(d["depth_b64"])[:-4]).decode()
        ),
        "dim-mismatch": lambda d: d.update(width=d["width"] + 1),
    }
    rejected = []
    url = base_url.rstrip("/") + "/v1/render"
    for name, mutate in mutations.items():
        broken = json.loads(json.dumps(doc))
        mutate(broken)
        resp = requests.post(url, data=json.dumps(broken).encode(), timeout=timeout)
        assert 400 <= resp.status_code < 500, f"{name}: expected a 4xx, got {resp.status_code}"
        try:
            decode_result(resp.content)
            raise AssertionError(f"{name}: error body did not decode as a protocol error")
        except RenderServerError:
            rejected.append(name)

    health = requests.get(base_url.rstrip("/") + "/v1/health", timeout=timeout).json()
    assert health.get("version") == PROTOCOL_VERSION, f"health version {health!r}"
    return {"rendered": rendered, "rejected": rejected, "renderer": first.renderer}
