"""Adapter configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class AdapterConfig:
    model_id: str = "lllyasviel/control_v11f1p_sd15_depth"
    base_model_id: str = "runwayml/stable-diffusion-v1-5"
    device: str = "cuda"
    steps: int = 30
    guidance: float = 9.0
    # metric depth -> conditioning image; "inverse_minmax" maps 1/z to [0,1]
    # per image with no-hit pixels at 0 (farthest)
    normalization: str = "inverse_minmax"
    queue_size: int = 8

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.queue_size < 0:
            raise ValueError("queue_size must be >= 0")
        if self.normalization not in ("inverse_minmax",):
            raise ValueError(f"unknown normalization {self.normalization!r}")


def load_config(path) -> AdapterConfig:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    known = {f.name for f in fields(AdapterConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"adapter config: unknown field(s) {sorted(unknown)}")
    return AdapterConfig(**doc)
