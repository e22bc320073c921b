"""Render backends: a diffusers-based ControlNet pipeline and a test fake.

A backend renders one image from (prompt, seed, conditioning image, optional
badge). Seed determinism is honored where the underlying framework allows.
"""

from __future__ import annotations

import hashlib
import time
from typing import Optional

import numpy as np

from .config import AdapterConfig


class FakeBackend:
    """Deterministic stand-in used by tests and dry runs.

    Mixes seeded noise with the conditioning luminance and copies
    badge-unmasked pixels through, mimicking an inpainting renderer.
    """

    def __init__(self, delay_s: float = 0.0):
        self.identity = "b2w-adapter-fake/1"
        self.delay_s = delay_s

    def render(
        self,
        prompt: str,
        seed: int,
        condition: np.ndarray,
        badge_image: Optional[np.ndarray],
        badge_mask: Optional[np.ndarray],
        steps: int,
        guidance: float,
    ) -> np.ndarray:
        if self.delay_s:
            time.sleep(self.delay_s)
        digest = hashlib.sha256(f"{prompt}\x00{seed}\x00{steps}\x00{guidance}".encode()).digest()
        rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
        noise = rng.integers(0, 256, size=condition.shape, dtype=np.uint8)
        out = ((condition.astype(np.uint16) + noise) // 2).astype(np.uint8)
        if badge_image is not None and badge_mask is not None:
            keep = ~badge_mask
            out[keep] = badge_image[keep]
        return out


class DiffusersBackend:
    """StableDiffusion + depth ControlNet behind the adapter contract.

    Loading happens at construction so a bad model id fails at startup, not
    on the first request. Outputs differ from any specific published model:
    this adapter accepts whatever pretrained depth-conditioned checkpoint the
    config names.
    """

    def __init__(self, config: AdapterConfig):
        import torch
        from diffusers import ControlNetModel, StableDiffusionControlNetPipeline

        self._torch = torch
        dtype = torch.float16 if config.device.startswith("cuda") else torch.float32
        controlnet = ControlNetModel.from_pretrained(config.model_id, torch_dtype=dtype)
        self._pipe = StableDiffusionControlNetPipeline.from_pretrained(
            config.base_model_id, controlnet=controlnet, torch_dtype=dtype
        )
        self._pipe.to(config.device)
        self._device = config.device
        self.identity = f"b2w-adapter-diffusers/{config.model_id}"

    def render(self, prompt, seed, condition, badge_image, badge_mask, steps, guidance):
        from PIL import Image

        torch = self._torch
        h, w = condition.shape[:2]
        # diffusion UNets want multiples of 8; render there and resize back
        w8, h8 = max(8, (w // 8) * 8), max(8, (h // 8) * 8)
        cond_img = Image.fromarray(condition).resize((w8, h8), Image.BILINEAR)
        generator = torch.Generator(device=self._device).manual_seed(seed)
        result = self._pipe(
            prompt,
            image=cond_img,
            num_inference_steps=steps,
            guidance_scale=guidance,
            generator=generator,
        ).images[0]
        out = np.asarray(result.resize((w, h), Image.BILINEAR), dtype=np.uint8)
        if badge_image is not None and badge_mask is not None:
            keep = ~badge_mask
            out = out.copy()
            out[keep] = badge_image[keep]
        return out


def load_backend(config: AdapterConfig):
    return DiffusersBackend(config)
