"""Canonical scene documents and raster file formats.

Scene documents are UTF-8 JSON with sorted keys, two-space indent and
shortest round-trippable float literals, so serialize -> parse -> serialize
is byte-identical. Depth rasters travel either as "B2WD" binary (little-endian
float32 with a 16-byte header) or as 16-bit grayscale PNG in millimeters.
Exact field names are frozen in docs/formats.md.
"""

from __future__ import annotations

import io as _stdio
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    Camera,
    ConvexPrimitive,
    DepthMap,
    Halfspace,
    IdBuffer,
    Pose,
    Scene,
    DEFAULT_BUDGET,
)

FORMAT_VERSION = "b2w/1"
B2WD_MAGIC = b"B2WD"


class DocumentError(ValueError):
    """Malformed scene/config document."""


class VersionError(DocumentError):
    """Document carries a version tag this toolkit does not speak."""


class RasterFormatError(ValueError):
    """Malformed binary raster or raster image file."""


def canonical_json(obj) -> str:
    """Canonical text form: sorted keys, 2-space indent, shortest floats."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


# --- strict field access -------------------------------------------------

def _check_keys(obj: dict, allowed: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise DocumentError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed - optional
    if unknown:
        raise DocumentError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise DocumentError(f"{where}: missing field(s) {sorted(missing)}")


def _num(obj: dict, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DocumentError(f"{where}.{key}: expected a number")
    return float(v)


def _int(obj: dict, key: str, where: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"{where}.{key}: expected an integer")
    return v


def _str(obj: dict, key: str, where: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise DocumentError(f"{where}.{key}: expected a string")
    return v


def _vec(v, n: int, where: str) -> list:
    if not isinstance(v, list) or len(v) != n:
        raise DocumentError(f"{where}: expected a list of {n} numbers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise DocumentError(f"{where}: expected a list of {n} numbers")
        out.append(float(x))
    return out


# --- scene documents ------------------------------------------------------

def camera_to_doc(cam: Camera) -> dict:
    return {
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "width": cam.width,
        "height": cam.height,
        "pose": {
            "rotation": [[float(x) for x in row] for row in cam.pose.rotation],
            "translation": [float(x) for x in cam.pose.translation],
        },
    }


def doc_to_camera(doc: dict, where: str = "camera") -> Camera:
    _check_keys(doc, {"fx", "fy", "cx", "cy", "width", "height", "pose"}, set(), where)
    pose = doc["pose"]
    _check_keys(pose, {"rotation", "translation"}, set(), f"{where}.pose")
    rot = pose["rotation"]
    if not isinstance(rot, list) or len(rot) != 3:
        raise DocumentError(f"{where}.pose.rotation: expected 3 rows of 3 numbers")
    rows = [_vec(r, 3, f"{where}.pose.rotation[{i}]") for i, r in enumerate(rot)]
    return Camera(
        fx=_num(doc, "fx", where),
        fy=_num(doc, "fy", where),
        cx=_num(doc, "cx", where),
        cy=_num(doc, "cy", where),
        width=_int(doc, "width", where),
        height=_int(doc, "height", where),
        pose=Pose(np.array(rows), np.array(_vec(pose["translation"], 3, f"{where}.pose.translation"))),
    )


def primitive_to_doc(p: ConvexPrimitive) -> dict:
    doc = {
        "id": p.id,
        "halfspaces": [
            {"normal": [float(x) for x in h.normal], "offset": h.offset} for h in p.halfspaces
        ],
    }
    if p.label is not None:
        doc["label"] = p.label
    return doc


def doc_to_primitive(doc: dict, where: str) -> ConvexPrimitive:
    _check_keys(doc, {"id", "halfspaces"}, {"label"}, where)
    pid = _str(doc, "id", where)
    hs_doc = doc["halfspaces"]
    if not isinstance(hs_doc, list):
        raise DocumentError(f"{where}.halfspaces: expected a list")
    halfspaces = []
    for i, h in enumerate(hs_doc):
        hw = f"{where}.halfspaces[{i}]"
        _check_keys(h, {"normal", "offset"}, set(), hw)
        halfspaces.append(Halfspace(np.array(_vec(h["normal"], 3, f"{hw}.normal")), _num(h, "offset", hw)))
    label = None
    if "label" in doc:
        label = _str(doc, "label", where)
    return ConvexPrimitive(id=pid, halfspaces=tuple(halfspaces), label=label)


def scene_to_doc(scene: Scene) -> dict:
    return {
        "version": FORMAT_VERSION,
        "camera": camera_to_doc(scene.camera),
        "primitives": [primitive_to_doc(p) for p in scene.primitives],
        "prompt": scene.prompt,
        "seed": scene.seed,
    }


def doc_to_scene(doc: dict, budget: int = DEFAULT_BUDGET) -> Scene:
    _check_keys(doc, {"version", "camera", "primitives", "prompt", "seed"}, set(), "scene")
    version = _str(doc, "version", "scene")
    if version != FORMAT_VERSION:
        raise VersionError(f"scene.version: expected {FORMAT_VERSION!r}, got {version!r}")
    prims_doc = doc["primitives"]
    if not isinstance(prims_doc, list):
        raise DocumentError("scene.primitives: expected a list")
    prims = tuple(doc_to_primitive(p, f"scene.primitives[{i}]") for i, p in enumerate(prims_doc))
    seed = _int(doc, "seed", "scene")
    return Scene(
        primitives=prims,
        camera=doc_to_camera(doc["camera"]),
        prompt=_str(doc, "prompt", "scene"),
        seed=seed,
        budget=budget,
    )


def dumps_scene(scene: Scene) -> str:
    return canonical_json(scene_to_doc(scene))


def loads_scene(text: str, budget: int = DEFAULT_BUDGET) -> Scene:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"scene document is not valid JSON: {e}") from e
    return doc_to_scene(doc, budget=budget)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(dumps_scene(scene), encoding="utf-8")


def load_scene(path, budget: int = DEFAULT_BUDGET) -> Scene:
    return loads_scene(Path(path).read_text(encoding="utf-8"), budget=budget)


def load_camera_config(path) -> Camera:
    """CLI camera-config file: the scene document's camera object on its own."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DocumentError(f"camera config is not valid JSON: {e}") from e
    return doc_to_camera(doc)


# --- B2WD binary depth raster ----------------------------------------------

def depth_to_b2wd(depth: DepthMap) -> bytes:
    header = B2WD_MAGIC + struct.pack("<III", depth.width, depth.height, 0)
    return header + depth.values.astype("<f4").tobytes(order="C")


def b2wd_to_depth(data: bytes) -> DepthMap:
    if len(data) < 16:
        raise RasterFormatError(f"B2WD header truncated: {len(data)} bytes < 16")
    if data[:4] != B2WD_MAGIC:
        raise RasterFormatError(f"bad magic {data[:4]!r}, expected {B2WD_MAGIC!r}")
    width, height, _reserved = struct.unpack("<III", data[4:16])
    expected = 16 + 4 * width * height
    if len(data) != expected:
        raise RasterFormatError(
            f"B2WD payload length mismatch: width={width} height={height} "
            f"implies {expected} bytes, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=16).reshape(height, width).astype(np.float64)
    return DepthMap(width=width, height=height, values=values)


# --- 16-bit PNG rasters -----------------------------------------------------

def depth_to_png16_bytes(depth: DepthMap) -> bytes:
    """Millimeter-quantized depth: saturates at 65.535 m, +inf encodes as 0."""
    mm = np.where(np.isfinite(depth.values), np.clip(np.rint(depth.values * 1000.0), 1, 65535), 0)
    img = Image.fromarray(mm.astype(np.uint16))
    buf = _stdio.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png16_to_depth(data: bytes) -> DepthMap:
    img = Image.open(_stdio.BytesIO(data))
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype not in (np.uint16, np.int32):
        raise RasterFormatError(f"expected 16-bit grayscale PNG, got {img.mode}")
    mm = arr.astype(np.float64)
    values = np.where(mm > 0, mm / 1000.0, np.inf)
    return DepthMap(width=arr.shape[1], height=arr.shape[0], values=values)


def ids_to_png16_bytes(ids: IdBuffer) -> bytes:
    """Id raster image: 0 = no hit, otherwise primitive-list index + 1."""
    img = Image.fromarray((ids.ids.astype(np.int64) + 1).astype(np.uint16))
    buf = _stdio.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def png16_to_ids(data: bytes) -> IdBuffer:
    arr = np.asarray(Image.open(_stdio.BytesIO(data)))
    if arr.ndim != 2:
        raise RasterFormatError("expected 16-bit grayscale PNG id raster")
    return IdBuffer(width=arr.shape[1], height=arr.shape[0], ids=arr.astype(np.int32) - 1)


# --- path-level helpers -----------------------------------------------------

def write_depth_file(depth: DepthMap, path) -> None:
    """Write .b2wd binary or 16-bit .png depending on the file extension."""
    path = Path(path)
    if path.suffix == ".b2wd":
        path.write_bytes(depth_to_b2wd(depth))
    elif path.suffix == ".png":
        path.write_bytes(depth_to_png16_bytes(depth))
    else:
        raise RasterFormatError(f"unsupported depth extension {path.suffix!r} (use .b2wd or .png)")


def read_depth_file(path) -> DepthMap:
    path = Path(path)
    if path.suffix == ".b2wd":
        return b2wd_to_depth(path.read_bytes())
    if path.suffix == ".png":
        return png16_to_depth(path.read_bytes())
    raise RasterFormatError(f"unsupported depth extension {path.suffix!r} (use .b2wd or .png)")


# --- color images and masks ---------------------------------------------------

def image_to_png_bytes(image: np.ndarray) -> bytes:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise RasterFormatError(f"expected (H,W,3) uint8 image, got shape {arr.shape} dtype {arr.dtype}")
    buf = _stdio.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_image(data: bytes) -> np.ndarray:
    img = Image.open(_stdio.BytesIO(data)).convert("RGB")
    return np.asarray(img).copy()


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.dtype != np.bool_:
        raise RasterFormatError(f"expected (H,W) boolean mask, got shape {arr.shape} dtype {arr.dtype}")
    buf = _stdio.BytesIO()
    Image.fromarray(arr).convert("1").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_mask(data: bytes) -> np.ndarray:
    img = Image.open(_stdio.BytesIO(data)).convert("1")
    return np.asarray(img, dtype=bool).copy()
