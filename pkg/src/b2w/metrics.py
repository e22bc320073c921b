"""Depth-error metrics, scale-shift alignment, and scene-label scoring.

AbsRel, RMSE and RMSLE follow the standard monocular-depth definitions:
abs_rel = mean(|p - r| / r), rmse = sqrt(mean((p - r)^2)),
rmsle = sqrt(mean((ln p - ln r)^2)) with p clamped to >= 1e-3 m for the log.
Alignment fits pred ~ s * pred + t to the reference by least squares over the
masked pixels before computing errors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import DepthMap
from .io import read_depth_file

# Published averages for a renderer trained on NYUv2 with the six most common
# scene labels; kept as comparison baselines in reports, not reproduced here.
REFERENCE_DEPTH_ERRORS = {
    "bedroom": {"abs_rel": 0.131, "rmse": 0.441, "rmsle": 0.115},
    "kitchen": {"abs_rel": 0.137, "rmse": 0.476, "rmsle": 0.122},
    "living room": {"abs_rel": 0.139, "rmse": 0.451, "rmsle": 0.121},
    "bathroom": {"abs_rel": 0.156, "rmse": 0.537, "rmsle": 0.135},
    "dining room": {"abs_rel": 0.141, "rmse": 0.473, "rmsle": 0.124},
    "office": {"abs_rel": 0.135, "rmse": 0.460, "rmsle": 0.121},
    "avg": {"abs_rel": 0.140, "rmse": 0.473, "rmsle": 0.123},
}
REFERENCE_BALANCED_ACCURACY = 76.80

_LOG_CLAMP = 1e-3  # meters


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class DepthErrorReport:
    abs_rel: float
    rmse: float
    rmsle: float
    count: int
    scale: float
    shift: float
    degenerate_fit: bool = False

    def __post_init__(self):
        if self.count <= 0:
            raise MetricsError("depth error report needs at least one pixel")


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple
    counts: np.ndarray  # (C,C) requested x predicted

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        n = len(self.classes)
        if c.shape != (n, n):
            raise MetricsError(f"counts shape {c.shape} does not match {n} classes")
        if np.any(c < 0):
            raise MetricsError("confusion counts must be non-negative")
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", c)

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def _masked_pair(pred: DepthMap, ref: DepthMap, mask: Optional[np.ndarray]):
    if (pred.width, pred.height) != (ref.width, ref.height):
        raise MetricsError(
            f"raster mismatch: pred {pred.width}x{pred.height} vs ref {ref.width}x{ref.height}"
        )
    m = np.isfinite(pred.values) & np.isfinite(ref.values) & (ref.values > 0)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != pred.values.shape:
            raise MetricsError("mask shape does not match the rasters")
        m &= mask
    return pred.values[m], ref.values[m], m


def _fit_scale_shift(p: np.ndarray, r: np.ndarray):
    mp, mr = np.mean(p), np.mean(r)
    dp = p - mp
    var = float(np.mean(dp * dp))
    if var <= 0.0 or not np.isfinite(var):
        return 0.0, float(mr), True
    cov = float(np.mean(dp * (r - mr)))
    s = cov / var
    return s, float(mr - s * mp), False


def fit_scale_shift(pred: DepthMap, ref: DepthMap, mask: Optional[np.ndarray] = None):
    """Least-squares (s, t) minimizing sum((s*pred + t - ref)^2) over the mask.

    A constant prediction has no defined scale: the fit degrades to
    s=0, t=mean(ref), and depth_errors flags it.
    """
    p, r, _ = _masked_pair(pred, ref, mask)
    if p.size < 2:
        raise MetricsError(f"need at least 2 masked pixels to fit scale/shift, got {p.size}")
    s, t, _ = _fit_scale_shift(p, r)
    return s, t


def depth_errors(
    pred: DepthMap, ref: DepthMap, align: bool = False, mask: Optional[np.ndarray] = None
) -> DepthErrorReport:
    """AbsRel/RMSE/RMSLE over pixels finite in both rasters with ref > 0."""
    p, r, _ = _masked_pair(pred, ref, mask)
    if p.size == 0:
        raise MetricsError("no valid pixels in common between the two rasters")
    s, t, degenerate = 1.0, 0.0, False
    if align:
        s, t, degenerate = _fit_scale_shift(p, r)
        p = s * p + t
    diff = p - r
    abs_rel = float(np.mean(np.abs(diff) / r))
    rmse = float(np.sqrt(np.mean(diff * diff)))
    log_diff = np.log(np.maximum(p, _LOG_CLAMP)) - np.log(r)
    rmsle = float(np.sqrt(np.mean(log_diff * log_diff)))
    return DepthErrorReport(
        abs_rel=abs_rel,
        rmse=rmse,
        rmsle=rmsle,
        count=int(p.size),
        scale=float(s),
        shift=float(t),
        degenerate_fit=degenerate,
    )


def confusion_and_bacc(pairs: Sequence[tuple], classes: Optional[Sequence[str]] = None):
    """Requested-vs-predicted confusion counts and balanced accuracy in percent.

    Balanced accuracy averages per-class recall over classes with at least one
    requested sample.
    """
    if not pairs:
        raise MetricsError("need at least one (requested, predicted) pair")
    if classes is None:
        seen = []
        for req, pred in pairs:
            for label in (req, pred):
                if label not in seen:
                    seen.append(label)
        classes = sorted(seen)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for req, pred in pairs:
        if req not in index:
            raise MetricsError(f"requested label {req!r} outside class set {list(classes)}")
        if pred not in index:
            raise MetricsError(f"predicted label {pred!r} outside class set {list(classes)}")
        counts[index[req], index[pred]] += 1
    cm = ConfusionMatrix(classes=tuple(classes), counts=counts)
    rows = cm.row_sums()
    present = rows > 0
    recalls = np.diag(cm.counts)[present] / rows[present]
    bacc = 100.0 * float(np.mean(recalls))
    return cm, bacc


# --- batch evaluation -------------------------------------------------------


@dataclass(frozen=True)
class ManifestItem:
    primitive_depth: str
    inferred_depth: str
    requested: str
    predicted: str


_MANIFEST_HEADER = ("primitive_depth", "inferred_depth", "requested", "predicted")


def read_manifest(path) -> list:
    """Comma-separated manifest, one evaluation item per line.

    Columns: primitive depth file, inferred depth file, requested label,
    predicted label. Blank lines and '#' comments are skipped; a leading
    header row matching the canonical column names is tolerated.
    """
    items = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            if tuple(cells) == _MANIFEST_HEADER:
                continue
            if len(cells) != 4:
                raise MetricsError(f"manifest row needs 4 fields, got {len(cells)}: {row!r}")
            items.append(ManifestItem(*cells))
    return items


def evaluate_batch(manifest: Sequence[ManifestItem], align: bool = True, base_dir=None) -> dict:
    """Depth metrics per requested label plus confusion/balanced accuracy.

    Per-item failures are recorded under "failures" and the batch continues.
    The overall row averages the per-class means, mirroring how the reference
    table aggregates its six scene labels.
    """
    base = Path(base_dir) if base_dir is not None else None

    def _resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() or base is None else base / q

    per_item = []
    failures = []
    pairs = []
    for i, item in enumerate(manifest):
        try:
            ref = read_depth_file(_resolve(item.primitive_depth))
            pred = read_depth_file(_resolve(item.inferred_depth))
            rep = depth_errors(pred, ref, align=align)
        except Exception as e:
            failures.append({"index": i, "item": item.primitive_depth, "error": str(e)})
            continue
        per_item.append((item, rep))
        pairs.append((item.requested, item.predicted))

    class_order = []
    for item, _ in per_item:
        if item.requested not in class_order:
            class_order.append(item.requested)
    per_class = {}
    for label in class_order:
        reps = [r for it, r in per_item if it.requested == label]
        per_class[label] = {
            "abs_rel": float(np.mean([r.abs_rel for r in reps])),
            "rmse": float(np.mean([r.rmse for r in reps])),
            "rmsle": float(np.mean([r.rmsle for r in reps])),
            "count": len(reps),
        }
    overall = None
    if per_class:
        overall = {
            "abs_rel": float(np.mean([v["abs_rel"] for v in per_class.values()])),
            "rmse": float(np.mean([v["rmse"] for v in per_class.values()])),
            "rmsle": float(np.mean([v["rmsle"] for v in per_class.values()])),
            "count": len(per_item),
        }
    confusion = None
    bacc = None
    if pairs:
        cm, bacc = confusion_and_bacc(pairs)
        confusion = {"classes": list(cm.classes), "counts": cm.counts.tolist()}
    return {
        "align": align,
        "per_class": per_class,
        "overall": overall,
        "confusion": confusion,
        "balanced_accuracy": bacc,
        "items": [
            {
                "primitive_depth": it.primitive_depth,
                "inferred_depth": it.inferred_depth,
                "requested": it.requested,
                "predicted": it.predicted,
                "abs_rel": r.abs_rel,
                "rmse": r.rmse,
                "rmsle": r.rmsle,
                "count": r.count,
                "scale": r.scale,
                "shift": r.shift,
                "degenerate_fit": r.degenerate_fit,
            }
            for it, r in per_item
        ],
        "failures": failures,
        "reference": {
            "depth_errors": REFERENCE_DEPTH_ERRORS,
            "balanced_accuracy": REFERENCE_BALANCED_ACCURACY,
        },
    }
