"""Evaluation and fit reports: canonical JSON, delimited tables, figures.

The figure writers use the Agg backend and fixed layout parameters so a
rerun over identical inputs reproduces the output files byte for byte.
"""

from __future__ import annotations

import csv
import io as _stdio
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .decompose import FitReport
from .io import canonical_json

_METRIC_COLUMNS = ("abs_rel", "rmse", "rmsle")
_TABLE_HEADER = ("Cfg.", "AbsRel", "RMSE", "RMSLE")


def format_depth_table(report: dict) -> str:
    """Fixed-width table of per-class depth errors, one row per requested label."""
    rows = []
    for label, vals in report["per_class"].items():
        rows.append((label, vals["abs_rel"], vals["rmse"], vals["rmsle"]))
    if report["overall"] is not None:
        o = report["overall"]
        rows.append(("Avg.", o["abs_rel"], o["rmse"], o["rmsle"]))
    name_w = max([len(_TABLE_HEADER[0])] + [len(r[0]) for r in rows]) + 2
    lines = [f"{_TABLE_HEADER[0]:<{name_w}}{_TABLE_HEADER[1]:>8}{_TABLE_HEADER[2]:>8}{_TABLE_HEADER[3]:>8}"]
    for name, a, r, l in rows:
        lines.append(f"{name:<{name_w}}{a:>8.3f}{r:>8.3f}{l:>8.3f}")
    if report.get("balanced_accuracy") is not None:
        lines.append("")
        lines.append(f"balanced accuracy: {report['balanced_accuracy']:.2f}%")
    if report.get("failures"):
        lines.append(f"failed items: {len(report['failures'])}")
    return "\n".join(lines) + "\n"


def depth_report_csv(report: dict) -> str:
    """Delimited per-class rows plus the averaged row."""
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("cfg",) + _METRIC_COLUMNS + ("count",))
    for label, vals in report["per_class"].items():
        w.writerow([label] + [repr(vals[m]) for m in _METRIC_COLUMNS] + [vals["count"]])
    if report["overall"] is not None:
        o = report["overall"]
        w.writerow(["avg"] + [repr(o[m]) for m in _METRIC_COLUMNS] + [o["count"]])
    return buf.getvalue()


def _save_fig(fig, path: Path) -> None:
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_confusion(report: dict, path: Path) -> None:
    classes = report["confusion"]["classes"]
    counts = np.asarray(report["confusion"]["counts"])
    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * len(classes), 1.0 + 0.6 * len(classes)))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(classes)), classes, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(classes)), classes, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("requested")
    thresh = counts.max() / 2 if counts.size else 0
    for i in range(len(classes)):
        for j in range(len(classes)):
            ax.text(
                j,
                i,
                str(counts[i, j]),
                ha="center",
                va="center",
                fontsize=7,
                color="white" if counts[i, j] > thresh else "black",
            )
    ax.set_title(f"balanced accuracy {report['balanced_accuracy']:.2f}%", fontsize=9)
    fig.colorbar(im, fraction=0.046)
    fig.tight_layout()
    _save_fig(fig, path)


def plot_depth_metrics(report: dict, path: Path) -> None:
    labels = list(report["per_class"].keys()) + ["avg"]
    rows = list(report["per_class"].values()) + [report["overall"]]
    x = np.arange(len(labels))
    width = 0.27
    fig, ax = plt.subplots(figsize=(1.5 + 0.9 * len(labels), 3.2))
    for k, (metric, title) in enumerate(zip(_METRIC_COLUMNS, ("AbsRel", "RMSE", "RMSLE"))):
        ax.bar(x + (k - 1) * width, [r[metric] for r in rows], width, label=title)
    ax.set_xticks(x, labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save_fig(fig, path)


def write_eval_report(report: dict, out_base) -> list:
    """Write <base>.json/.csv/.txt plus confusion and per-class figures.

    Figure files are skipped for an empty batch. Returns the written paths.
    """
    base = Path(out_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    paths = []

    def _emit(suffix: str, text: str) -> None:
        p = base.with_name(base.name + suffix)
        p.write_text(text, encoding="utf-8")
        paths.append(p)

    _emit(".json", canonical_json(report))
    _emit(".csv", depth_report_csv(report))
    _emit(".txt", format_depth_table(report))
    if report["confusion"] is not None:
        p = base.with_name(base.name + ".confusion.png")
        plot_confusion(report, p)
        paths.append(p)
    if report["per_class"]:
        p = base.with_name(base.name + ".metrics.png")
        plot_depth_metrics(report, p)
        paths.append(p)
    return paths


def fit_report_to_doc(rep: FitReport) -> dict:
    return {
        "final_loss": rep.final_loss,
        "coverage": dict(rep.coverage),
        "pruned_ids": list(rep.pruned_ids),
        "iterations_run": rep.iterations_run,
        "holdout_accuracy": rep.holdout_accuracy,
        "entry_holdout_accuracy": rep.entry_holdout_accuracy,
        "loss_history": list(rep.loss_history),
    }


def write_fit_report(rep: FitReport, out_base) -> list:
    """Write the fit report document plus a loss-curve figure."""
    base = Path(out_base)
    base.parent.mkdir(parents=True, exist_ok=True)
    report_path = base.with_name(base.name + ".report.json")
    report_path.write_text(canonical_json(fit_report_to_doc(rep)), encoding="utf-8")
    paths = [report_path]
    if rep.loss_history:
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.semilogy(np.arange(len(rep.loss_history)), rep.loss_history, lw=1.0)
        ax.set_xlabel("iteration")
        ax.set_ylabel("loss")
        ax.set_title(f"final loss {rep.final_loss:.4g}", fontsize=9)
        fig.tight_layout()
        p = base.with_name(base.name + ".loss.png")
        _save_fig(fig, p)
        paths.append(p)
    return paths
