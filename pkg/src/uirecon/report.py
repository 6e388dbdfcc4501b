"""Figures and delimited tables for evaluation and serialization reports."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .evaluation import PAPER_REDUCTION_CLAIM, EvalReport, SerializationStats  # noqa: E402
from .fsutil import atomic_write  # noqa: E402
from .raster import Image  # noqa: E402
from .schema import Scaffold  # noqa: E402

# PNG metadata would otherwise embed the matplotlib version
_SAVE = {"format": "png", "dpi": 100, "metadata": {"Software": None}}


def _save(fig, path: Path) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, **_SAVE)
    plt.close(fig)
    return atomic_write(path, buf.getvalue())


def matches_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pred_id", "truth_id", "iou"])
    for p in report.matched:
        writer.writerow([p.pred_id, p.truth_id, f"{p.iou:.6f}"])
    for pid in report.unmatched_pred:
        writer.writerow([pid, "", ""])
    for tid in report.unmatched_truth:
        writer.writerow(["", tid, ""])
    return buf.getvalue()


def plot_eval_overlay(pred: Scaffold, truth: Scaffold, report: EvalReport, path: str | Path,
                      image: Image | None = None) -> Path:
    """Truth boxes (dashed) and predicted boxes (solid, green if matched) over the screenshot."""
    w, h = truth.canvas_width, truth.canvas_height
    fig, ax = plt.subplots(figsize=(8, 8 * h / max(w, 1) + 0.6))
    if image is not None:
        ax.imshow(image.to_array(), extent=(0, image.width, image.height, 0))
    ax.set_xlim(0, w)
    ax.set_ylim(h, 0)
    ax.set_aspect("equal")
    matched = {p.pred_id for p in report.matched}
    for el in truth.elements:
        b = el.bbox
        ax.add_patch(Rectangle((b.x_min, b.y_min), b.width, b.height, fill=False, ls="--", lw=1.0,
                               ec="white" if image is not None else "black"))
    for el in pred.elements:
        b = el.bbox
        color = "tab:green" if el.id in matched else "tab:red"
        ax.add_patch(Rectangle((b.x_min, b.y_min), b.width, b.height, fill=False, lw=1.5, ec=color))
        ax.text(b.x_min + 1, b.y_min + 1, el.id, fontsize=6, color=color, va="top")
    ax.set_title(f"mean IoU {report.mean_matched_iou:.3f}  recall {report.detection_recall:.2f}  "
                 f"precision {report.detection_precision:.2f}  parents {report.parent_consistency:.2f}",
                 fontsize=9)
    return _save(fig, Path(path))


def plot_iou_histogram(report: EvalReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.hist([p.iou for p in report.matched], bins=20, range=(0, 1), color="tab:blue")
    ax.set_xlabel("matched IoU")
    ax.set_ylabel("pairs")
    fig.tight_layout()
    return _save(fig, Path(path))


def serialization_csv(rows: Sequence[tuple[str, int, SerializationStats]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fixture", "elements", "yaml_bytes", "json_bytes", "ratio", "indented_json_bytes",
                     "ratio_vs_indented"])
    for name, n, st in rows:
        writer.writerow([name, n, st.yaml_bytes, st.json_bytes, f"{st.ratio:.4f}", st.indented_json_bytes,
                         f"{st.ratio_vs_indented:.4f}"])
    return buf.getvalue()


def plot_serialization(rows: Sequence[tuple[str, int, SerializationStats]], path: str | Path) -> Path:
    """Byte ratios per fixture against the claimed 20-30% reduction band."""
    names = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(max(5, 0.6 * len(rows) + 2), 3.5))
    xs = range(len(rows))
    ax.bar([x - 0.2 for x in xs], [r[2].ratio for r in rows], width=0.4, label="yaml / compact json")
    ax.bar([x + 0.2 for x in xs], [r[2].ratio_vs_indented for r in rows], width=0.4,
           label="yaml / indented json")
    lo, hi = PAPER_REDUCTION_CLAIM
    ax.axhspan(1 - hi, 1 - lo, color="tab:orange", alpha=0.2, label="claimed 20-30% reduction")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("byte ratio (token proxy)")
    ax.set_ylim(0, 1.1)
    ax.legend(fontsize=7, loc="lower right")
    fig.tight_layout()
    return _save(fig, Path(path))


def write_eval_report(report: EvalReport, directory: str | Path, pred: Scaffold, truth: Scaffold,
                      image: Image | None = None) -> dict[str, Path]:
    directory = Path(directory)
    return {
        "json": atomic_write(directory / "report.json", report.to_json() + "\n"),
        "csv": atomic_write(directory / "matches.csv", matches_csv(report)),
        "overlay": plot_eval_overlay(pred, truth, report, directory / "overlay.png", image),
        "histogram": plot_iou_histogram(report, directory / "iou_hist.png"),
    }
