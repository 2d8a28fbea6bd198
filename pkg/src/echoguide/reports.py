"""Evaluation artifacts: figures (PNG) and delimited tables (CSV).

Everything renders through the Agg backend so reports can be produced on
headless machines. Each writer creates parent directories as needed and
returns the path it wrote.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from echoguide.landmarks.evaluate import LandmarkErrorReport
from echoguide.pose.scoring import CATEGORY_ORDER, SCORE_MAX, SCORE_MIN
from echoguide.rubric import PoseCategory

CATEGORY_LABELS = tuple(c.value for c in CATEGORY_ORDER)
CATEGORY_COLORS = {"green": "#2e8b57", "yellow": "#d4a017", "red": "#b22222"}


def _prepare(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _check_confusion(confusion) -> np.ndarray:
    matrix = np.asarray(confusion)
    if matrix.shape != (3, 3):
        raise ValueError(f"confusion matrix must be 3x3, got {matrix.shape}")
    return matrix


def save_confusion_figure(
    confusion, path: str | Path, title: str = "Pose category confusion"
) -> Path:
    """Count-annotated 3x3 heat map, rows truth, columns prediction."""
    matrix = _check_confusion(confusion)
    path = _prepare(path)
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    image = ax.imshow(matrix, cmap="Blues")
    threshold = matrix.max() / 2 if matrix.max() > 0 else 1
    for i in range(3):
        for j in range(3):
            ax.text(
                j,
                i,
                str(int(matrix[i, j])),
                ha="center",
                va="center",
                color="white" if matrix[i, j] > threshold else "black",
            )
    ax.set_xticks(range(3), CATEGORY_LABELS)
    ax.set_yticks(range(3), CATEGORY_LABELS)
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    ax.set_title(title)
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_score_trace_figure(
    scores: Sequence[float],
    path: str | Path,
    categories: Sequence[PoseCategory] | None = None,
    fps: float | None = None,
    title: str = "Pose score trace",
) -> Path:
    """Score line over frames with guides at the category boundaries 0 and -1."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("scores must be a non-empty 1-D sequence")
    if categories is not None and len(categories) != scores.size:
        raise ValueError(f"{len(categories)} categories for {scores.size} scores")
    path = _prepare(path)
    x = np.arange(scores.size) / fps if fps else np.arange(scores.size)
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(x, scores, color="0.35", linewidth=1.0, zorder=1)
    if categories is not None:
        colors = [CATEGORY_COLORS[c.value] for c in categories]
        ax.scatter(x, scores, c=colors, s=12, zorder=2)
    for boundary in (0.0, -1.0):
        ax.axhline(boundary, color="0.6", linestyle="--", linewidth=0.8)
    ax.set_ylim(SCORE_MIN - 0.15, SCORE_MAX + 0.15)
    ax.set_xlabel("time (s)" if fps else "frame")
    ax.set_ylabel("score")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_landmark_error_figure(
    report: LandmarkErrorReport, path: str | Path, title: str = "Landmark error (px)"
) -> Path:
    """Per-landmark mean error bars with the pooled mean as a guide line."""
    if not report.per_landmark:
        raise ValueError("report has no per-landmark entries")
    path = _prepare(path)
    names = sorted(report.per_landmark)
    means = [report.per_landmark[n].mean for n in names]
    stds = [report.per_landmark[n].std for n in names]
    fig, ax = plt.subplots(figsize=(max(5.0, 0.22 * len(names) + 2.0), 3.4))
    ax.bar(range(len(names)), means, yerr=stds, capsize=2, color="#4878a8")
    if report.overall is not None:
        ax.axhline(
            report.overall.mean,
            color="0.3",
            linestyle="--",
            linewidth=0.9,
            label=f"overall {report.overall.mean:.2f}",
        )
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=6)
    ax.set_ylabel("px")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _write_rows(path: str | Path, header: Sequence[str], rows) -> Path:
    path = _prepare(path)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_confusion_csv(confusion, path: str | Path) -> Path:
    matrix = _check_confusion(confusion)
    header = ["truth"] + [f"predicted_{label}" for label in CATEGORY_LABELS]
    rows = [
        [label, *(int(v) for v in matrix[i])] for i, label in enumerate(CATEGORY_LABELS)
    ]
    return _write_rows(path, header, rows)


def write_score_trace_csv(
    scores: Sequence[float],
    categories: Sequence[PoseCategory],
    path: str | Path,
    truth: Sequence[PoseCategory] | None = None,
    fps: float | None = None,
) -> Path:
    """One row per frame: index, optional wall time, score, predicted and
    (when available) labeled category."""
    if len(scores) != len(categories):
        raise ValueError(f"{len(scores)} scores for {len(categories)} categories")
    if truth is not None and len(truth) != len(scores):
        raise ValueError(f"{len(truth)} truth labels for {len(scores)} scores")
    header = ["frame_index", "time_s", "score", "category"]
    if truth is not None:
        header.append("truth")
    rows = []
    for i, (score, category) in enumerate(zip(scores, categories)):
        time_s = f"{i / fps:.4f}" if fps else ""
        row = [i, time_s, f"{float(score):.6f}", category.value]
        if truth is not None:
            row.append(truth[i].value)
        rows.append(row)
    return _write_rows(path, header, rows)


def write_landmark_error_csv(report: LandmarkErrorReport, path: str | Path) -> Path:
    """Per-landmark rows plus pooled `overall` and `key_subset` summary rows."""
    if not report.per_landmark:
        raise ValueError("report has no per-landmark entries")
    rows = [
        [name, f"{stat.mean:.4f}", f"{stat.std:.4f}", stat.count]
        for name, stat in sorted(report.per_landmark.items())
    ]
    for label, stat in (("overall", report.overall), ("key_subset", report.key_subset)):
        if stat is not None:
            rows.append([label, f"{stat.mean:.4f}", f"{stat.std:.4f}", stat.count])
    return _write_rows(path, ["landmark", "mean_px", "std_px", "count"], rows)


def write_fold_report_csv(fold_results, path: str | Path) -> Path:
    rows = [
        [r.fold_index, r.architecture, r.mode, f"{r.accuracy:.4f}"]
        for r in fold_results
    ]
    return _write_rows(path, ["fold_index", "architecture", "mode", "accuracy"], rows)
