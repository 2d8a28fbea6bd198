"""Fold-wise evaluation: accuracy and confusion matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from echoguide.pose.channels import BLOB_SIGMA
from echoguide.pose.samples import PoseSample, build_batch
from echoguide.pose.scoring import (
    CATEGORY_MIDPOINTS,
    CATEGORY_ORDER,
    CATEGORY_TO_INDEX,
    score_to_category,
)
from echoguide.rubric import PoseCategory


@dataclass
class FoldResult:
    fold_index: int
    accuracy: float
    confusion: np.ndarray  # 3x3 counts, rows = truth, cols = prediction
    mode: str = "images_and_landmarks"
    architecture: str = "regression"

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "mode": self.mode,
            "architecture": self.architecture,
            "accuracy": self.accuracy,
            "confusion": self.confusion.astype(int).tolist(),
        }


def confusion_matrix(
    truth: Sequence[PoseCategory], predicted: Sequence[PoseCategory]
) -> np.ndarray:
    """3x3 counts in green/yellow/red order, rows truth, columns prediction."""
    if len(truth) != len(predicted):
        raise ValueError(f"{len(truth)} truths for {len(predicted)} predictions")
    matrix = np.zeros((3, 3), dtype=np.int64)
    for t, p in zip(truth, predicted):
        matrix[CATEGORY_TO_INDEX[t], CATEGORY_TO_INDEX[p]] += 1
    return matrix


def accuracy_from_confusion(confusion: np.ndarray) -> float:
    total = int(confusion.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(confusion)) / total


def predict_categories(
    model: torch.nn.Module,
    samples: Sequence[PoseSample],
    mode: str,
    sigma: float = BLOB_SIGMA,
    batch_size: int = 64,
) -> list[PoseCategory]:
    predicted: list[PoseCategory] = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start : start + batch_size]
            batch = build_batch(chunk, mode, sigma)
            predicted.extend(model.predict_categories(batch))
    return predicted


def score_samples(
    model: torch.nn.Module,
    samples: Sequence[PoseSample],
    mode: str,
    architecture: str = "regression",
    sigma: float = BLOB_SIGMA,
    batch_size: int = 64,
) -> tuple[np.ndarray, list[PoseCategory]]:
    """Continuous score and category for every sample, in order.

    The adapter head is categorical, so its score is the category midpoint;
    the regression head's category is thresholded from its clamped score.
    Either way category == score_to_category(score) holds for each pair.
    """
    if not samples:
        raise ValueError("no samples to score")
    model.eval()
    scores: list[float] = []
    categories: list[PoseCategory] = []
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            batch = build_batch(samples[start : start + batch_size], mode, sigma)
            if architecture == "adapter":
                chunk = model.predict_categories(batch)
                categories.extend(chunk)
                scores.extend(CATEGORY_MIDPOINTS[c] for c in chunk)
            else:
                for value in model.predict_scores(batch).tolist():
                    scores.append(float(value))
                    categories.append(score_to_category(value))
    return np.asarray(scores, dtype=np.float64), categories


def evaluate_pose_fold(
    model: torch.nn.Module,
    test_samples: Sequence[PoseSample],
    mode: str,
    fold_index: int = 0,
    architecture: str = "regression",
    sigma: float = BLOB_SIGMA,
    batch_size: int = 64,
) -> FoldResult:
    """Accuracy and confusion of a trained scorer on labeled frames."""
    if not test_samples:
        raise ValueError("empty test set")
    predicted = predict_categories(model, test_samples, mode, sigma, batch_size)
    confusion = confusion_matrix([s.category for s in test_samples], predicted)
    return FoldResult(
        fold_index=fold_index,
        accuracy=accuracy_from_confusion(confusion),
        confusion=confusion,
        mode=mode,
        architecture=architecture,
    )


def aggregate_fold_report(results: Sequence[FoldResult]) -> dict:
    """Per-fold entries plus the fold-mean accuracy and pooled confusion."""
    if not results:
        raise ValueError("no fold results to aggregate")
    pooled = np.sum([r.confusion for r in results], axis=0)
    return {
        "folds": [r.to_dict() for r in results],
        "mean_accuracy": float(np.mean([r.accuracy for r in results])),
        "overall_confusion": pooled.astype(int).tolist(),
        "category_order": [c.value for c in CATEGORY_ORDER],
    }
