"""Continuous pose scores, traffic-light thresholds, and the class-weighted loss."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import torch

from echoguide.rubric import PoseCategory

SCORE_MIN = -2.0
SCORE_MAX = 1.0

# fixed row/column order for confusion matrices and classifier heads
CATEGORY_ORDER: tuple[PoseCategory, ...] = (
    PoseCategory.GREEN,
    PoseCategory.YELLOW,
    PoseCategory.RED,
)
CATEGORY_TO_INDEX = {category: i for i, category in enumerate(CATEGORY_ORDER)}

# representative score when an architecture predicts only a category
CATEGORY_MIDPOINTS = {
    PoseCategory.GREEN: 0.5,
    PoseCategory.YELLOW: -0.5,
    PoseCategory.RED: -1.5,
}


def clamp_score(score: float) -> float:
    return min(max(float(score), SCORE_MIN), SCORE_MAX)


def score_to_category(score: float) -> PoseCategory:
    """Threshold a continuous score; each boundary belongs to the category
    whose range it closes (0 to green, -1 to yellow)."""
    if not math.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    if score >= 0:
        return PoseCategory.GREEN
    if score >= -1:
        return PoseCategory.YELLOW
    return PoseCategory.RED


@dataclass(frozen=True)
class ClassWeights:
    w_green: float
    w_yellow: float
    w_red: float

    def __post_init__(self):
        for name, weight in vars(self).items():
            if weight <= 0:
                raise ValueError(f"{name} must be positive, got {weight}")

    def __getitem__(self, category: PoseCategory) -> float:
        return (self.w_green, self.w_yellow, self.w_red)[CATEGORY_TO_INDEX[category]]

    @classmethod
    def unit(cls) -> "ClassWeights":
        return cls(1.0, 1.0, 1.0)


def compute_class_weights(n_green: int, n_yellow: int, n_red: int) -> ClassWeights:
    """Inverse-frequency weights w_c = N_total / (3 * N_c)."""
    counts = (n_green, n_yellow, n_red)
    if min(counts) <= 0:
        raise ValueError(f"every category needs at least one sample, got {counts}")
    total = sum(counts)
    return ClassWeights(*(total / (3 * count) for count in counts))


def weighted_mse(
    pred: torch.Tensor,
    target: torch.Tensor,
    categories: Sequence[PoseCategory],
    weights: ClassWeights,
) -> torch.Tensor:
    """Mean of w_category * (pred - target)^2 over the batch.

    The weight comes from the ground-truth category, not from thresholding
    the target score, so boundary frames keep their labeled class.
    """
    pred = torch.as_tensor(pred)
    target = torch.as_tensor(target, dtype=pred.dtype)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {tuple(pred.shape)} vs target {tuple(target.shape)}")
    if pred.numel() != len(categories):
        raise ValueError(f"{pred.numel()} predictions for {len(categories)} categories")
    weight = torch.tensor([weights[c] for c in categories], dtype=pred.dtype)
    return (weight * (pred.flatten() - target.flatten()) ** 2).mean()
