"""Pose-score regression network."""

from __future__ import annotations

import torch
import torch.nn as nn

from echoguide.landmarks.model import ResidualEncoder
from echoguide.pose.channels import mode_channels
from echoguide.pose.scoring import SCORE_MAX, SCORE_MIN, score_to_category


class PoseRegressor(nn.Module):
    """18-layer residual encoder with a scalar regression head."""

    def __init__(self, mode: str = "images_and_landmarks", width_multiplier: float = 1.0):
        super().__init__()
        self.mode = mode
        self.encoder = ResidualEncoder(
            depth=18, width=width_multiplier, in_channels=mode_channels(mode)
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(self.encoder.out_channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        features = self.pool(self.encoder(x)).flatten(1)
        return self.head(features).squeeze(1)

    @torch.no_grad()
    def predict_scores(self, x: torch.Tensor) -> torch.Tensor:
        self.eval()
        return self.forward(x).clamp(SCORE_MIN, SCORE_MAX)

    @torch.no_grad()
    def predict_categories(self, x: torch.Tensor) -> list:
        return [score_to_category(float(s)) for s in self.predict_scores(x)]
