"""Heatmap decoding: argmax coordinates, uncertainty radii, visibility gate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from echoguide import schema
from echoguide.landmarks.loss import spatial_softmax
from echoguide.landmarks.model import LandmarkConfig


@dataclass
class LandmarkPrediction:
    name: str
    x: float
    y: float
    peak: float
    radius: float
    visible: bool

    def to_dict(self) -> dict:
        return {
            "id": self.name,
            "x": self.x,
            "y": self.y,
            "radius": self.radius,
            "visible": self.visible,
        }


def decode_landmarks(prob_maps: torch.Tensor) -> torch.Tensor:
    """Argmax coordinate per channel as (..., L, 2) = (x, y).

    Ties break to the lowest flat index (torch.argmax returns the first
    maximum), matching the target-index encoding.
    """
    h, w = prob_maps.shape[-2:]
    flat = prob_maps.reshape(*prob_maps.shape[:-2], h * w)
    idx = flat.argmax(dim=-1)
    return torch.stack([idx % w, idx // w], dim=-1)


def uncertainty_radius(prob_map: torch.Tensor, tau: float | None = None) -> float:
    """Equivalent-circle radius of the above-threshold region of one map.

    With no pixel strictly above tau (an exactly uniform map) the radius
    degrades to the maximum sqrt(H*W/pi).
    """
    h, w = prob_map.shape[-2:]
    if tau is None:
        tau = 1.0 / (h * w)
    n = int((prob_map > tau).sum())
    if n == 0:
        n = h * w
    return math.sqrt(n / math.pi)


def landmark_visibility_gate(radius: float, peak: float, config: LandmarkConfig) -> bool:
    """A landmark is shown only when its heatmap is sharp (small radius)
    and confident (peak probability above the floor)."""
    return radius <= config.r_vis and peak >= config.p_vis


def decode_predictions(
    logits: torch.Tensor, config: LandmarkConfig
) -> list[list[LandmarkPrediction]]:
    """Full decode for a batch of logits: softmax, argmax coordinates,
    uncertainty radius, and visibility flag per landmark."""
    if logits.ndim == 3:
        logits = logits.unsqueeze(0)
    probs = spatial_softmax(logits)
    coords = decode_landmarks(probs)
    names = schema.LANDMARK_NAMES
    results = []
    for b in range(probs.shape[0]):
        frame = []
        for l in range(probs.shape[1]):
            x, y = int(coords[b, l, 0]), int(coords[b, l, 1])
            peak = float(probs[b, l, y, x])
            radius = uncertainty_radius(probs[b, l], config.tau)
            frame.append(
                LandmarkPrediction(
                    name=names[l] if l < len(names) else f"landmark_{l}",
                    x=float(x),
                    y=float(y),
                    peak=peak,
                    radius=radius,
                    visible=landmark_visibility_gate(radius, peak, config),
                )
            )
        results.append(frame)
    return results
