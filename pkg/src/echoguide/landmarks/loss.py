"""Training loss for heatmap landmark detection.

Ground-truth coordinates become flat spatial indices (y * W + x, clamped to
bounds). Logits (B, L, H, W) are reshaped to (B, L, H*W), log-softmaxed over
the spatial dimension, and the log-probability at each target index is
weighted by the annotation mask and the per-sample visibility weight; the
loss is the landmark sum, averaged over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch


def encode_target_index(x: float, y: float, width: int, height: int) -> int:
    """Flatten a pixel coordinate to y * W + x, rounding half-up and
    clamping to the frame so every finite coordinate is encodable."""
    if width <= 0 or height <= 0:
        raise ValueError(f"frame size must be positive, got {width}x{height}")
    col = min(max(int(math.floor(x + 0.5)), 0), width - 1)
    row = min(max(int(math.floor(y + 0.5)), 0), height - 1)
    return row * width + col


def decode_target_index(index: int, width: int) -> tuple[int, int]:
    """Inverse of encode_target_index on in-bounds indices: (x, y)."""
    return index % width, index // width


@dataclass
class AnnotationBatch:
    """Flattened landmark targets for one batch.

    targets: (B, L) long indices into the flattened H*W grid
    mask:    (B, L) bool, true exactly where the landmark is annotated
    vis_w:   (B,) positive per-sample visibility weights
    """

    targets: torch.Tensor
    mask: torch.Tensor
    vis_w: torch.Tensor

    def __post_init__(self):
        if self.targets.ndim != 2 or self.mask.shape != self.targets.shape:
            raise ValueError(
                f"targets {tuple(self.targets.shape)} and mask "
                f"{tuple(self.mask.shape)} must both be (B, L)"
            )
        if self.vis_w.shape != (self.targets.shape[0],):
            raise ValueError(
                f"vis_w must be (B,), got {tuple(self.vis_w.shape)} "
                f"for batch {self.targets.shape[0]}"
            )
        if (self.vis_w <= 0).any():
            raise ValueError("vis_w must be strictly positive")


def masked_weighted_nll(logits: torch.Tensor, batch: AnnotationBatch) -> torch.Tensor:
    """Masked, visibility-weighted negative log likelihood over heatmaps."""
    if logits.ndim != 4:
        raise ValueError(f"logits must be (B, L, H, W), got {tuple(logits.shape)}")
    b, l, h, w = logits.shape
    if batch.targets.shape != (b, l):
        raise ValueError(
            f"targets shape {tuple(batch.targets.shape)} does not match logits ({b}, {l})"
        )
    if not torch.isfinite(logits).all():
        raise FloatingPointError("non-finite logits passed to masked_weighted_nll")
    if batch.targets.min() < 0 or batch.targets.max() >= h * w:
        raise ValueError(f"targets must lie in [0, {h * w})")

    flat = logits.reshape(b, l, h * w)
    log_probs = torch.log_softmax(flat, dim=2)
    picked = log_probs.gather(2, batch.targets.unsqueeze(2).long()).squeeze(2)  # (B, L)
    weighted = -picked * batch.mask.to(logits.dtype) * batch.vis_w.unsqueeze(1).to(
        logits.dtype
    )
    return weighted.sum(dim=1).mean()


def spatial_softmax(logits: torch.Tensor) -> torch.Tensor:
    """Per-channel 2D softmax over the spatial dimensions (stable)."""
    if logits.ndim not in (3, 4):
        raise ValueError(f"expected (L, H, W) or (B, L, H, W), got {tuple(logits.shape)}")
    h, w = logits.shape[-2:]
    flat = logits.reshape(*logits.shape[:-2], h * w)
    probs = torch.softmax(flat, dim=-1)
    return probs.reshape(logits.shape)


def sample_visibility_weight(
    visibilities: list[int], weight_map: dict[int, float]
) -> float:
    """Per-sample weight: mean of the per-landmark visibility weights over
    the annotated landmarks (1.0 when nothing is annotated)."""
    if not visibilities:
        return 1.0
    return float(sum(weight_map[v] for v in visibilities) / len(visibilities))
