"""Landmark detector training loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
import torch

from echoguide.checkpoint import save_checkpoint
from echoguide.ingest.echonet import EchoNetClip, LandmarkAnnotation
from echoguide.landmarks.loss import (
    AnnotationBatch,
    encode_target_index,
    masked_weighted_nll,
    sample_visibility_weight,
)
from echoguide.landmarks.model import LandmarkConfig, build_landmark_model
from echoguide import schema

log = logging.getLogger(__name__)


@dataclass
class LandmarkTrainConfig:
    epochs: int = 20
    lr: float = 1e-3
    batch_size: int = 512
    seed: int = 0
    max_steps: int | None = None  # cap total optimizer steps (desk-scale runs)


@dataclass
class LandmarkSample:
    """One annotated frame, resized to the model resolution."""

    image: np.ndarray   # (H, W) float32 in [0, 1]
    targets: np.ndarray  # (L,) int64 flat indices
    mask: np.ndarray     # (L,) bool
    vis_w: float


@dataclass
class TrainResult:
    checkpoint_dir: Path | None
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    steps: int = 0


def annotation_to_sample(
    frame: np.ndarray, annotation: LandmarkAnnotation, config: LandmarkConfig
) -> LandmarkSample:
    h, w = config.input_hw
    src_h, src_w = frame.shape
    if (src_h, src_w) != (h, w):
        image = cv2.resize(frame, (w, h), interpolation=cv2.INTER_LINEAR)
        sx, sy = w / src_w, h / src_h
    else:
        image, sx, sy = frame, 1.0, 1.0

    targets = np.zeros(config.num_landmarks, dtype=np.int64)
    mask = np.zeros(config.num_landmarks, dtype=bool)
    for name, (x, y) in annotation.points.items():
        idx = schema.LANDMARK_INDEX[name]
        targets[idx] = encode_target_index(x * sx, y * sy, w, h)
        mask[idx] = True
    vis_w = sample_visibility_weight(
        [annotation.visibility[n] for n in annotation.points], config.vis_weight_map
    )
    return LandmarkSample(
        image=image.astype(np.float32) / 255.0,
        targets=targets,
        mask=mask,
        vis_w=vis_w,
    )


def make_landmark_samples(
    clips: list[EchoNetClip],
    annotations: list[LandmarkAnnotation],
    config: LandmarkConfig,
) -> list[LandmarkSample]:
    by_clip = {clip.clip_id: clip for clip in clips}
    samples = []
    for annotation in annotations:
        clip = by_clip.get(annotation.clip_id)
        if clip is None:
            log.warning("annotation for unknown clip %s skipped", annotation.clip_id)
            continue
        frames = clip.load_frames()
        if annotation.frame_index >= len(frames):
            log.warning(
                "%s frame %d beyond clip length %d, skipped",
                annotation.clip_id,
                annotation.frame_index,
                len(frames),
            )
            continue
        samples.append(
            annotation_to_sample(frames[annotation.frame_index], annotation, config)
        )
    return samples


def _collate(samples: list[LandmarkSample]) -> tuple[torch.Tensor, AnnotationBatch]:
    images = torch.from_numpy(np.stack([s.image for s in samples])).unsqueeze(1)
    batch = AnnotationBatch(
        targets=torch.from_numpy(np.stack([s.targets for s in samples])),
        mask=torch.from_numpy(np.stack([s.mask for s in samples])),
        vis_w=torch.tensor([s.vis_w for s in samples], dtype=torch.float32),
    )
    return images, batch


def _epoch_loss(model, samples, batch_size) -> float:
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start : start + batch_size]
            images, batch = _collate(chunk)
            total += float(masked_weighted_nll(model(images), batch)) * len(chunk)
            count += len(chunk)
    return total / count


def train_landmark_detector(
    train_samples: list[LandmarkSample],
    val_samples: list[LandmarkSample],
    model_config: LandmarkConfig,
    train_config: LandmarkTrainConfig | None = None,
    out_dir: str | Path | None = None,
) -> tuple[torch.nn.Module, TrainResult]:
    """Train with the masked, visibility-weighted NLL and Adam.

    Logs per-epoch train/val loss; aborts on a non-finite loss with the
    offending step in the message. The checkpoint directory (when requested)
    holds the config snapshot and weights.
    """
    train_config = train_config or LandmarkTrainConfig()
    if not train_samples:
        raise ValueError("empty training set")

    torch.manual_seed(train_config.seed)
    model = build_landmark_model(model_config)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.lr)
    shuffler = np.random.default_rng(train_config.seed)

    result = TrainResult(checkpoint_dir=None)
    done = False
    for epoch in range(train_config.epochs):
        model.train()
        order = shuffler.permutation(len(train_samples))
        epoch_total, epoch_count = 0.0, 0
        for start in range(0, len(order), train_config.batch_size):
            chunk = [train_samples[i] for i in order[start : start + train_config.batch_size]]
            if len(chunk) == 1 and len(order) > 1:
                continue  # singleton remainder breaks batch-norm statistics
            images, batch = _collate(chunk)
            optimizer.zero_grad()
            loss = masked_weighted_nll(model(images), batch)
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch} "
                    f"step {result.steps} (loss={float(loss)})"
                )
            loss.backward()
            optimizer.step()
            epoch_total += float(loss.detach()) * len(chunk)
            epoch_count += len(chunk)
            result.steps += 1
            if train_config.max_steps and result.steps >= train_config.max_steps:
                done = True
                break
        result.train_losses.append(epoch_total / max(epoch_count, 1))
        if val_samples:
            result.val_losses.append(
                _epoch_loss(model, val_samples, train_config.batch_size)
            )
        log.info(
            "epoch %d: train loss %.4f%s",
            epoch,
            result.train_losses[-1],
            f", val loss {result.val_losses[-1]:.4f}" if val_samples else "",
        )
        if done:
            break

    # recalibrate batch-norm running statistics with the final weights so
    # short runs still evaluate sensibly in eval mode
    batches = []
    for start in range(0, len(train_samples), train_config.batch_size):
        chunk = train_samples[start : start + train_config.batch_size]
        if len(chunk) == 1 and len(train_samples) > 1:
            continue
        batches.append(_collate(chunk)[0])
    torch.optim.swa_utils.update_bn(batches, model)

    if out_dir is not None:
        result.checkpoint_dir = save_checkpoint(
            out_dir, model_config.to_dict(), model.state_dict()
        )
    return model, result


def load_landmark_checkpoint(directory: str | Path) -> tuple[torch.nn.Module, LandmarkConfig]:
    from echoguide.checkpoint import load_checkpoint

    payload, state = load_checkpoint(directory)
    config = LandmarkConfig.from_dict(payload)
    model = build_landmark_model(config)
    model.load_state_dict(state)
    model.eval()
    return model, config
