"""Training loops for both pose-scorer architectures."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from echoguide.checkpoint import load_checkpoint, save_checkpoint
from echoguide.errors import CheckpointError
from echoguide.ingest.augment import AugmentConfig
from echoguide.pose.adapter import (
    AdapterPoseScorer,
    BackboneConfig,
    TextBackbone,
    assert_backbone_unchanged,
    build_tiny_backbone,
    parameter_digest,
)
from echoguide.pose.channels import BLOB_SIGMA
from echoguide.pose.regressor import PoseRegressor
from echoguide.pose.samples import PoseSample, build_batch, class_weights_from_samples
from echoguide.pose.scoring import CATEGORY_TO_INDEX, ClassWeights, weighted_mse

log = logging.getLogger(__name__)

ARCHITECTURES = ("regression", "adapter")


@dataclass
class PoseTrainConfig:
    architecture: str = "regression"
    mode: str = "images_and_landmarks"
    epochs: int = 20
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    width_multiplier: float = 1.0
    input_hw: tuple[int, int] = (112, 112)
    sigma: float = BLOB_SIGMA
    augment: AugmentConfig | None = None
    val_window: int = 5
    # adapter-specific knobs
    n_prompts: int = 4
    cyclic_base_lr: float = 1e-5
    cyclic_max_lr: float = 1e-3

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(
                f"unknown architecture {self.architecture!r}; choose from {ARCHITECTURES}"
            )

    def checkpoint_dict(self) -> dict:
        return {
            "schema_version": 1,
            "architecture": self.architecture,
            "mode": self.mode,
            "width_multiplier": self.width_multiplier,
            "input_hw": list(self.input_hw),
            "sigma": self.sigma,
            "n_prompts": self.n_prompts,
        }


@dataclass
class PoseTrainResult:
    checkpoint_dir: Path | None
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    saved_epoch: int | None = None


class TrailingMeanSelector:
    """Snapshot policy: keep the weights of the epoch minimizing the running
    mean of the trailing `window` validation losses.

    `update` returns True when the just-finished epoch becomes the new pick.
    With fewer epochs than the window the caller falls back to the best
    single epoch.
    """

    def __init__(self, window: int = 5):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.window = window
        self.losses: list[float] = []
        self.best_mean = math.inf
        self.best_epoch: int | None = None

    def update(self, loss: float) -> bool:
        self.losses.append(float(loss))
        if len(self.losses) < self.window:
            return False
        mean = sum(self.losses[-self.window :]) / self.window
        if mean < self.best_mean:
            self.best_mean = mean
            self.best_epoch = len(self.losses) - 1
            return True
        return False


def _build_model(config: PoseTrainConfig, backbone: TextBackbone | None):
    if config.architecture == "regression":
        return PoseRegressor(mode=config.mode, width_multiplier=config.width_multiplier)
    return AdapterPoseScorer(
        backbone or build_tiny_backbone(config.seed),
        mode=config.mode,
        width_multiplier=config.width_multiplier,
        n_prompts=config.n_prompts,
    )


def _regression_loss(model, batch, samples, weights):
    pred = model(batch)
    target = torch.tensor([s.score for s in samples], dtype=pred.dtype)
    return weighted_mse(pred, target, [s.category for s in samples], weights)


def _adapter_loss(model, batch, samples, _weights):
    logits = model(batch)
    target = torch.tensor([CATEGORY_TO_INDEX[s.category] for s in samples])
    return torch.nn.functional.cross_entropy(logits, target)


def _eval_loss(model, samples, config, weights, loss_fn):
    model.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(samples), config.batch_size):
            chunk = samples[start : start + config.batch_size]
            batch = build_batch(chunk, config.mode, config.sigma)
            total += float(loss_fn(model, batch, chunk, weights)) * len(chunk)
            count += len(chunk)
    return total / count


def _refresh_batchnorm(model, samples, config):
    """Recompute batch-norm running statistics with the final weights.

    Short runs leave the exponentially averaged statistics far from the
    activation distribution, which wrecks eval-mode predictions; a
    cumulative pass over the training set fixes the calibration.
    """
    batches = []
    for start in range(0, len(samples), config.batch_size):
        chunk = samples[start : start + config.batch_size]
        if len(chunk) == 1 and len(samples) > 1:
            continue
        batches.append(build_batch(chunk, config.mode, config.sigma))
    torch.optim.swa_utils.update_bn(batches, model)


def train_pose_scorer(
    train_samples: Sequence[PoseSample],
    val_samples: Sequence[PoseSample],
    config: PoseTrainConfig | None = None,
    out_dir: str | Path | None = None,
    backbone: TextBackbone | None = None,
    class_weights: ClassWeights | None = None,
) -> tuple[torch.nn.Module, PoseTrainResult]:
    """Train either architecture on labeled frames.

    Regression minimizes the class-weighted squared error on continuous
    scores; the adapter minimizes cross-entropy on categories with the
    backbone frozen (verified by parameter digest). Checkpoint selection
    tracks the trailing-window validation mean; without a validation set the
    training loss stands in.
    """
    config = config or PoseTrainConfig()
    if not train_samples:
        raise ValueError("empty training set")

    torch.manual_seed(config.seed)
    model = _build_model(config, backbone)
    is_adapter = config.architecture == "adapter"
    loss_fn = _adapter_loss if is_adapter else _regression_loss

    if class_weights is None and not is_adapter:
        class_weights = class_weights_from_samples(train_samples)

    if is_adapter:
        backbone_digest = parameter_digest(model.backbone)
        optimizer = torch.optim.AdamW(model.trainable_parameters(), lr=config.cyclic_base_lr)
        steps_per_epoch = max(1, math.ceil(len(train_samples) / config.batch_size))
        scheduler = torch.optim.lr_scheduler.CyclicLR(
            optimizer,
            base_lr=config.cyclic_base_lr,
            max_lr=config.cyclic_max_lr,
            step_size_up=max(1, (steps_per_epoch * config.epochs) // 2),
            mode="triangular",
            cycle_momentum=False,
        )
    else:
        optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
        scheduler = None

    shuffler = np.random.default_rng(config.seed)
    selector = TrailingMeanSelector(config.val_window)
    best_single: tuple[float, int, dict] | None = None
    picked_state: dict | None = None
    result = PoseTrainResult(checkpoint_dir=None)

    for epoch in range(config.epochs):
        model.train()
        order = shuffler.permutation(len(train_samples))
        epoch_total, epoch_count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            chunk = [train_samples[i] for i in order[start : start + config.batch_size]]
            if len(chunk) == 1 and len(order) > 1:
                continue  # singleton remainder breaks batch-norm statistics
            batch = build_batch(chunk, config.mode, config.sigma, config.augment, shuffler)
            optimizer.zero_grad()
            loss = loss_fn(model, batch, chunk, class_weights)
            if not torch.isfinite(loss):
                raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            if scheduler is not None:
                scheduler.step()
            epoch_total += float(loss.detach()) * len(chunk)
            epoch_count += len(chunk)
        result.train_losses.append(epoch_total / max(epoch_count, 1))

        if val_samples:
            tracked = _eval_loss(model, val_samples, config, class_weights, loss_fn)
            result.val_losses.append(tracked)
        else:
            tracked = result.train_losses[-1]
        log.info(
            "pose %s epoch %d: train %.4f%s",
            config.architecture,
            epoch,
            result.train_losses[-1],
            f", val {result.val_losses[-1]:.4f}" if val_samples else "",
        )

        if best_single is None or tracked < best_single[0]:
            best_single = (tracked, epoch, copy.deepcopy(model.state_dict()))
        if selector.update(tracked):
            picked_state = copy.deepcopy(model.state_dict())
            result.saved_epoch = selector.best_epoch

    if picked_state is None:
        log.warning(
            "fewer epochs (%d) than the selection window (%d); "
            "falling back to the best single epoch",
            config.epochs,
            config.val_window,
        )
        _, result.saved_epoch, picked_state = best_single
    model.load_state_dict(picked_state)
    _refresh_batchnorm(model, train_samples, config)

    if is_adapter:
        assert_backbone_unchanged(backbone_digest, model.backbone)

    if out_dir is not None:
        payload = config.checkpoint_dict()
        if is_adapter:
            payload["backbone"] = model.backbone.config.to_dict()
        result.checkpoint_dir = save_checkpoint(out_dir, payload, model.state_dict())
    return model, result


def load_pose_checkpoint(directory: str | Path) -> tuple[torch.nn.Module, dict]:
    """Rebuild either architecture from its checkpoint directory."""
    config, state = load_checkpoint(directory)
    architecture = config.get("architecture")
    if architecture == "regression":
        model = PoseRegressor(
            mode=config["mode"], width_multiplier=config["width_multiplier"]
        )
    elif architecture == "adapter":
        backbone = TextBackbone(BackboneConfig.from_dict(config["backbone"]))
        model = AdapterPoseScorer(
            backbone,
            mode=config["mode"],
            width_multiplier=config["width_multiplier"],
            n_prompts=config.get("n_prompts", 4),
        )
    else:
        raise CheckpointError(f"{directory}: unknown pose architecture {architecture!r}")
    model.load_state_dict(state)
    model.eval()
    return model, config
