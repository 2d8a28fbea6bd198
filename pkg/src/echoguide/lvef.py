"""Gated left-ventricular ejection fraction estimation from video clips."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np
import torch
import torch.nn as nn

from echoguide.checkpoint import load_checkpoint, save_checkpoint
from echoguide.errors import CheckpointError
from echoguide.ingest.echonet import EchoNetClip

log = logging.getLogger(__name__)

GATE_MIN_FRAMES = 26
GATE_MIN_SECONDS = 1.0

VARIANTS = ("tiny", "r2plus1d")


@dataclass
class VideoClip:
    """A fixed-rate grayscale frame sequence."""

    frames: np.ndarray  # (T, H, W) uint8
    fps: float
    clip_id: str = ""
    start_frame: int = 0  # position of frames[0] in the source stream

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 3:
            raise ValueError(f"expected (T, H, W) frames, got shape {self.frames.shape}")

    @property
    def frame_range(self) -> tuple[int, int]:
        return (self.start_frame, self.start_frame + len(self.frames) - 1)


@dataclass
class LvefEstimate:
    value: float  # percent, clamped to [0, 100]
    clip_id: str
    frame_range: tuple[int, int]

    def to_dict(self, model_version: str = "unversioned") -> dict:
        return {
            "clip_id": self.clip_id,
            "frame_range": list(self.frame_range),
            "lvef": self.value,
            "model_version": model_version,
        }


def gate_counts(n_frames: int, fps: float) -> bool:
    """Qualification rule shared by clip gating and live green buffering."""
    return n_frames >= GATE_MIN_FRAMES or n_frames / fps >= GATE_MIN_SECONDS


def gate_clip(clip: VideoClip) -> bool:
    """A clip qualifies with at least 26 frames or 1 second of footage."""
    return gate_counts(len(clip.frames), clip.fps)


@dataclass
class LvefConfig:
    schema_version: int = 1
    variant: str = "tiny"
    input_frames: int = 32
    stride: int = 1
    input_hw: tuple[int, int] = (112, 112)
    base_channels: int = 8  # tiny variant width
    pretrained: bool = True  # r2plus1d only

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.input_frames < 1 or self.stride < 1:
            raise ValueError("input_frames and stride must be positive")

    @property
    def in_channels(self) -> int:
        return 3 if self.variant == "r2plus1d" else 1

    @property
    def model_version(self) -> str:
        return f"lvef-{self.variant}-v{self.schema_version}"

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "variant": self.variant,
            "input_frames": self.input_frames,
            "stride": self.stride,
            "input_hw": list(self.input_hw),
            "base_channels": self.base_channels,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LvefConfig":
        data = dict(data)
        data["input_hw"] = tuple(data["input_hw"])
        return cls(**data, pretrained=False)


class TinyVideoRegressor(nn.Module):
    """Three 3-D conv stages and a scalar head; the desk-scale stand-in for
    the full factorized spatiotemporal network."""

    def __init__(self, base_channels: int = 8):
        super().__init__()
        c = base_channels
        self.features = nn.Sequential(
            nn.Conv3d(1, c, 3, stride=(1, 2, 2), padding=1, bias=False),
            nn.BatchNorm3d(c),
            nn.ReLU(inplace=True),
            nn.Conv3d(c, 2 * c, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm3d(2 * c),
            nn.ReLU(inplace=True),
            nn.Conv3d(2 * c, 4 * c, 3, stride=2, padding=1, bias=False),
            nn.BatchNorm3d(4 * c),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool3d(1),
        )
        self.head = nn.Linear(4 * c, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x).flatten(1))


def build_lvef_model(config: LvefConfig | None = None) -> nn.Module:
    config = config or LvefConfig()
    if config.variant == "tiny":
        return TinyVideoRegressor(config.base_channels)

    from torchvision.models.video import r2plus1d_18

    if config.pretrained:
        try:
            from torchvision.models.video import R2Plus1D_18_Weights

            model = r2plus1d_18(weights=R2Plus1D_18_Weights.KINETICS400_V1)
        except Exception as err:  # offline: train from scratch
            log.warning("could not load pretrained video weights (%s); using random init", err)
            model = r2plus1d_18(weights=None)
    else:
        model = r2plus1d_18(weights=None)
    model.fc = nn.Linear(model.fc.in_features, 1)
    return model


def sample_clip_tensor(clip: VideoClip, config: LvefConfig) -> torch.Tensor:
    """First-window temporal sampling to the model input length.

    Takes the first input_frames * stride frames at the configured stride,
    repeating the final frame when the clip is shorter, and resizes to the
    model resolution. Returns (1, C, T, H, W) in [0, 1].
    """
    frames = clip.frames[: config.input_frames * config.stride : config.stride]
    if len(frames) < config.input_frames:
        pad = np.repeat(frames[-1:], config.input_frames - len(frames), axis=0)
        frames = np.concatenate([frames, pad], axis=0)
    h, w = config.input_hw
    if frames.shape[1:] != (h, w):
        frames = np.stack(
            [cv2.resize(f, (w, h), interpolation=cv2.INTER_LINEAR) for f in frames]
        )
    tensor = torch.from_numpy(frames.astype(np.float32) / 255.0)
    tensor = tensor.unsqueeze(0).unsqueeze(0)  # (1, 1, T, H, W)
    if config.in_channels == 3:
        tensor = tensor.repeat(1, 3, 1, 1, 1)
    return tensor


def estimate_lvef(
    model: nn.Module, clip: VideoClip, config: LvefConfig | None = None
) -> LvefEstimate:
    """Regress the ejection fraction of a gate-qualified clip.

    The raw output clamps to [0, 100]: the guidance display always needs a
    value for an accepted clip.
    """
    config = config or LvefConfig()
    if not gate_clip(clip):
        raise ValueError(
            f"clip {clip.clip_id or '<unnamed>'} fails the LVEF gate: "
            f"{len(clip.frames)} frames at {clip.fps} fps"
        )
    model.eval()
    with torch.no_grad():
        raw = float(model(sample_clip_tensor(clip, config)).reshape(()))
    return LvefEstimate(
        value=min(max(raw, 0.0), 100.0),
        clip_id=clip.clip_id,
        frame_range=clip.frame_range,
    )


@dataclass
class LvefTrainConfig:
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 4
    seed: int = 0
    max_steps: int | None = None


@dataclass
class LvefTrainResult:
    checkpoint_dir: Path | None
    train_losses: list[float] = field(default_factory=list)
    steps: int = 0


def _clip_tensors(clips: list[EchoNetClip], config: LvefConfig) -> tuple[torch.Tensor, torch.Tensor]:
    inputs, labels = [], []
    for clip in clips:
        video = VideoClip(frames=clip.load_frames(), fps=clip.fps, clip_id=clip.clip_id)
        inputs.append(sample_clip_tensor(video, config)[0])
        labels.append(clip.ef_label)
    return torch.stack(inputs), torch.tensor(labels, dtype=torch.float32)


def train_lvef_estimator(
    clips: list[EchoNetClip],
    model_config: LvefConfig | None = None,
    train_config: LvefTrainConfig | None = None,
    out_dir: str | Path | None = None,
) -> tuple[nn.Module, LvefTrainResult]:
    """Squared-error regression training on labeled clips."""
    model_config = model_config or LvefConfig()
    train_config = train_config or LvefTrainConfig()
    if not clips:
        raise ValueError("empty training set")

    torch.manual_seed(train_config.seed)
    model = build_lvef_model(model_config)
    optimizer = torch.optim.Adam(model.parameters(), lr=train_config.lr)
    shuffler = np.random.default_rng(train_config.seed)
    inputs, labels = _clip_tensors(clips, model_config)

    result = LvefTrainResult(checkpoint_dir=None)
    done = False
    for epoch in range(train_config.epochs):
        model.train()
        order = shuffler.permutation(len(clips))
        epoch_total, epoch_count = 0.0, 0
        for start in range(0, len(order), train_config.batch_size):
            picks = order[start : start + train_config.batch_size]
            optimizer.zero_grad()
            pred = model(inputs[picks]).squeeze(1)
            loss = torch.nn.functional.mse_loss(pred, labels[picks])
            if not torch.isfinite(loss):
                raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            epoch_total += float(loss.detach()) * len(picks)
            epoch_count += len(picks)
            result.steps += 1
            if train_config.max_steps and result.steps >= train_config.max_steps:
                done = True
                break
        result.train_losses.append(epoch_total / max(epoch_count, 1))
        log.info("lvef epoch %d: train loss %.4f", epoch, result.train_losses[-1])
        if done:
            break

    batches = [
        inputs[i : i + train_config.batch_size]
        for i in range(0, len(clips), train_config.batch_size)
    ]
    torch.optim.swa_utils.update_bn(batches, model)

    if out_dir is not None:
        result.checkpoint_dir = save_checkpoint(
            out_dir, model_config.to_dict(), model.state_dict()
        )
    return model, result


def load_lvef_checkpoint(directory: str | Path) -> tuple[nn.Module, LvefConfig]:
    config_dict, state = load_checkpoint(directory)
    try:
        config = LvefConfig.from_dict(config_dict)
    except (KeyError, TypeError) as err:
        raise CheckpointError(f"{directory}: malformed LVEF config ({err})") from err
    model = build_lvef_model(config)
    model.load_state_dict(state)
    model.eval()
    return model, config
