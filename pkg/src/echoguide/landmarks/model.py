"""Encoder-decoder heatmap network.

A residual encoder (18 or 34 layer layout, optionally ImageNet-pretrained at
full width) feeds five upsampling decoder blocks (channel dims 512, 256,
128, 64, 64 at width 1.0; each block = upsample + 3x3 conv + batch norm +
ReLU) and a final 1x1 conv to one channel per landmark. Decoder blocks
upsample to the mirrored encoder sizes, so the logits exactly restore the
input resolution. Grayscale input is replicated to 3 channels inside the
forward pass.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from echoguide import schema

log = logging.getLogger(__name__)

ENCODER_BLOCKS = {18: (2, 2, 2, 2), 34: (3, 4, 6, 3)}
DECODER_CHANNELS = (512, 256, 128, 64, 64)
# Four stride-2 stages after the stride-2 stem: input sides must be a
# multiple of 16 for the mirrored decoder sizes to be well defined.
MIN_DIVISOR = 16

DEFAULT_VIS_WEIGHTS = {1: 1.0, 2: 0.5, 3: 0.25}


@dataclass
class LandmarkConfig:
    """Model + decoding configuration; serialized into checkpoints."""

    schema_version: int = 1
    encoder_depth: int = 34
    width_multiplier: float = 1.0
    input_hw: tuple[int, int] = (112, 112)
    num_landmarks: int = schema.NUM_LANDMARKS
    vis_weight_map: dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_VIS_WEIGHTS)
    )
    tau: float | None = None     # uncertainty threshold; default 1/(H*W)
    r_vis: float | None = None   # visibility radius ceiling; default 12 * H/112
    p_vis: float | None = None   # visibility peak floor; default 5/(H*W)
    pretrained: bool = True      # full-width encoder from ImageNet weights

    def __post_init__(self):
        if self.encoder_depth not in ENCODER_BLOCKS:
            raise ValueError(
                f"encoder_depth must be one of {sorted(ENCODER_BLOCKS)}, "
                f"got {self.encoder_depth}"
            )
        h, w = self.input_hw
        self.input_hw = (int(h), int(w))
        if self.tau is None:
            self.tau = 1.0 / (h * w)
        if self.r_vis is None:
            self.r_vis = 12.0 * h / 112.0
        if self.p_vis is None:
            self.p_vis = 5.0 / (h * w)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "encoder_depth": self.encoder_depth,
            "width_multiplier": self.width_multiplier,
            "input_hw": list(self.input_hw),
            "num_landmarks": self.num_landmarks,
            "vis_weight_map": {str(k): v for k, v in self.vis_weight_map.items()},
            "tau": self.tau,
            "r_vis": self.r_vis,
            "p_vis": self.p_vis,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LandmarkConfig":
        return cls(
            schema_version=payload["schema_version"],
            encoder_depth=payload["encoder_depth"],
            width_multiplier=payload["width_multiplier"],
            input_hw=tuple(payload["input_hw"]),
            num_landmarks=payload["num_landmarks"],
            vis_weight_map={int(k): v for k, v in payload["vis_weight_map"].items()},
            tau=payload["tau"],
            r_vis=payload["r_vis"],
            p_vis=payload["p_vis"],
            pretrained=False,  # weights come from the checkpoint, not torchvision
        )


class BasicBlock(nn.Module):
    def __init__(self, in_ch, out_ch, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1, bias=False)
        self.bn1 = nn.BatchNorm2d(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False)
        self.bn2 = nn.BatchNorm2d(out_ch)
        self.downsample = None
        if stride != 1 or in_ch != out_ch:
            self.downsample = nn.Sequential(
                nn.Conv2d(in_ch, out_ch, 1, stride=stride, bias=False),
                nn.BatchNorm2d(out_ch),
            )

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return F.relu(out + identity)


class ResidualEncoder(nn.Module):
    """ResNet-18/34 layout with a width multiplier; tracks the intermediate
    spatial sizes the decoder mirrors."""

    def __init__(self, depth: int, width: float = 1.0, in_channels: int = 3):
        super().__init__()
        if depth not in ENCODER_BLOCKS:
            raise ValueError(
                f"encoder depth {depth} not supported; choose from {sorted(ENCODER_BLOCKS)}"
            )
        blocks = ENCODER_BLOCKS[depth]
        widths = [max(8, round(c * width)) for c in (64, 64, 128, 256, 512)]
        self.out_channels = widths[-1]

        self.conv1 = nn.Conv2d(in_channels, widths[0], 7, stride=2, padding=3, bias=False)
        self.bn1 = nn.BatchNorm2d(widths[0])
        self.maxpool = nn.MaxPool2d(3, stride=2, padding=1)
        self.layer1 = self._stage(widths[0], widths[1], blocks[0], stride=1)
        self.layer2 = self._stage(widths[1], widths[2], blocks[1], stride=2)
        self.layer3 = self._stage(widths[2], widths[3], blocks[2], stride=2)
        self.layer4 = self._stage(widths[3], widths[4], blocks[3], stride=2)

    @staticmethod
    def _stage(in_ch, out_ch, n_blocks, stride):
        layers = [BasicBlock(in_ch, out_ch, stride=stride)]
        layers += [BasicBlock(out_ch, out_ch) for _ in range(n_blocks - 1)]
        return nn.Sequential(*layers)

    def forward(self, x):
        x = F.relu(self.bn1(self.conv1(x)))
        x = self.maxpool(x)
        x = self.layer1(x)
        x = self.layer2(x)
        x = self.layer3(x)
        return self.layer4(x)


class UpBlock(nn.Module):
    """Upsample to a target size, then conv + batch norm + ReLU."""

    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, 3, padding=1, bias=False)
        self.bn = nn.BatchNorm2d(out_ch)

    def forward(self, x, size):
        x = F.interpolate(x, size=size, mode="nearest")
        return F.relu(self.bn(self.conv(x)))


class HeatmapNet(nn.Module):
    def __init__(self, config: LandmarkConfig):
        super().__init__()
        self.config = config
        self.encoder = ResidualEncoder(config.encoder_depth, config.width_multiplier)
        channels = [
            max(8, round(c * config.width_multiplier)) for c in DECODER_CHANNELS
        ]
        ins = [self.encoder.out_channels] + channels[:-1]
        self.decoder = nn.ModuleList(
            UpBlock(i, o) for i, o in zip(ins, channels)
        )
        self.head = nn.Conv2d(channels[-1], config.num_landmarks, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim == 3:  # (B, H, W) grayscale
            x = x.unsqueeze(1)
        if x.ndim != 4:
            raise ValueError(f"expected (B, 1, H, W) input, got {tuple(x.shape)}")
        h, w = x.shape[-2:]
        if h % MIN_DIVISOR or w % MIN_DIVISOR:
            raise ValueError(
                f"input size {h}x{w} must be divisible by {MIN_DIVISOR}"
            )
        if x.shape[1] != 1:
            raise ValueError(f"expected single-channel frames, got {x.shape[1]} channels")
        x = x.repeat(1, 3, 1, 1)

        features = self.encoder(x)
        # mirror the encoder's ceil-divided sizes back up to the input size
        sizes = [
            (math.ceil(h / 2**k), math.ceil(w / 2**k)) for k in (4, 3, 2, 1)
        ] + [(h, w)]
        for block, size in zip(self.decoder, sizes):
            features = block(features, size)
        return self.head(features)


def build_landmark_model(config: LandmarkConfig | None = None) -> HeatmapNet:
    config = config or LandmarkConfig()
    model = HeatmapNet(config)
    if config.pretrained:
        _load_imagenet_encoder(model, config)
    return model


def _load_imagenet_encoder(model: HeatmapNet, config: LandmarkConfig) -> None:
    if config.width_multiplier != 1.0:
        log.warning("pretrained encoder weights only exist at width 1.0; skipping")
        return
    try:
        import torchvision.models as tvm

        name = f"resnet{config.encoder_depth}"
        reference = getattr(tvm, name)(weights="IMAGENET1K_V1")
    except Exception as err:  # offline or missing cache: train from scratch
        log.warning("could not load ImageNet encoder weights (%s); using random init", err)
        return
    state = {
        k: v
        for k, v in reference.state_dict().items()
        if not k.startswith(("fc.", "avgpool"))
    }
    missing, unexpected = model.encoder.load_state_dict(state, strict=False)
    log.info(
        "loaded ImageNet encoder weights (%d tensors, %d unmatched)",
        len(state) - len(unexpected),
        len(unexpected),
    )
