"""Prompt-adapter pose classifier over a frozen transformer backbone.

The backbone stays frozen throughout training; only the image encoder, the
visual projection, the adaption prompt vectors, and the category head learn.
A parameter digest taken before and after training enforces this.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import torch
import torch.nn as nn

from echoguide.checkpoint import load_checkpoint, save_checkpoint
from echoguide.errors import FrozenBackboneError
from echoguide.landmarks.model import ResidualEncoder
from echoguide.pose.channels import mode_channels
from echoguide.pose.scoring import CATEGORY_ORDER

INSTRUCTION = "Rate the apical four chamber view as green, yellow, or red."


@dataclass
class BackboneConfig:
    vocab_size: int = 256  # byte-level token ids
    dim: int = 64
    layers: int = 2
    heads: int = 4
    max_len: int = 128

    def to_dict(self) -> dict:
        return dict(vars(self))

    @classmethod
    def from_dict(cls, data: dict) -> "BackboneConfig":
        return cls(**data)


class TextBackbone(nn.Module):
    """Small transformer over byte tokens, always run with frozen weights.

    A full-scale language model can substitute for this class as long as it
    exposes the same tokenize/embed/forward surface.
    """

    def __init__(self, config: BackboneConfig | None = None):
        super().__init__()
        self.config = config or BackboneConfig()
        self.embed = nn.Embedding(self.config.vocab_size, self.config.dim)
        self.pos = nn.Parameter(torch.zeros(self.config.max_len, self.config.dim))
        nn.init.normal_(self.pos, std=0.02)
        layer = nn.TransformerEncoderLayer(
            d_model=self.config.dim,
            nhead=self.config.heads,
            dim_feedforward=4 * self.config.dim,
            batch_first=True,
        )
        self.blocks = nn.TransformerEncoder(layer, self.config.layers)
        self.norm = nn.LayerNorm(self.config.dim)

    def tokenize(self, text: str) -> torch.Tensor:
        data = text.encode("utf-8")[: self.config.max_len]
        return torch.tensor(list(data), dtype=torch.long)

    def forward(self, embeddings: torch.Tensor) -> torch.Tensor:
        if embeddings.shape[1] > self.config.max_len:
            raise ValueError(
                f"sequence length {embeddings.shape[1]} exceeds backbone limit "
                f"{self.config.max_len}"
            )
        hidden = embeddings + self.pos[: embeddings.shape[1]]
        return self.norm(self.blocks(hidden))


def build_tiny_backbone(seed: int = 0, config: BackboneConfig | None = None) -> TextBackbone:
    torch.manual_seed(seed)
    return TextBackbone(config)


def save_backbone(directory: str | Path, backbone: TextBackbone) -> Path:
    return save_checkpoint(directory, backbone.config.to_dict(), backbone.state_dict())


def load_backbone(directory: str | Path) -> TextBackbone:
    config, state = load_checkpoint(directory)
    backbone = TextBackbone(BackboneConfig.from_dict(config))
    backbone.load_state_dict(state)
    return backbone


def parameter_digest(module: nn.Module) -> str:
    """sha256 over the name-sorted parameter and buffer tensors."""
    digest = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        digest.update(name.encode())
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


class AdapterPoseScorer(nn.Module):
    """Image features plus learned adaption prompts fed through the frozen
    backbone; the final hidden state maps to the three categories."""

    def __init__(
        self,
        backbone: TextBackbone,
        mode: str = "images_and_landmarks",
        width_multiplier: float = 0.25,
        n_prompts: int = 4,
        instruction: str = INSTRUCTION,
    ):
        super().__init__()
        self.backbone = backbone
        for parameter in self.backbone.parameters():
            parameter.requires_grad_(False)
        self.mode = mode
        self.n_prompts = n_prompts
        self.instruction = instruction
        self.encoder = ResidualEncoder(
            depth=18, width=width_multiplier, in_channels=mode_channels(mode)
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        dim = backbone.config.dim
        self.proj = nn.Linear(self.encoder.out_channels, dim)
        self.prompts = nn.Parameter(torch.empty(n_prompts, dim))
        nn.init.normal_(self.prompts, std=0.02)
        self.head = nn.Linear(dim, len(CATEGORY_ORDER))
        self.register_buffer("instruction_ids", backbone.tokenize(instruction))

    def trainable_parameters(self):
        return (p for p in self.parameters() if p.requires_grad)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch = x.shape[0]
        visual = self.proj(self.pool(self.encoder(x)).flatten(1))
        prompts = self.prompts.unsqueeze(0).expand(batch, -1, -1) + visual.unsqueeze(1)
        text = self.backbone.embed(self.instruction_ids).unsqueeze(0).expand(batch, -1, -1)
        hidden = self.backbone(torch.cat([prompts, text], dim=1))
        return self.head(hidden[:, -1])

    @torch.no_grad()
    def predict_categories(self, x: torch.Tensor) -> list:
        self.eval()
        indices = self.forward(x).argmax(dim=1)
        return [CATEGORY_ORDER[int(i)] for i in indices]


def assert_backbone_unchanged(before: str, backbone: TextBackbone) -> None:
    after = parameter_digest(backbone)
    if after != before:
        raise FrozenBackboneError(
            f"backbone parameters drifted during training "
            f"(digest {before[:12]}... became {after[:12]}...)"
        )
