"""Checkpoint layout: a directory holding config.json + weights.pt.

The config snapshot makes checkpoints self-describing; loaders rebuild the
model from it before restoring weights.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch

from echoguide.errors import CheckpointError

CONFIG_FILE = "config.json"
WEIGHTS_FILE = "weights.pt"


def save_checkpoint(directory: str | Path, config: dict, state_dict: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CONFIG_FILE).write_text(json.dumps(config, indent=2))
    torch.save(state_dict, directory / WEIGHTS_FILE)
    return directory


def load_checkpoint(directory: str | Path) -> tuple[dict, dict]:
    directory = Path(directory)
    config_path = directory / CONFIG_FILE
    weights_path = directory / WEIGHTS_FILE
    if not config_path.exists() or not weights_path.exists():
        raise CheckpointError(
            f"{directory} is not a checkpoint (need {CONFIG_FILE} and {WEIGHTS_FILE})"
        )
    config = json.loads(config_path.read_text())
    state_dict = torch.load(weights_path, map_location="cpu", weights_only=True)
    return config, state_dict
