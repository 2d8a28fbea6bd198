import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))  # for oracles.py


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_npy_video(path, frames):
    frames = np.asarray(frames, dtype=np.uint8)
    np.save(path, frames)
    return path


@pytest.fixture
def make_video(tmp_path):
    def _make(name, n_frames, h=32, w=32, seed=0):
        gen = np.random.default_rng(seed)
        frames = gen.integers(0, 256, size=(n_frames, h, w), dtype=np.uint8)
        return write_npy_video(tmp_path / name, frames)

    return _make
