"""Key-landmark conditioning channels for the pose scorer."""

from __future__ import annotations

import numpy as np

from echoguide import schema
from echoguide.landmarks.decode import LandmarkPrediction

MODES = ("images_only", "landmarks_only", "images_and_landmarks")
BLOB_SIGMA = 2.0


def mode_channels(mode: str) -> int:
    """Input channel count per mode.

    Both landmark modes keep an image slot (blank for landmarks_only) so the
    two share one encoder architecture.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    return 1 if mode == "images_only" else 1 + len(schema.KEY_LANDMARKS)


def render_blob(shape: tuple[int, int], x: float, y: float, sigma: float = BLOB_SIGMA) -> np.ndarray:
    """Unit-height isotropic Gaussian centered at (x, y)."""
    h, w = shape
    ys = np.arange(h, dtype=np.float32)[:, None]
    xs = np.arange(w, dtype=np.float32)[None, :]
    return np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2.0 * sigma**2)).astype(np.float32)


def key_points_from_predictions(
    predictions: list[LandmarkPrediction],
) -> dict[str, tuple[float, float]]:
    """Positions of the key landmarks that passed the visibility gate."""
    return {
        p.name: (p.x, p.y)
        for p in predictions
        if p.visible and p.name in schema.KEY_LANDMARKS
    }


def render_landmark_channels(
    key_points: dict[str, tuple[float, float]],
    shape: tuple[int, int],
    sigma: float = BLOB_SIGMA,
) -> np.ndarray:
    """One channel per key landmark with a blob at its position.

    Landmarks absent from `key_points` (unpredicted or hidden by the
    visibility gate) leave their channel at zero.
    """
    channels = np.zeros((len(schema.KEY_LANDMARKS), *shape), dtype=np.float32)
    for i, name in enumerate(schema.KEY_LANDMARKS):
        point = key_points.get(name)
        if point is not None:
            channels[i] = render_blob(shape, point[0], point[1], sigma)
    return channels


def build_scorer_input(
    frame: np.ndarray,
    key_points: dict[str, tuple[float, float]] | None,
    mode: str,
    sigma: float = BLOB_SIGMA,
) -> np.ndarray:
    """Stack the frame and landmark channels per mode as (C, H, W) float32.

    The frame is expected normalized to [0, 1].
    """
    n_channels = mode_channels(mode)
    frame = np.asarray(frame, dtype=np.float32)
    if frame.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale frame, got shape {frame.shape}")
    if mode == "images_only":
        return frame[None]
    if key_points is None:
        raise ValueError(f"mode {mode!r} needs key-landmark positions")
    channels = render_landmark_channels(key_points, frame.shape, sigma)
    image = np.zeros_like(frame) if mode == "landmarks_only" else frame
    stacked = np.concatenate([image[None], channels], axis=0)
    assert stacked.shape[0] == n_channels
    return stacked
