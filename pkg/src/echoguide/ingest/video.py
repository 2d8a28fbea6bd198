"""Frame-sequence readers.

Video decoding is delegated to OpenCV; ``.npy``/``.npz`` arrays are accepted
as a codec-free interchange format (used by the test fixtures and by
synthetic sweeps). All readers return grayscale (T, H, W) uint8 arrays.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from echoguide.errors import ParseError


def read_video(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"video not found: {path}")
    if path.suffix == ".npy":
        frames = np.load(path)
    elif path.suffix == ".npz":
        with np.load(path) as archive:
            if "frames" not in archive:
                raise ParseError(f"{path}: .npz video must contain a 'frames' array")
            frames = archive["frames"]
    else:
        frames = _read_with_opencv(path)
    frames = np.asarray(frames)
    if frames.ndim == 4:  # (T, H, W, C) -> grayscale
        frames = frames.mean(axis=3)
    if frames.ndim != 3:
        raise ParseError(f"{path}: expected (T, H, W) frames, got shape {frames.shape}")
    if frames.dtype != np.uint8:
        frames = np.clip(frames, 0, 255).astype(np.uint8)
    return frames


def _read_with_opencv(path: Path) -> np.ndarray:
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise ParseError(f"could not open video: {path}")
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        if frame.ndim == 3:
            frame = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
        frames.append(frame)
    capture.release()
    if not frames:
        raise ParseError(f"video contains no frames: {path}")
    return np.stack(frames)


def video_frame_count(path: str | Path) -> int:
    """Frame count without decoding every frame where the container allows."""
    path = Path(path)
    if path.suffix in (".npy", ".npz"):
        return int(read_video(path).shape[0])
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise ParseError(f"could not open video: {path}")
    count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
    capture.release()
    if count <= 0:
        return int(_read_with_opencv(path).shape[0])
    return count
