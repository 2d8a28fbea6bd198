"""Training-time augmentation: brightness/contrast, uniform scale, translation.

The geometric transform is a similarity about the image center; landmark
coordinates undergo the identical affine map. Landmarks pushed outside the
frame stay in the output but are flagged out-of-bounds so the training mask
can drop them. All draws come from a seeded generator, so a fixed seed gives
bit-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

Point = tuple[float, float]


@dataclass
class AugmentConfig:
    # brightness offset as a fraction of the dynamic range
    brightness: float = 0.2
    contrast: tuple[float, float] = (0.8, 1.2)
    scale: tuple[float, float] = (0.9, 1.1)
    # translation as a fraction of each image dimension
    translate: float = 0.1


@dataclass
class AugmentParams:
    brightness_offset: float = 0.0  # fraction of dynamic range
    contrast_gain: float = 1.0
    scale: float = 1.0
    translate_x: float = 0.0  # pixels
    translate_y: float = 0.0

    @property
    def is_identity(self) -> bool:
        return (
            self.brightness_offset == 0.0
            and self.contrast_gain == 1.0
            and self.scale == 1.0
            and self.translate_x == 0.0
            and self.translate_y == 0.0
        )


@dataclass
class AugmentedLandmarks:
    points: dict[str, Point] = field(default_factory=dict)
    in_bounds: dict[str, bool] = field(default_factory=dict)


def draw_augment_params(
    config: AugmentConfig, shape: tuple[int, int], rng: np.random.Generator
) -> AugmentParams:
    h, w = shape
    return AugmentParams(
        brightness_offset=float(rng.uniform(-config.brightness, config.brightness)),
        contrast_gain=float(rng.uniform(*config.contrast)),
        scale=float(rng.uniform(*config.scale)),
        translate_x=float(rng.uniform(-config.translate, config.translate) * w),
        translate_y=float(rng.uniform(-config.translate, config.translate) * h),
    )


def transform_point(
    point: Point,
    params: AugmentParams,
    shape: tuple[int, int],
    center: Point | None = None,
) -> Point:
    """Apply the similarity map p' = s * (p - c) + c + t (c defaults to image center)."""
    h, w = shape
    cx, cy = center if center is not None else ((w - 1) / 2.0, (h - 1) / 2.0)
    x, y = point
    return (
        params.scale * (x - cx) + cx + params.translate_x,
        params.scale * (y - cy) + cy + params.translate_y,
    )


def augment_frame(
    frame: np.ndarray,
    landmarks: dict[str, Point] | None = None,
    params: AugmentParams | None = None,
    seed: int | None = None,
    config: AugmentConfig | None = None,
) -> tuple[np.ndarray, AugmentedLandmarks | None]:
    """Augment one grayscale frame, applying the same affine to landmarks.

    ``params`` may be given explicitly; otherwise they are drawn from
    ``config`` ranges with ``seed``. Identity params return the input
    unchanged (bit-exact).
    """
    if frame.ndim != 2:
        raise ValueError(f"expected grayscale (H, W) frame, got shape {frame.shape}")
    if params is None:
        rng = np.random.default_rng(seed)
        params = draw_augment_params(config or AugmentConfig(), frame.shape, rng)

    h, w = frame.shape
    dynamic_range = 255.0 if frame.dtype == np.uint8 else 1.0

    out = frame
    if params.scale != 1.0 or params.translate_x != 0.0 or params.translate_y != 0.0:
        cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
        s = params.scale
        matrix = np.array(
            [
                [s, 0.0, cx * (1.0 - s) + params.translate_x],
                [0.0, s, cy * (1.0 - s) + params.translate_y],
            ],
            dtype=np.float64,
        )
        out = cv2.warpAffine(
            frame, matrix, (w, h), flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT
        )
    if params.contrast_gain != 1.0 or params.brightness_offset != 0.0:
        shifted = (
            out.astype(np.float32) * params.contrast_gain
            + params.brightness_offset * dynamic_range
        )
        shifted = np.clip(shifted, 0.0, dynamic_range)
        out = np.rint(shifted).astype(np.uint8) if frame.dtype == np.uint8 else shifted

    if landmarks is None:
        return out, None

    transformed = AugmentedLandmarks()
    for name, point in landmarks.items():
        moved = transform_point(point, params, frame.shape)
        transformed.points[name] = moved
        transformed.in_bounds[name] = 0.0 <= moved[0] <= w - 1 and 0.0 <= moved[1] <= h - 1
    return out, transformed
