"""Training/evaluation samples for the pose scorer."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import cv2
import numpy as np
import torch

from echoguide.ingest.augment import AugmentConfig, augment_frame, draw_augment_params
from echoguide.ingest.sweeps import SweepRecording, assign_continuous_scores
from echoguide.landmarks.decode import LandmarkPrediction, decode_predictions
from echoguide.pose.channels import BLOB_SIGMA, build_scorer_input, key_points_from_predictions
from echoguide.pose.scoring import ClassWeights, compute_class_weights
from echoguide.rubric import PoseCategory

LandmarksFn = Callable[[np.ndarray], list[LandmarkPrediction]]


@dataclass
class PoseSample:
    """One labeled frame: raw pixels plus any gated key-landmark positions."""

    image: np.ndarray  # (H, W) uint8
    score: float
    category: PoseCategory
    key_points: dict[str, tuple[float, float]] | None = None
    subject_id: str | None = None


def make_pose_samples(
    sweeps: Sequence[SweepRecording],
    input_hw: tuple[int, int] = (112, 112),
    landmarks_fn: LandmarksFn | None = None,
) -> list[PoseSample]:
    """Flatten labeled sweeps into per-frame samples at the model resolution.

    `landmarks_fn` maps a resized frame to landmark predictions; when given,
    the visible key landmarks are stored with each sample for channel
    rendering.
    """
    h, w = input_hw
    samples = []
    for sweep in sweeps:
        frames = sweep.load_frames()
        scores = assign_continuous_scores(sweep)
        for frame, score, category in zip(frames, scores, sweep.frame_categories):
            if frame.shape != (h, w):
                frame = cv2.resize(frame, (w, h), interpolation=cv2.INTER_LINEAR)
            key_points = None
            if landmarks_fn is not None:
                key_points = key_points_from_predictions(landmarks_fn(frame))
            samples.append(
                PoseSample(
                    image=frame,
                    score=float(score),
                    category=category,
                    key_points=key_points,
                    subject_id=sweep.subject_id,
                )
            )
    return samples


def landmark_predictor(model: torch.nn.Module, config) -> LandmarksFn:
    """Wrap a trained landmark detector as a `landmarks_fn` callback.

    Incoming frames are at the pose-model resolution; they are resized to
    the detector's own resolution and the predicted coordinates (and radii)
    scaled back, so the two models may run at different sizes.
    """
    h, w = config.input_hw
    model.eval()

    def predict(frame: np.ndarray) -> list[LandmarkPrediction]:
        src_h, src_w = frame.shape
        image = frame
        if (src_h, src_w) != (h, w):
            image = cv2.resize(frame, (w, h), interpolation=cv2.INTER_LINEAR)
        tensor = torch.from_numpy(np.ascontiguousarray(image)).float().div(255.0)
        with torch.no_grad():
            logits = model(tensor[None, None])
        predictions = decode_predictions(logits, config)[0]
        if (src_h, src_w) != (h, w):
            sx, sy = src_w / w, src_h / h
            sr = (sx * sy) ** 0.5
            predictions = [
                replace(p, x=p.x * sx, y=p.y * sy, radius=p.radius * sr)
                for p in predictions
            ]
        return predictions

    return predict


def category_counts(samples: Sequence[PoseSample]) -> tuple[int, int, int]:
    counts = Counter(sample.category for sample in samples)
    return (
        counts.get(PoseCategory.GREEN, 0),
        counts.get(PoseCategory.YELLOW, 0),
        counts.get(PoseCategory.RED, 0),
    )


def class_weights_from_samples(samples: Sequence[PoseSample]) -> ClassWeights:
    return compute_class_weights(*category_counts(samples))


def build_batch(
    samples: Sequence[PoseSample],
    mode: str,
    sigma: float = BLOB_SIGMA,
    augment: AugmentConfig | None = None,
    rng: np.random.Generator | None = None,
) -> torch.Tensor:
    """Stack samples into a (B, C, H, W) float tensor.

    With an augmentation config, each frame and its key points move through
    the same geometric transform before channel rendering.
    """
    inputs = []
    for sample in samples:
        image, key_points = sample.image, sample.key_points
        if augment is not None:
            params = draw_augment_params(augment, image.shape, rng or np.random.default_rng())
            image, moved = augment_frame(image, landmarks=key_points, params=params)
            if key_points is not None:
                key_points = moved.points
        inputs.append(
            build_scorer_input(image.astype(np.float32) / 255.0, key_points, mode, sigma)
        )
    return torch.from_numpy(np.stack(inputs))
