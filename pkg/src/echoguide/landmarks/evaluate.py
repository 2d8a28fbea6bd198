"""Pixel-error evaluation against annotated landmarks."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import cv2
import numpy as np
import torch

from echoguide import schema
from echoguide.ingest.echonet import EchoNetClip, LandmarkAnnotation
from echoguide.landmarks.decode import LandmarkPrediction, decode_predictions
from echoguide.landmarks.model import LandmarkConfig

log = logging.getLogger(__name__)


@dataclass
class ErrorStat:
    mean: float
    std: float
    count: int

    def __str__(self) -> str:
        return f"{self.mean:.2f} ± {self.std:.2f} (n={self.count})"


@dataclass
class LandmarkErrorReport:
    per_landmark: dict[str, ErrorStat] = field(default_factory=dict)
    overall: ErrorStat | None = None
    key_subset: ErrorStat | None = None


def _stat(values: list[float]) -> ErrorStat:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return ErrorStat(mean=mean, std=math.sqrt(var), count=n)


def predict_for_annotations(
    model: torch.nn.Module,
    config: LandmarkConfig,
    clips: list[EchoNetClip],
    annotations: list[LandmarkAnnotation],
) -> tuple[list[list[LandmarkPrediction]], list[LandmarkAnnotation]]:
    """Run the detector on every annotated frame.

    Frames are resized to the model resolution and annotation coordinates are
    rescaled to match, so both sides of the returned pair live in model pixel
    space. Annotations whose clip or frame is missing are skipped with a
    warning, matching training-time sample construction.
    """
    by_clip = {clip.clip_id: clip for clip in clips}
    h, w = config.input_hw
    predictions: list[list[LandmarkPrediction]] = []
    scaled: list[LandmarkAnnotation] = []
    model.eval()
    for annotation in annotations:
        clip = by_clip.get(annotation.clip_id)
        if clip is None:
            log.warning("no clip %r for annotation, skipping", annotation.clip_id)
            continue
        frames = clip.load_frames()
        if not 0 <= annotation.frame_index < len(frames):
            log.warning(
                "%s: frame %d outside clip of %d frames, skipping",
                annotation.clip_id,
                annotation.frame_index,
                len(frames),
            )
            continue
        frame = frames[annotation.frame_index]
        src_h, src_w = frame.shape
        if (src_h, src_w) != (h, w):
            image = cv2.resize(frame, (w, h), interpolation=cv2.INTER_LINEAR)
            sx, sy = w / src_w, h / src_h
        else:
            image, sx, sy = frame, 1.0, 1.0
        tensor = torch.from_numpy(np.ascontiguousarray(image)).float().div(255.0)
        with torch.no_grad():
            logits = model(tensor[None, None])
        predictions.append(decode_predictions(logits, config)[0])
        scaled.append(
            LandmarkAnnotation(
                clip_id=annotation.clip_id,
                frame_index=annotation.frame_index,
                points={k: (x * sx, y * sy) for k, (x, y) in annotation.points.items()},
                visibility=dict(annotation.visibility),
            )
        )
    return predictions, scaled


def evaluate_landmark_error(
    predictions: list[list[LandmarkPrediction]],
    annotations: list[LandmarkAnnotation],
    require_visible: bool = True,
) -> LandmarkErrorReport:
    """Euclidean distance per annotated landmark, aggregated per landmark,
    overall, and over the key subset forwarded to pose scoring.

    Only annotated landmarks are scored; with ``require_visible`` the
    prediction must also pass the visibility gate.
    """
    if len(predictions) != len(annotations):
        raise ValueError(
            f"{len(predictions)} prediction frames for {len(annotations)} annotations"
        )
    distances: dict[str, list[float]] = {}
    for frame_predictions, annotation in zip(predictions, annotations):
        by_name = {p.name: p for p in frame_predictions}
        for name, (x, y) in annotation.points.items():
            prediction = by_name.get(name)
            if prediction is None:
                continue
            if require_visible and not prediction.visible:
                continue
            distances.setdefault(name, []).append(
                math.hypot(prediction.x - x, prediction.y - y)
            )

    if not distances:
        raise ValueError("no overlapping annotated landmarks to evaluate")

    report = LandmarkErrorReport()
    pooled: list[float] = []
    key_pooled: list[float] = []
    for name, values in distances.items():
        report.per_landmark[name] = _stat(values)
        pooled.extend(values)
        if name in schema.KEY_LANDMARKS:
            key_pooled.extend(values)
    report.overall = _stat(pooled)
    if key_pooled:
        report.key_subset = _stat(key_pooled)
    return report
