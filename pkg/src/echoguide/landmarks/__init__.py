"""Uncertainty-aware heatmap landmark detection (47 channels)."""

from echoguide.landmarks.loss import (
    AnnotationBatch,
    encode_target_index,
    masked_weighted_nll,
    spatial_softmax,
)
from echoguide.landmarks.model import LandmarkConfig, build_landmark_model
from echoguide.landmarks.decode import (
    LandmarkPrediction,
    decode_landmarks,
    decode_predictions,
    landmark_visibility_gate,
    uncertainty_radius,
)
from echoguide.landmarks.train import LandmarkTrainConfig, train_landmark_detector
from echoguide.landmarks.evaluate import (
    LandmarkErrorReport,
    evaluate_landmark_error,
    predict_for_annotations,
)

__all__ = [
    "AnnotationBatch",
    "LandmarkConfig",
    "LandmarkPrediction",
    "LandmarkTrainConfig",
    "LandmarkErrorReport",
    "build_landmark_model",
    "encode_target_index",
    "masked_weighted_nll",
    "spatial_softmax",
    "decode_landmarks",
    "decode_predictions",
    "uncertainty_radius",
    "landmark_visibility_gate",
    "train_landmark_detector",
    "evaluate_landmark_error",
    "predict_for_annotations",
]
