"""Data ingestion: annotation tables, sweep manifests, folds, augmentation."""

from echoguide.ingest.echonet import (
    EchoNetClip,
    LandmarkAnnotation,
    merge_annotations,
    parse_auxiliary_landmarks,
    parse_echonet_annotations,
)
from echoguide.ingest.sweeps import (
    SweepRecording,
    assign_continuous_scores,
    interpolate_run_scores,
    parse_sweep_manifest,
    serialize_sweep_manifest,
)
from echoguide.ingest.folds import FoldPlan, make_subject_folds
from echoguide.ingest.augment import (
    AugmentConfig,
    AugmentParams,
    AugmentedLandmarks,
    augment_frame,
    draw_augment_params,
)
from echoguide.ingest.video import read_video, video_frame_count

__all__ = [
    "EchoNetClip",
    "LandmarkAnnotation",
    "SweepRecording",
    "FoldPlan",
    "AugmentConfig",
    "AugmentParams",
    "AugmentedLandmarks",
    "parse_echonet_annotations",
    "parse_auxiliary_landmarks",
    "merge_annotations",
    "parse_sweep_manifest",
    "serialize_sweep_manifest",
    "assign_continuous_scores",
    "interpolate_run_scores",
    "make_subject_folds",
    "augment_frame",
    "draw_augment_params",
    "read_video",
    "video_frame_count",
]
