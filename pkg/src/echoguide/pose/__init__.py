"""Transducer pose scoring: regression and prompt-adapter architectures."""

from echoguide.pose.adapter import (
    AdapterPoseScorer,
    BackboneConfig,
    TextBackbone,
    build_tiny_backbone,
    load_backbone,
    parameter_digest,
    save_backbone,
)
from echoguide.pose.channels import (
    BLOB_SIGMA,
    MODES,
    build_scorer_input,
    key_points_from_predictions,
    mode_channels,
    render_blob,
    render_landmark_channels,
)
from echoguide.pose.evaluate import (
    FoldResult,
    accuracy_from_confusion,
    aggregate_fold_report,
    confusion_matrix,
    evaluate_pose_fold,
    predict_categories,
    score_samples,
)
from echoguide.pose.regressor import PoseRegressor
from echoguide.pose.samples import (
    PoseSample,
    build_batch,
    category_counts,
    class_weights_from_samples,
    landmark_predictor,
    make_pose_samples,
)
from echoguide.pose.scoring import (
    CATEGORY_MIDPOINTS,
    CATEGORY_ORDER,
    CATEGORY_TO_INDEX,
    SCORE_MAX,
    SCORE_MIN,
    ClassWeights,
    clamp_score,
    compute_class_weights,
    score_to_category,
    weighted_mse,
)
from echoguide.pose.train import (
    PoseTrainConfig,
    PoseTrainResult,
    TrailingMeanSelector,
    load_pose_checkpoint,
    train_pose_scorer,
)

__all__ = [
    "AdapterPoseScorer",
    "BackboneConfig",
    "TextBackbone",
    "build_tiny_backbone",
    "load_backbone",
    "parameter_digest",
    "save_backbone",
    "BLOB_SIGMA",
    "MODES",
    "build_scorer_input",
    "key_points_from_predictions",
    "mode_channels",
    "render_blob",
    "render_landmark_channels",
    "FoldResult",
    "accuracy_from_confusion",
    "aggregate_fold_report",
    "confusion_matrix",
    "evaluate_pose_fold",
    "score_samples",
    "predict_categories",
    "PoseRegressor",
    "PoseSample",
    "build_batch",
    "category_counts",
    "class_weights_from_samples",
    "landmark_predictor",
    "make_pose_samples",
    "CATEGORY_MIDPOINTS",
    "CATEGORY_ORDER",
    "CATEGORY_TO_INDEX",
    "SCORE_MAX",
    "SCORE_MIN",
    "ClassWeights",
    "clamp_score",
    "compute_class_weights",
    "score_to_category",
    "weighted_mse",
    "PoseTrainConfig",
    "PoseTrainResult",
    "TrailingMeanSelector",
    "load_pose_checkpoint",
    "train_pose_scorer",
]
