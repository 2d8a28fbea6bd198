"""Per-frame guidance cascade: landmarks, pose score, green-clip buffering, LVEF."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from echoguide.errors import SessionError
from echoguide.landmarks.decode import LandmarkPrediction, decode_predictions
from echoguide.landmarks.train import load_landmark_checkpoint
from echoguide.lvef import (
    GATE_MIN_FRAMES,
    LvefConfig,
    LvefEstimate,
    VideoClip,
    estimate_lvef,
    gate_counts,
    load_lvef_checkpoint,
)
from echoguide.pose.channels import build_scorer_input, key_points_from_predictions
from echoguide.pose.scoring import CATEGORY_MIDPOINTS, clamp_score, score_to_category
from echoguide.pose.train import load_pose_checkpoint
from echoguide.rubric import PoseCategory


@dataclass
class GuidanceFrameResult:
    frame_index: int
    category: PoseCategory
    score: float
    landmarks: list[LandmarkPrediction]
    lvef: LvefEstimate | None = None
    latency_ms: float = 0.0
    dropped_count: int = 0

    def to_message(self) -> dict:
        """Wire-protocol result payload."""
        return {
            "type": "result",
            "frame_index": self.frame_index,
            "category": self.category.value,
            "score": self.score,
            "latency_ms": self.latency_ms,
            "dropped_count": self.dropped_count,
            "landmarks": [p.to_dict() for p in self.landmarks],
            "lvef": None
            if self.lvef is None
            else {"value": self.lvef.value, "frame_range": list(self.lvef.frame_range)},
        }


@dataclass
class GreenBuffer:
    """Rolling store of the current consecutive-green run.

    Fires when the run first satisfies the clip gate, then at most once per
    `cadence` additional green frames; any non-green frame clears it. Only
    the trailing `window` frames are kept for estimation, so memory stays
    bounded on long green runs and each firing sees fresh footage.
    """

    fps: float
    cadence: int = GATE_MIN_FRAMES
    window: int = 32
    count: int = 0  # consecutive green frames seen in this run
    emitted_count: int = 0
    _frames: list[np.ndarray] = field(default_factory=list)
    _indices: list[int] = field(default_factory=list)
    _last_fire_count: int | None = None

    def update(self, category: PoseCategory, frame: np.ndarray, frame_index: int) -> bool:
        if category is not PoseCategory.GREEN:
            self.clear()
            return False
        self.count += 1
        self._frames.append(frame)
        self._indices.append(frame_index)
        if len(self._frames) > self.window:
            del self._frames[0]
            del self._indices[0]
        if gate_counts(self.count, self.fps) and (
            self._last_fire_count is None or self.count - self._last_fire_count >= self.cadence
        ):
            self._last_fire_count = self.count
            self.emitted_count += 1
            return True
        return False

    def clear(self) -> None:
        self.count = 0
        self._frames.clear()
        self._indices.clear()
        self._last_fire_count = None

    def as_clip(self) -> VideoClip:
        if not self._frames:
            raise SessionError("green buffer is empty")
        return VideoClip(
            frames=np.stack(self._frames),
            fps=self.fps,
            clip_id=f"green_run@{self._indices[0]}",
            start_frame=self._indices[0],
        )


@dataclass
class ThroughputStats:
    frames_processed: int
    elapsed_seconds: float
    lvef_seconds: float = 0.0  # LVEF share, reported separately

    @property
    def fps(self) -> float:
        resolution = time.get_clock_info("perf_counter").resolution
        return self.frames_processed / max(self.elapsed_seconds, resolution)


class GuidanceSession:
    """One stream's worth of models and state; processing is serialized."""

    def __init__(
        self,
        landmark_model,
        landmark_config,
        pose_model,
        pose_meta: dict,
        lvef_model=None,
        lvef_config: LvefConfig | None = None,
        fps: float = 50.0,
        buffer: GreenBuffer | None = None,
    ):
        if landmark_model is None or pose_model is None:
            raise SessionError("session needs landmark and pose models loaded")
        self.landmark_model = landmark_model
        self.landmark_config = landmark_config
        self.pose_model = pose_model
        self.pose_mode = pose_meta["mode"]
        self.pose_architecture = pose_meta.get("architecture", "regression")
        self.pose_sigma = pose_meta.get("sigma", 2.0)
        pose_hw = tuple(pose_meta.get("input_hw", landmark_config.input_hw))
        if pose_hw != tuple(landmark_config.input_hw):
            raise SessionError(
                f"pose checkpoint resolution {pose_hw} differs from landmark "
                f"checkpoint resolution {tuple(landmark_config.input_hw)}"
            )
        self.lvef_model = lvef_model
        self.lvef_config = lvef_config
        self.fps = fps
        self.buffer = buffer or GreenBuffer(fps=fps)
        self.lvef_time_accum = 0.0

    @classmethod
    def from_checkpoints(
        cls,
        landmark_dir: str | Path,
        pose_dir: str | Path,
        lvef_dir: str | Path | None = None,
        fps: float = 50.0,
    ) -> "GuidanceSession":
        landmark_model, landmark_config = load_landmark_checkpoint(landmark_dir)
        pose_model, pose_meta = load_pose_checkpoint(pose_dir)
        lvef_model = lvef_config = None
        if lvef_dir is not None:
            lvef_model, lvef_config = load_lvef_checkpoint(lvef_dir)
        return cls(
            landmark_model, landmark_config, pose_model, pose_meta,
            lvef_model, lvef_config, fps=fps,
        )

    def process_frame(self, frame: np.ndarray, frame_index: int) -> GuidanceFrameResult:
        """Run the full cascade on one grayscale frame."""
        started = time.perf_counter()
        frame = np.asarray(frame)
        expected = tuple(self.landmark_config.input_hw)
        if frame.shape != expected:
            raise ValueError(
                f"frame shape {frame.shape} does not match checkpoint resolution {expected}"
            )
        if frame.dtype != np.uint8:
            raise ValueError(f"expected uint8 frames, got {frame.dtype}")

        tensor = torch.from_numpy(frame.astype(np.float32) / 255.0).unsqueeze(0)
        self.landmark_model.eval()
        with torch.no_grad():
            logits = self.landmark_model(tensor)
        predictions = decode_predictions(logits, self.landmark_config)[0]

        key_points = key_points_from_predictions(predictions)
        scorer_input = build_scorer_input(
            frame.astype(np.float32) / 255.0,
            None if self.pose_mode == "images_only" else key_points,
            self.pose_mode,
            self.pose_sigma,
        )
        batch = torch.from_numpy(scorer_input).unsqueeze(0)
        with torch.no_grad():
            if self.pose_architecture == "adapter":
                category = self.pose_model.predict_categories(batch)[0]
                score = CATEGORY_MIDPOINTS[category]
            else:
                score = clamp_score(float(self.pose_model.predict_scores(batch)[0]))
                category = score_to_category(score)

        lvef = None
        fired = self.buffer.update(category, frame, frame_index)
        if fired and self.lvef_model is not None:
            lvef_started = time.perf_counter()
            lvef = estimate_lvef(self.lvef_model, self.buffer.as_clip(), self.lvef_config)
            self.lvef_time_accum += time.perf_counter() - lvef_started

        return GuidanceFrameResult(
            frame_index=frame_index,
            category=category,
            score=score,
            landmarks=predictions,
            lvef=lvef,
            latency_ms=(time.perf_counter() - started) * 1e3,
        )


def measure_throughput(session: GuidanceSession, frames: np.ndarray) -> ThroughputStats:
    """End-to-end frames/second over the cascade, model load time excluded.

    LVEF inference time is accumulated separately since the reference
    throughput figure covers detection and scoring only.
    """
    if len(frames) == 0:
        raise ValueError("empty clip")
    lvef_before = session.lvef_time_accum
    started = time.perf_counter()
    for index, frame in enumerate(frames):
        session.process_frame(frame, index)
    elapsed = time.perf_counter() - started
    lvef_elapsed = session.lvef_time_accum - lvef_before
    return ThroughputStats(
        frames_processed=len(frames),
        elapsed_seconds=elapsed - lvef_elapsed,
        lvef_seconds=lvef_elapsed,
    )
