"""Sweep recordings: labeled drift clips and their continuous pose scores.

A sweep starts at the optimal A4CH pose (first frame green) and drifts away.
Each frame carries a green/yellow/red label and, optionally, the rubric
deductions that justify it. Continuous regression targets are assigned per
maximal run of one category: green interpolates 1 -> 0, yellow 0 -> -1,
red -1 -> -2, with singleton runs taking the midpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from echoguide.errors import ConsistencyError, ParseError
from echoguide.rubric import (
    PoseCategory,
    RubricCriterion,
    categorize_criteria,
    parse_criterion,
)
from echoguide.ingest.video import read_video

# (start, end) score of a maximal run per category.
RUN_ENDPOINTS = {
    PoseCategory.GREEN: (1.0, 0.0),
    PoseCategory.YELLOW: (0.0, -1.0),
    PoseCategory.RED: (-1.0, -2.0),
}


@dataclass
class SweepRecording:
    subject_id: str
    sweep_id: str
    device: str
    fps: float
    frame_categories: list[PoseCategory]
    frame_deductions: list[list[RubricCriterion]] | None = None
    video_path: Path | None = None
    frames: np.ndarray | None = None

    def __post_init__(self):
        if self.fps <= 0:
            raise ParseError(f"sweep {self.sweep_id}: fps must be positive")
        if not self.frame_categories:
            raise ParseError(f"sweep {self.sweep_id}: empty label list")
        if self.frame_categories[0] is not PoseCategory.GREEN:
            raise ParseError(
                f"sweep {self.sweep_id}: first frame must be green "
                "(protocol starts at the optimal pose)"
            )
        if self.frame_deductions is not None and len(self.frame_deductions) != len(
            self.frame_categories
        ):
            raise ParseError(
                f"sweep {self.sweep_id}: {len(self.frame_deductions)} deduction lists "
                f"for {len(self.frame_categories)} labels"
            )
        if self.frames is not None and len(self.frames) != len(self.frame_categories):
            raise ParseError(
                f"sweep {self.sweep_id}: {len(self.frame_categories)} labels "
                f"for {len(self.frames)} frames"
            )

    def __len__(self) -> int:
        return len(self.frame_categories)

    def load_frames(self) -> np.ndarray:
        if self.frames is None:
            if self.video_path is None:
                raise ParseError(f"sweep {self.sweep_id}: no video path to load frames from")
            frames = read_video(self.video_path)
            if len(frames) != len(self.frame_categories):
                raise ParseError(
                    f"sweep {self.sweep_id}: {len(self.frame_categories)} labels "
                    f"for {len(frames)} video frames"
                )
            self.frames = frames
        return self.frames


def parse_sweep_manifest(
    manifest: str | Path, load_frames: bool = True
) -> list[SweepRecording]:
    """Parse a sweep manifest (one JSON object or a list of them).

    When deduction lists are present, every frame's category label is checked
    against the rubric; a mismatch is a consistency error naming the frame.
    With ``load_frames`` the video is decoded and the label count checked
    against the frame count.
    """
    manifest = Path(manifest)
    try:
        payload = json.loads(manifest.read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{manifest}: invalid JSON ({err})") from err
    entries = payload if isinstance(payload, list) else [payload]

    recordings = []
    for entry in entries:
        recordings.append(_parse_entry(entry, manifest, load_frames))
    return recordings


def _parse_entry(entry: dict, manifest: Path, load_frames: bool) -> SweepRecording:
    for key in ("subject_id", "sweep_id", "device", "fps", "video", "labels"):
        if key not in entry:
            raise ParseError(f"{manifest}: sweep entry missing field {key!r}")
    sweep_id = str(entry["sweep_id"])

    try:
        categories = [PoseCategory(token) for token in entry["labels"]]
    except ValueError as err:
        raise ParseError(f"{manifest}: sweep {sweep_id}: {err}") from None

    deductions = None
    if entry.get("deductions") is not None:
        deductions = [
            [parse_criterion(token) for token in frame_tokens]
            for frame_tokens in entry["deductions"]
        ]
        if len(deductions) != len(categories):
            raise ParseError(
                f"{manifest}: sweep {sweep_id}: {len(deductions)} deduction lists "
                f"for {len(categories)} labels"
            )
        for index, (category, frame_criteria) in enumerate(zip(categories, deductions)):
            implied = categorize_criteria(frame_criteria)
            if implied is not category:
                raise ConsistencyError(
                    f"{manifest}: sweep {sweep_id} frame {index}: labeled "
                    f"{category.value} but rubric gives {implied.value}"
                )

    video_path = Path(entry["video"])
    if not video_path.is_absolute():
        video_path = manifest.parent / video_path

    recording = SweepRecording(
        subject_id=str(entry["subject_id"]),
        sweep_id=sweep_id,
        device=str(entry["device"]),
        fps=float(entry["fps"]),
        frame_categories=categories,
        frame_deductions=deductions,
        video_path=video_path,
    )
    if load_frames:
        recording.load_frames()
    return recording


def serialize_sweep_manifest(
    recordings: list[SweepRecording], path: str | Path
) -> None:
    """Write recordings back to manifest JSON (inverse of parsing)."""
    path = Path(path)
    entries = []
    for recording in recordings:
        video = recording.video_path
        entry = {
            "subject_id": recording.subject_id,
            "sweep_id": recording.sweep_id,
            "device": recording.device,
            "fps": recording.fps,
            "video": str(video) if video is not None else None,
            "labels": [c.value for c in recording.frame_categories],
        }
        if recording.frame_deductions is not None:
            entry["deductions"] = [
                [criterion.value for criterion in frame]
                for frame in recording.frame_deductions
            ]
        entries.append(entry)
    payload = entries[0] if len(entries) == 1 else entries
    path.write_text(json.dumps(payload, indent=2))


def interpolate_run_scores(categories: list[PoseCategory]) -> np.ndarray:
    """Per-frame continuous scores from category labels.

    Within each maximal run of one category, scores interpolate linearly from
    the category's start value to its end value; a length-1 run takes the
    midpoint.
    """
    scores = np.empty(len(categories), dtype=np.float64)
    start = 0
    while start < len(categories):
        end = start
        while end + 1 < len(categories) and categories[end + 1] is categories[start]:
            end += 1
        lo, hi = RUN_ENDPOINTS[categories[start]]
        length = end - start + 1
        if length == 1:
            scores[start] = (lo + hi) / 2.0
        else:
            # direct formula, not linspace: the rounded value of
            # lo + (hi - lo) * k/d is what any independent reimplementation
            # computes, so downstream exact comparisons stay stable
            steps = np.arange(length, dtype=np.float64)
            scores[start : end + 1] = lo + (hi - lo) * steps / (length - 1)
        start = end + 1
    return scores


def assign_continuous_scores(sweep: SweepRecording) -> np.ndarray:
    """Regression ground truth for a sweep (one score per frame)."""
    return interpolate_run_scores(sweep.frame_categories)
