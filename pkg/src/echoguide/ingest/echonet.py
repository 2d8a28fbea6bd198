"""EchoNet-style annotation tables.

Two CSV tables drive landmark training: a file table (FileName, EF, Split)
listing clips, and a tracing table (FileName, X1, Y1, X2, Y2, Frame) with 21
segment rows per annotated frame. Row order within a frame defines the 42
contour landmark ids: row k contributes ids 2k (X1, Y1) and 2k+1 (X2, Y2).
An auxiliary table (FileName, Frame, Landmark, X, Y, Visibility) adds the
five chamber landmarks with explicit visibility scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from echoguide import schema
from echoguide.errors import MalformedAnnotationError, ParseError
from echoguide.ingest.video import read_video

SPLITS = ("train", "val", "test")
SEGMENTS_PER_FRAME = 21

Point = tuple[float, float]


@dataclass
class EchoNetClip:
    clip_id: str
    ef_label: float
    split: str
    fps: float = 50.0
    video_path: Path | None = None
    frames: np.ndarray | None = None  # (T, H, W) uint8, loaded on demand

    def __post_init__(self):
        if not 0.0 <= self.ef_label <= 100.0:
            raise ParseError(f"{self.clip_id}: EF {self.ef_label} outside [0, 100]")
        if self.fps <= 0:
            raise ParseError(f"{self.clip_id}: fps must be positive, got {self.fps}")
        if self.split not in SPLITS:
            raise ParseError(f"{self.clip_id}: unknown split token {self.split!r}")

    def load_frames(self) -> np.ndarray:
        if self.frames is None:
            if self.video_path is None:
                raise ParseError(f"{self.clip_id}: no video path to load frames from")
            self.frames = read_video(self.video_path)
        return self.frames


@dataclass
class LandmarkAnnotation:
    clip_id: str
    frame_index: int
    points: dict[str, Point] = field(default_factory=dict)
    visibility: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_index < 0:
            raise ParseError(f"{self.clip_id}: negative frame index {self.frame_index}")
        for name in self.points:
            if name not in schema.LANDMARK_INDEX:
                raise ParseError(f"{self.clip_id}: unknown landmark id {name!r}")
            if name not in self.visibility:
                raise ParseError(
                    f"{self.clip_id} frame {self.frame_index}: "
                    f"landmark {name!r} has no visibility score"
                )
        for name, vis in self.visibility.items():
            if vis not in schema.VISIBILITY_LEVELS:
                raise ParseError(
                    f"{self.clip_id} frame {self.frame_index}: "
                    f"visibility {vis} for {name!r} not in {schema.VISIBILITY_LEVELS}"
                )


def _require_columns(table: pd.DataFrame, columns: list[str], path) -> None:
    missing = [c for c in columns if c not in table.columns]
    if missing:
        raise ParseError(f"{path}: missing columns {missing} (have {list(table.columns)})")


def _clip_id(filename: str) -> str:
    return Path(str(filename)).stem


def parse_echonet_annotations(
    file_table: str | Path,
    tracing_table: str | Path,
    videos_dir: str | Path | None = None,
    default_fps: float = 50.0,
) -> tuple[list[EchoNetClip], list[LandmarkAnnotation]]:
    """Parse the clip list and the per-frame contour tracings.

    Each annotated frame must contribute exactly 21 tracing rows (42 contour
    endpoints). Contour points default to visibility 1. When an FPS column is
    present in the file table it is used, otherwise ``default_fps``.
    """
    files = pd.read_csv(file_table)
    _require_columns(files, ["FileName", "EF", "Split"], file_table)

    clips = []
    for row in files.itertuples(index=False):
        clip_id = _clip_id(row.FileName)
        split = str(row.Split).strip().lower()
        if split not in SPLITS:
            raise ParseError(f"{file_table}: unknown split token {row.Split!r} for {clip_id}")
        fps = float(getattr(row, "FPS", default_fps) or default_fps)
        video_path = None
        if videos_dir is not None:
            video_path = _resolve_video(Path(videos_dir), str(row.FileName))
        clips.append(
            EchoNetClip(
                clip_id=clip_id,
                ef_label=float(row.EF),
                split=split,
                fps=fps,
                video_path=video_path,
            )
        )

    tracings = pd.read_csv(tracing_table)
    _require_columns(tracings, ["FileName", "X1", "Y1", "X2", "Y2", "Frame"], tracing_table)

    annotations = []
    for (filename, frame), group in tracings.groupby(["FileName", "Frame"], sort=False):
        clip_id = _clip_id(filename)
        if len(group) != SEGMENTS_PER_FRAME:
            raise MalformedAnnotationError(
                f"{clip_id} frame {frame}: expected {SEGMENTS_PER_FRAME} tracing rows, "
                f"got {len(group)}"
            )
        points: dict[str, Point] = {}
        for k, row in enumerate(group.itertuples(index=False)):
            points[schema.LANDMARK_NAMES[2 * k]] = (float(row.X1), float(row.Y1))
            points[schema.LANDMARK_NAMES[2 * k + 1]] = (float(row.X2), float(row.Y2))
        annotations.append(
            LandmarkAnnotation(
                clip_id=clip_id,
                frame_index=int(frame),
                points=points,
                visibility={name: 1 for name in points},
            )
        )
    return clips, annotations


def _resolve_video(videos_dir: Path, filename: str) -> Path:
    candidate = videos_dir / filename
    if candidate.suffix:
        return candidate
    for ext in (".avi", ".npy", ".npz", ".mp4"):
        with_ext = candidate.with_suffix(ext)
        if with_ext.exists():
            return with_ext
    return candidate.with_suffix(".avi")


def parse_auxiliary_landmarks(aux_table: str | Path) -> list[LandmarkAnnotation]:
    """Parse the 5-landmark auxiliary table (RV, RA, LA, TV, TVA)."""
    table = pd.read_csv(aux_table)
    _require_columns(table, ["FileName", "Frame", "Landmark", "X", "Y", "Visibility"], aux_table)

    by_frame: dict[tuple[str, int], LandmarkAnnotation] = {}
    for row in table.itertuples(index=False):
        clip_id = _clip_id(row.FileName)
        frame = int(row.Frame)
        name = str(row.Landmark).strip()
        if name not in schema.AUX_LANDMARKS:
            raise ParseError(
                f"{aux_table}: unknown landmark name {name!r} "
                f"(expected one of {schema.AUX_LANDMARKS})"
            )
        vis = int(row.Visibility)
        if vis not in schema.VISIBILITY_LEVELS:
            raise ParseError(
                f"{aux_table}: visibility {vis} for {clip_id} frame {frame} "
                f"not in {schema.VISIBILITY_LEVELS}"
            )
        key = (clip_id, frame)
        annotation = by_frame.setdefault(
            key, LandmarkAnnotation(clip_id=clip_id, frame_index=frame)
        )
        if name in annotation.points:
            raise ParseError(
                f"{aux_table}: duplicate row for ({clip_id}, {frame}, {name})"
            )
        annotation.points[name] = (float(row.X), float(row.Y))
        annotation.visibility[name] = vis
    return list(by_frame.values())


def merge_annotations(
    base: list[LandmarkAnnotation], extra: list[LandmarkAnnotation]
) -> list[LandmarkAnnotation]:
    """Merge auxiliary landmarks into contour annotations per (clip, frame).

    Frames present only in ``extra`` are kept as standalone annotations.
    """
    merged: dict[tuple[str, int], LandmarkAnnotation] = {}
    for annotation in base:
        merged[(annotation.clip_id, annotation.frame_index)] = LandmarkAnnotation(
            clip_id=annotation.clip_id,
            frame_index=annotation.frame_index,
            points=dict(annotation.points),
            visibility=dict(annotation.visibility),
        )
    for annotation in extra:
        key = (annotation.clip_id, annotation.frame_index)
        if key not in merged:
            merged[key] = LandmarkAnnotation(
                clip_id=annotation.clip_id,
                frame_index=annotation.frame_index,
                points=dict(annotation.points),
                visibility=dict(annotation.visibility),
            )
            continue
        target = merged[key]
        for name, point in annotation.points.items():
            target.points[name] = point
            target.visibility[name] = annotation.visibility[name]
    return list(merged.values())
