"""Streaming guidance service speaking the JSON wire protocol.

Client messages:
  {type:"frame", session_id, frame_index, timestamp_ms, image_b64}
  {type:"open_playback", sweep_path}
  {type:"close", session_id}
Server messages:
  {type:"result", frame_index, category, score, latency_ms, dropped_count,
   landmarks:[{id, x, y, radius, visible}], lvef: null|{value, frame_range}}
  {type:"error", code, detail}

Playback result messages additionally carry the source frame as image_b64,
and a terminal {type:"playback_done", sweep_id, frame_count} marker, so a
viewer can render and scrub a recorded sweep without separate file access.
"""

from __future__ import annotations

import asyncio
import base64
import binascii
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import cv2
import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from echoguide.ingest.sweeps import parse_sweep_manifest
from echoguide.pipeline.session import GuidanceSession

log = logging.getLogger(__name__)

ERR_MALFORMED = "malformed"
ERR_OUT_OF_ORDER = "out_of_order"
ERR_SESSION_NOT_FOUND = "session_not_found"


def decode_frame_png(image_b64: str) -> np.ndarray:
    """Base64 PNG payload to a (H, W) uint8 frame."""
    try:
        data = base64.b64decode(image_b64, validate=True)
    except (binascii.Error, ValueError) as err:
        raise ValueError(f"invalid base64 image payload: {err}") from err
    frame = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_GRAYSCALE)
    if frame is None:
        raise ValueError("image payload is not a decodable image")
    return frame


def encode_frame_png(frame: np.ndarray) -> str:
    ok, buf = cv2.imencode(".png", np.asarray(frame, dtype=np.uint8))
    if not ok:
        raise ValueError("could not encode frame as PNG")
    return base64.b64encode(buf.tobytes()).decode("ascii")


def coalesce_messages(batch: list[dict]) -> tuple[list[dict], Counter]:
    """Latest-frame-wins backpressure: within a drained backlog, keep only
    the newest frame message per session and count the superseded ones.
    Control messages always survive."""
    last_frame_pos: dict[str, int] = {}
    for position, message in enumerate(batch):
        if message.get("type") == "frame" and "session_id" in message:
            last_frame_pos[message["session_id"]] = position
    keep: list[dict] = []
    dropped: Counter = Counter()
    for position, message in enumerate(batch):
        sid = message.get("session_id")
        if (
            message.get("type") == "frame"
            and sid in last_frame_pos
            and last_frame_pos[sid] != position
        ):
            dropped[sid] += 1
        else:
            keep.append(message)
    return keep, dropped


@dataclass
class _SessionRecord:
    session: GuidanceSession
    last_index: int | None = None
    closed: bool = False
    pending_dropped: int = 0
    log_path: Path | None = None


class StreamHandler:
    """Per-connection protocol state machine; transport-agnostic so the
    logic is testable without a socket."""

    def __init__(
        self,
        session_factory: Callable[[], GuidanceSession],
        sweep_root: Path | None = None,
        log_dir: Path | None = None,
    ):
        self.session_factory = session_factory
        self.sweep_root = Path(sweep_root) if sweep_root else None
        self.log_dir = Path(log_dir) if log_dir else None
        self.records: dict[str, _SessionRecord] = {}

    def _error(self, code: str, detail: str) -> dict:
        return {"type": "error", "code": code, "detail": detail}

    def _log_result(self, record: _SessionRecord, message: dict) -> None:
        if record.log_path is not None:
            with record.log_path.open("a") as handle:
                handle.write(json.dumps(message) + "\n")

    def _record_for(self, session_id: str) -> _SessionRecord:
        record = self.records.get(session_id)
        if record is None:
            record = _SessionRecord(session=self.session_factory())
            if self.log_dir is not None:
                self.log_dir.mkdir(parents=True, exist_ok=True)
                record.log_path = self.log_dir / f"{session_id}.jsonl"
            self.records[session_id] = record
        return record

    def note_dropped(self, dropped: Counter) -> None:
        for session_id, count in dropped.items():
            record = self.records.get(session_id)
            if record is not None and not record.closed:
                record.pending_dropped += count
            else:
                # dropped before the session ever produced a result
                self._record_for(session_id).pending_dropped += count

    def handle(self, message: dict) -> list[dict]:
        """Process one parsed client message; returns reply messages."""
        kind = message.get("type")
        if kind == "frame":
            return self._handle_frame(message)
        if kind == "open_playback":
            return self._handle_playback(message)
        if kind == "close":
            return self._handle_close(message)
        return [self._error(ERR_MALFORMED, f"unknown message type {kind!r}")]

    def _handle_frame(self, message: dict) -> list[dict]:
        session_id = message.get("session_id")
        frame_index = message.get("frame_index")
        if not isinstance(session_id, str) or not session_id:
            return [self._error(ERR_MALFORMED, "frame message needs a session_id string")]
        if not isinstance(frame_index, int) or isinstance(frame_index, bool):
            return [self._error(ERR_MALFORMED, "frame message needs an integer frame_index")]
        if not isinstance(message.get("image_b64"), str):
            return [self._error(ERR_MALFORMED, "frame message needs an image_b64 string")]

        existing = self.records.get(session_id)
        if existing is not None and existing.closed:
            return [self._error(ERR_SESSION_NOT_FOUND, f"session {session_id!r} is closed")]
        record = self._record_for(session_id)
        if record.last_index is not None and frame_index <= record.last_index:
            return [
                self._error(
                    ERR_OUT_OF_ORDER,
                    f"frame_index {frame_index} after {record.last_index} "
                    f"in session {session_id!r}",
                )
            ]
        try:
            frame = decode_frame_png(message["image_b64"])
            result = record.session.process_frame(frame, frame_index)
        except ValueError as err:
            return [self._error(ERR_MALFORMED, str(err))]
        record.last_index = frame_index
        payload = result.to_message()
        payload["dropped_count"] = record.pending_dropped
        record.pending_dropped = 0
        self._log_result(record, payload)
        return [payload]

    def _handle_playback(self, message: dict) -> list[dict]:
        sweep_path = message.get("sweep_path")
        if not isinstance(sweep_path, str) or not sweep_path:
            return [self._error(ERR_MALFORMED, "open_playback needs a sweep_path string")]
        path = Path(sweep_path)
        if self.sweep_root is not None:
            path = (self.sweep_root / path).resolve()
            if not str(path).startswith(str(self.sweep_root.resolve())):
                return [self._error(ERR_MALFORMED, "sweep_path escapes the sweep root")]
        if not path.exists():
            return [self._error(ERR_SESSION_NOT_FOUND, f"no sweep at {sweep_path!r}")]
        try:
            sweeps = parse_sweep_manifest(path)
        except Exception as err:
            return [self._error(ERR_MALFORMED, f"unreadable sweep: {err}")]
        sweep = sweeps[0]

        record = _SessionRecord(session=self.session_factory())
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            record.log_path = self.log_dir / f"playback-{sweep.sweep_id}.jsonl"
        replies = []
        for index, frame in enumerate(sweep.load_frames()):
            try:
                result = record.session.process_frame(frame, index)
            except ValueError as err:
                replies.append(self._error(ERR_MALFORMED, f"frame {index}: {err}"))
                continue
            payload = result.to_message()
            payload["image_b64"] = encode_frame_png(frame)
            self._log_result(record, payload)
            replies.append(payload)
        replies.append(
            {
                "type": "playback_done",
                "sweep_id": sweep.sweep_id,
                "frame_count": len(sweep.frame_categories),
            }
        )
        return replies

    def _handle_close(self, message: dict) -> list[dict]:
        session_id = message.get("session_id")
        record = self.records.get(session_id) if isinstance(session_id, str) else None
        if record is None:
            return [self._error(ERR_SESSION_NOT_FOUND, f"no session {session_id!r} to close")]
        record.closed = True
        return []


def create_app(
    session_factory: Callable[[], GuidanceSession],
    sweep_root: str | Path | None = None,
    log_dir: str | Path | None = None,
):
    """FastAPI application exposing the wire protocol at /stream."""
    app = FastAPI(title="echoguide")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.websocket("/stream")
    async def stream(websocket: WebSocket):
        await websocket.accept()
        handler = StreamHandler(session_factory, sweep_root, log_dir)
        queue: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    await queue.put(await websocket.receive_text())
            except WebSocketDisconnect:
                await queue.put(None)

        reader_task = asyncio.create_task(reader())
        try:
            while True:
                first = await queue.get()
                if first is None:
                    break
                raw_batch = [first]
                while True:
                    try:
                        nxt = queue.get_nowait()
                    except asyncio.QueueEmpty:
                        break
                    if nxt is None:
                        raw_batch.append(None)
                        break
                    raw_batch.append(nxt)
                disconnected = raw_batch and raw_batch[-1] is None
                if disconnected:
                    raw_batch.pop()

                parsed = []
                for raw in raw_batch:
                    try:
                        message = json.loads(raw)
                        if not isinstance(message, dict):
                            raise ValueError("message must be a JSON object")
                    except ValueError as err:
                        await websocket.send_json(
                            {"type": "error", "code": ERR_MALFORMED, "detail": str(err)}
                        )
                        continue
                    parsed.append(message)

                keep, dropped = coalesce_messages(parsed)
                handler.note_dropped(dropped)
                for message in keep:
                    for reply in handler.handle(message):
                        await websocket.send_json(reply)
                if disconnected:
                    break
        except WebSocketDisconnect:
            pass
        finally:
            reader_task.cancel()

    return app


def serve_stream(
    session_factory: Callable[[], GuidanceSession],
    port: int = 8765,
    host: str = "127.0.0.1",
    sweep_root: str | Path | None = None,
    log_dir: str | Path | None = None,
) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(session_factory, sweep_root=sweep_root, log_dir=log_dir)
    uvicorn.run(app, host=host, port=port)
