"""Real-time cascade orchestration and the streaming service."""

from echoguide.pipeline.service import (
    StreamHandler,
    coalesce_messages,
    create_app,
    decode_frame_png,
    encode_frame_png,
    serve_stream,
)
from echoguide.pipeline.session import (
    GreenBuffer,
    GuidanceFrameResult,
    GuidanceSession,
    ThroughputStats,
    measure_throughput,
)

__all__ = [
    "StreamHandler",
    "coalesce_messages",
    "create_app",
    "decode_frame_png",
    "encode_frame_png",
    "serve_stream",
    "GreenBuffer",
    "GuidanceFrameResult",
    "GuidanceSession",
    "ThroughputStats",
    "measure_throughput",
]
