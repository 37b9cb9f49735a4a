"""Framed offload protocol, simulated backends, FIFO service, and client."""
from .backends import (
    DEFAULT_FIXTURES,
    OCR_PROMPT,
    VQA_PROMPT,
    BackendProfile,
    FixtureStore,
    LatencyModel,
    LatencySampler,
    UnknownFixtureError,
    load_profile,
    profile_from_dict,
)
from .client import (
    OffloadClient,
    OffloadConnectionError,
    OffloadError,
    OffloadServerError,
    OffloadTimeoutError,
    call_endpoint,
    parse_endpoint,
)
from .protocol import (
    KIND_FIND,
    KIND_OCR,
    KIND_SCENE,
    KIND_STEER,
    KIND_TICK,
    MAX_FRAME_BYTES,
    ProtocolError,
    Request,
    Response,
    decode_frame,
    decode_request,
    decode_response,
    detection_from_wire,
    detection_to_wire,
    encode_frame,
    encode_request,
    encode_response,
)
from .service import OffloadService, serve

__all__ = [
    "BackendProfile",
    "DEFAULT_FIXTURES",
    "FixtureStore",
    "KIND_FIND",
    "KIND_OCR",
    "KIND_SCENE",
    "KIND_STEER",
    "KIND_TICK",
    "LatencyModel",
    "LatencySampler",
    "MAX_FRAME_BYTES",
    "OCR_PROMPT",
    "OffloadClient",
    "OffloadConnectionError",
    "OffloadError",
    "OffloadServerError",
    "OffloadService",
    "OffloadTimeoutError",
    "ProtocolError",
    "Request",
    "Response",
    "UnknownFixtureError",
    "VQA_PROMPT",
    "call_endpoint",
    "decode_frame",
    "decode_request",
    "decode_response",
    "detection_from_wire",
    "detection_to_wire",
    "encode_frame",
    "encode_request",
    "encode_response",
    "load_profile",
    "parse_endpoint",
    "profile_from_dict",
    "serve",
]
