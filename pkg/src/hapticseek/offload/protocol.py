"""Newline-delimited JSON wire protocol for the offload service.

One JSON object per line, UTF-8, canonical form (sorted keys, compact
separators). Canonical encoding makes the round trip ``encode(decode(frame))
== frame`` a byte-exact identity for every valid frame, which is the
protocol's main testable contract. NaN/Infinity are rejected in both
directions.

Request kinds:

* ``find``  - object detection against the server's virtual scene at the
  supplied camera pose;
* ``scene`` - visual question answering over a canned fixture;
* ``ocr``   - text transcription over a canned fixture;
* ``steer`` / ``tick`` - the interactive steering session used by the browser
  UI: ``steer`` nudges the per-connection camera, ``tick`` runs one guidance
  tick and reports phase, distance, pulse pattern and feedback events.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from ..guidance import Detection

MAX_FRAME_BYTES = 1 << 20  # refuse absurd lines before json sees them

KIND_FIND = "find"
KIND_SCENE = "scene"
KIND_OCR = "ocr"
KIND_STEER = "steer"
KIND_TICK = "tick"

REQUEST_KINDS = (KIND_FIND, KIND_SCENE, KIND_OCR, KIND_STEER, KIND_TICK)

_REQUEST_FIELDS = {
    "id", "kind", "target_class", "question", "fixture", "pose", "direction", "gain_deg",
}
_RESPONSE_FIELDS = {
    "id", "result", "error", "server_ms", "queue_ms", "seq", "completed_index", "prompt",
}
_POSE_FIELDS = {"pan_deg", "tilt_deg"}

DIRECTIONS = ("left", "right", "up", "down")


class ProtocolError(ValueError):
    """Raised when a frame cannot be decoded as a valid message."""


@dataclass(frozen=True)
class Request:
    id: str
    kind: str
    target_class: Optional[int] = None
    question: Optional[str] = None
    fixture: Optional[str] = None
    pose: Optional[tuple[float, float]] = None  # (pan_deg, tilt_deg)
    direction: Optional[str] = None
    gain_deg: Optional[float] = None
    # Client-local monotonic send time (seconds); never serialized.
    sent_at: Optional[float] = field(default=None, compare=False)

    def to_wire(self) -> dict[str, Any]:
        msg: dict[str, Any] = {"id": self.id, "kind": self.kind}
        if self.target_class is not None:
            msg["target_class"] = self.target_class
        if self.question is not None:
            msg["question"] = self.question
        if self.fixture is not None:
            msg["fixture"] = self.fixture
        if self.pose is not None:
            msg["pose"] = {"pan_deg": self.pose[0], "tilt_deg": self.pose[1]}
        if self.direction is not None:
            msg["direction"] = self.direction
        if self.gain_deg is not None:
            msg["gain_deg"] = self.gain_deg
        return msg


@dataclass(frozen=True)
class Response:
    id: Optional[str]
    result: Any = None
    error: Optional[str] = None
    server_ms: Optional[float] = None
    queue_ms: Optional[float] = None
    seq: Optional[int] = None
    completed_index: Optional[int] = None
    prompt: Optional[str] = None
    # Filled in by the client from its own clock; never serialized.
    e2e_ms: Optional[float] = field(default=None, compare=False)

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_wire(self) -> dict[str, Any]:
        msg: dict[str, Any] = {"id": self.id}
        for name in ("result", "error", "server_ms", "queue_ms", "seq", "completed_index", "prompt"):
            value = getattr(self, name)
            if value is not None:
                msg[name] = value
        return msg


def encode_frame(obj: dict[str, Any]) -> bytes:
    """Canonical one-line encoding of a message dict."""
    text = json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"), allow_nan=False)
    return text.encode("utf-8") + b"\n"


def _reject_constant(name: str) -> float:
    raise ProtocolError(f"non-finite number in frame: {name}")


def decode_frame(line: bytes | str) -> dict[str, Any]:
    """Parse one line into a message dict, rejecting anything non-JSON-object."""
    if isinstance(line, bytes):
        if len(line) > MAX_FRAME_BYTES:
            raise ProtocolError("frame too large")
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"frame is not UTF-8: {exc}") from None
    else:
        text = line
    text = text.strip()
    if not text:
        raise ProtocolError("empty frame")
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("frame must be a JSON object")
    return obj


def _require_str(obj: dict, key: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise ProtocolError(f"field {key!r} must be a string")
    return value


def _check_finite(value: float, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"field {key!r} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ProtocolError(f"field {key!r} must be finite")
    return value


def decode_request(frame: bytes | str | dict[str, Any]) -> Request:
    obj = frame if isinstance(frame, dict) else decode_frame(frame)
    unknown = set(obj) - _REQUEST_FIELDS
    if unknown:
        raise ProtocolError(f"unknown request fields: {sorted(unknown)}")
    rid = _require_str(obj, "id")
    kind = _require_str(obj, "kind")
    if kind not in REQUEST_KINDS:
        raise ProtocolError(f"unknown kind: {kind!r}")

    target_class = obj.get("target_class")
    if target_class is not None:
        if isinstance(target_class, bool) or not isinstance(target_class, int):
            raise ProtocolError("field 'target_class' must be an integer")

    question = obj.get("question")
    if question is not None and not isinstance(question, str):
        raise ProtocolError("field 'question' must be a string")

    fixture = obj.get("fixture")
    if fixture is not None and not isinstance(fixture, str):
        raise ProtocolError("field 'fixture' must be a string")

    pose = None
    raw_pose = obj.get("pose")
    if raw_pose is not None:
        if not isinstance(raw_pose, dict) or set(raw_pose) != _POSE_FIELDS:
            raise ProtocolError("field 'pose' must be {pan_deg, tilt_deg}")
        pose = (
            _check_finite(raw_pose["pan_deg"], "pose.pan_deg"),
            _check_finite(raw_pose["tilt_deg"], "pose.tilt_deg"),
        )

    direction = obj.get("direction")
    if direction is not None and direction not in DIRECTIONS:
        raise ProtocolError(f"field 'direction' must be one of {DIRECTIONS}")

    gain = obj.get("gain_deg")
    if gain is not None:
        gain = _check_finite(gain, "gain_deg")
        if gain <= 0:
            raise ProtocolError("field 'gain_deg' must be positive")

    return Request(
        id=rid,
        kind=kind,
        target_class=target_class,
        question=question,
        fixture=fixture,
        pose=pose,
        direction=direction,
        gain_deg=gain,
    )


def decode_response(frame: bytes | str | dict[str, Any]) -> Response:
    obj = frame if isinstance(frame, dict) else decode_frame(frame)
    unknown = set(obj) - _RESPONSE_FIELDS
    if unknown:
        raise ProtocolError(f"unknown response fields: {sorted(unknown)}")
    if "id" not in obj:
        raise ProtocolError("response must carry 'id'")
    rid = obj["id"]
    if rid is not None and not isinstance(rid, str):
        raise ProtocolError("field 'id' must be a string or null")
    error = obj.get("error")
    if error is not None and not isinstance(error, str):
        raise ProtocolError("field 'error' must be a string")
    out: dict[str, Any] = {}
    for key in ("server_ms", "queue_ms"):
        if obj.get(key) is not None:
            out[key] = _check_finite(obj[key], key)
    for key in ("seq", "completed_index"):
        value = obj.get(key)
        if value is not None:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ProtocolError(f"field {key!r} must be an integer")
            out[key] = value
    prompt = obj.get("prompt")
    if prompt is not None and not isinstance(prompt, str):
        raise ProtocolError("field 'prompt' must be a string")
    return Response(
        id=rid,
        result=obj.get("result"),
        error=error,
        prompt=prompt,
        **out,
    )


def detection_to_wire(det: Detection) -> dict[str, Any]:
    return {
        "class_id": det.class_id,
        "confidence": det.confidence,
        "bbox": list(det.bbox),
    }


def detection_from_wire(obj: dict[str, Any]) -> Detection:
    try:
        bbox = obj["bbox"]
        return Detection(
            class_id=int(obj["class_id"]),
            confidence=float(obj["confidence"]),
            bbox=(float(bbox[0]), float(bbox[1]), float(bbox[2]), float(bbox[3])),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ProtocolError(f"invalid detection payload: {exc}") from None


def encode_request(req: Request) -> bytes:
    return encode_frame(req.to_wire())


def encode_response(resp: Response) -> bytes:
    return encode_frame(resp.to_wire())
