"""Offload server: framed requests in, strictly FIFO processing, one worker.

Every connection (plain newline-delimited TCP or a browser WebSocket upgrade
on the same port) feeds a single global queue; exactly one worker thread
drains it in arrival order, so completion order always equals arrival order.
Responses carry the arrival sequence number and the completion index, which
makes the FIFO discipline observable on the wire.

Malformed frames never reach the queue: the reader answers them immediately
with an error response and keeps the connection open.
"""
from __future__ import annotations

import base64
import hashlib
import queue
import socket
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..guidance import (
    NUM_CLASSES,
    Direction,
    FrameGeometry,
    GuidanceConfig,
    GuidanceState,
    Haptic,
    LockedTone,
    Speech,
    guidance_tick,
    normalized_center_distance,
    select_target,
)
from ..worldsim import CameraPose, Scene, detect, step_camera
from .backends import (
    OCR_PROMPT,
    VQA_PROMPT,
    BackendProfile,
    FixtureStore,
    LatencySampler,
    UnknownFixtureError,
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
    detection_to_wire,
    encode_frame,
)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_HTTP_METHODS = (b"GET ", b"HEAD ", b"POST ", b"PUT ", b"DELETE ", b"OPTIONS ", b"PATCH ")

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


@dataclass
class _SteerSession:
    """Per-connection virtual camera for the interactive steering mode."""

    pose: CameraPose
    state: GuidanceState = field(default_factory=GuidanceState)
    target_class: Optional[int] = None
    tick_index: int = 0


class _Connection:
    """One client connection; owns the socket write side."""

    def __init__(self, sock: socket.socket, websocket: bool):
        self.sock = sock
        self.websocket = websocket
        self.send_lock = threading.Lock()
        self.closed = False
        self.session: Optional[_SteerSession] = None

    def send_obj(self, obj: dict[str, Any]) -> None:
        payload = encode_frame(obj)
        try:
            with self.send_lock:
                if self.closed:
                    return
                if self.websocket:
                    self.sock.sendall(_ws_encode(0x1, payload.rstrip(b"\n")))
                else:
                    self.sock.sendall(payload)
        except OSError:
            self.closed = True

    def close(self) -> None:
        with self.send_lock:
            self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


@dataclass
class _Job:
    seq: int
    conn: _Connection
    request: Request
    enqueued_at: float


def _ws_encode(opcode: int, payload: bytes) -> bytes:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < 1 << 16:
        header += bytes([126]) + n.to_bytes(2, "big")
    else:
        header += bytes([127]) + n.to_bytes(8, "big")
    return header + payload


def _read_exact(reader, n: int) -> Optional[bytes]:
    data = reader.read(n)
    if data is None or len(data) < n:
        return None
    return data


class OffloadService:
    """Embeddable offload server. Use ``serve()`` for the one-call form."""

    def __init__(
        self,
        port: int = 0,
        host: str = "127.0.0.1",
        profile: BackendProfile | None = None,
        scene: Scene | None = None,
        fixtures: FixtureStore | None = None,
        seed: int = 0,
        scale: float = 1.0,
        frame: FrameGeometry = FrameGeometry(640, 480),
        guidance_config: GuidanceConfig | None = None,
        steer_gain_deg: float = 2.0,
        ui_dir: str | Path | None = None,
    ):
        self.host = host
        self.port = port
        self.profile = (profile or BackendProfile()).scaled(scale)
        self.scene = scene or Scene()
        self.fixtures = fixtures or FixtureStore()
        self.frame = frame
        self.guidance_config = guidance_config or GuidanceConfig()
        self.steer_gain_deg = steer_gain_deg
        self.ui_dir = Path(ui_dir).resolve() if ui_dir is not None else None

        self._sampler = LatencySampler(seed)
        self._queue: "queue.Queue[Optional[_Job]]" = queue.Queue()
        self._listener: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []
        self._conns: set[_Connection] = set()
        self._conns_lock = threading.Lock()
        self._stopping = threading.Event()

        self._seq_lock = threading.Lock()
        self._next_seq = 0
        self._completed = 0
        self._processed_ids: list[str] = []
        self._find_ticks = 0

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "OffloadService":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self.port))
        listener.listen(64)
        self.port = listener.getsockname()[1]
        self._listener = listener

        worker = threading.Thread(target=self._worker_loop, name="offload-worker", daemon=True)
        acceptor = threading.Thread(target=self._accept_loop, name="offload-accept", daemon=True)
        self._threads = [worker, acceptor]
        worker.start()
        acceptor.start()
        return self

    def stop(self) -> None:
        if self._stopping.is_set():
            return
        self._stopping.set()
        if self._listener is not None:
            # shutdown() reliably wakes a thread blocked in accept(); close()
            # alone can leave it stuck on Linux
            try:
                self._listener.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                self._listener.close()
            except OSError:
                pass
        self._queue.put(None)
        with self._conns_lock:
            conns = list(self._conns)
        for conn in conns:
            conn.close()
        for t in self._threads:
            t.join(timeout=5.0)

    def __enter__(self) -> "OffloadService":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    # -- observability -----------------------------------------------------

    @property
    def arrival_count(self) -> int:
        with self._seq_lock:
            return self._next_seq

    @property
    def processed_count(self) -> int:
        with self._seq_lock:
            return self._completed

    @property
    def processed_ids(self) -> list[str]:
        with self._seq_lock:
            return list(self._processed_ids)

    # -- accept / read side --------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                sock, _addr = self._listener.accept()
            except OSError:
                break
            t = threading.Thread(target=self._connection_loop, args=(sock,), daemon=True)
            t.start()

    def _connection_loop(self, sock: socket.socket) -> None:
        reader = sock.makefile("rb")
        conn: Optional[_Connection] = None
        try:
            first = reader.readline(MAX_FRAME_BYTES + 1)
            if not first:
                return
            if first.startswith(_HTTP_METHODS) and b"HTTP/" in first:
                self._handle_http(sock, reader, first)
                return
            conn = _Connection(sock, websocket=False)
            self._register(conn)
            self._ndjson_loop(conn, reader, first)
        except (OSError, ValueError):
            pass
        finally:
            if conn is not None:
                self._unregister(conn)
            try:
                reader.close()
            except OSError:
                pass
            try:
                sock.close()
            except OSError:
                pass

    def _ndjson_loop(self, conn: _Connection, reader, first_line: bytes) -> None:
        line: Optional[bytes] = first_line
        while line:
            if len(line) > MAX_FRAME_BYTES and not line.endswith(b"\n"):
                # Cannot resync an overlong line; report and drop the link.
                conn.send_obj(Response(id=None, error="bad_frame:frame too large").to_wire())
                return
            self._ingest_frame(conn, line)
            if self._stopping.is_set():
                return
            line = reader.readline(MAX_FRAME_BYTES + 1)

    def _ingest_frame(self, conn: _Connection, payload: bytes) -> None:
        if not payload.strip():
            return  # blank keep-alive line
        rid: Optional[str] = None
        try:
            obj = decode_frame(payload)
            if isinstance(obj.get("id"), str):
                rid = obj["id"]
            request = decode_request(obj)
        except ProtocolError as exc:
            conn.send_obj(Response(id=rid, error=f"bad_frame:{exc}").to_wire())
            return
        now = time.monotonic()
        with self._seq_lock:
            seq = self._next_seq
            self._next_seq += 1
        self._queue.put(_Job(seq=seq, conn=conn, request=request, enqueued_at=now))

    def _register(self, conn: _Connection) -> None:
        with self._conns_lock:
            self._conns.add(conn)

    def _unregister(self, conn: _Connection) -> None:
        with self._conns_lock:
            self._conns.discard(conn)

    # -- worker side ---------------------------------------------------------

    def _worker_loop(self) -> None:
        while True:
            job = self._queue.get()
            if job is None:
                return
            started = time.monotonic()
            queue_ms = (started - job.enqueued_at) * 1000.0
            try:
                response = self._execute(job, queue_ms)
            except Exception as exc:  # handler bug: answer, keep serving
                response = Response(id=job.request.id, error=f"internal:{exc}")
            with self._seq_lock:
                completed = self._completed
                self._completed += 1
                self._processed_ids.append(job.request.id)
            payload = response.to_wire()
            payload["seq"] = job.seq
            payload["completed_index"] = completed
            if queue_ms >= 0:
                payload.setdefault("queue_ms", queue_ms)
            if self.profile.network_overhead_s > 0:
                time.sleep(self.profile.network_overhead_s)
            job.conn.send_obj(payload)

    def _execute(self, job: _Job, queue_ms: float) -> Response:
        req = job.request
        if req.kind == KIND_FIND:
            return self._handle_find(req)
        if req.kind in (KIND_SCENE, KIND_OCR):
            return self._handle_text(req)
        if req.kind == KIND_STEER:
            return self._handle_steer(job.conn, req)
        if req.kind == KIND_TICK:
            return self._handle_tick(job.conn, req)
        return Response(id=req.id, error=f"bad_frame:unhandled kind {req.kind}")

    def _simulate_latency(self, kind: str) -> float:
        """Draw the backend processing time, sleep it, return milliseconds."""
        dt = self._sampler.sample_s(self.profile.for_kind(kind))
        if dt > 0:
            time.sleep(dt)
        return dt * 1000.0

    def _handle_find(self, req: Request) -> Response:
        if req.target_class is None or not (0 <= req.target_class < NUM_CLASSES):
            return Response(id=req.id, error="unknown_class")
        pose = self.scene.camera
        if req.pose is not None:
            pose = CameraPose(
                pan_deg=req.pose[0],
                tilt_deg=req.pose[1],
                hfov_deg=self.scene.camera.hfov_deg,
                vfov_deg=self.scene.camera.vfov_deg,
            )
        tick = self._find_ticks
        self._find_ticks += 1
        detections = detect(list(self.scene.objects), pose, self.frame, self.scene.noise, tick)
        server_ms = self._simulate_latency(KIND_FIND)
        result = [detection_to_wire(d) for d in detections]
        return Response(id=req.id, result=result, server_ms=server_ms)

    def _handle_text(self, req: Request) -> Response:
        try:
            text = self.fixtures.get(req.fixture)
        except UnknownFixtureError:
            return Response(id=req.id, error="unknown_fixture")
        if req.kind == KIND_OCR:
            prompt = OCR_PROMPT
        else:
            prompt = req.question if req.question is not None else VQA_PROMPT
        server_ms = self._simulate_latency(req.kind)
        return Response(id=req.id, result=text, server_ms=server_ms, prompt=prompt)

    def _session(self, conn: _Connection) -> _SteerSession:
        if conn.session is None:
            conn.session = _SteerSession(
                pose=self.scene.camera,
                target_class=self.scene.target_class,
            )
        return conn.session

    def _handle_steer(self, conn: _Connection, req: Request) -> Response:
        session = self._session(conn)
        if req.direction is None:
            return Response(id=req.id, error="bad_steer:missing direction")
        gain = req.gain_deg if req.gain_deg is not None else self.steer_gain_deg
        session.pose = step_camera(session.pose, Direction(req.direction), gain)
        result = {"pose": {"pan_deg": session.pose.pan_deg, "tilt_deg": session.pose.tilt_deg}}
        return Response(id=req.id, result=result, server_ms=0.0)

    def _handle_tick(self, conn: _Connection, req: Request) -> Response:
        session = self._session(conn)
        if req.target_class is not None:
            if not (0 <= req.target_class < NUM_CLASSES):
                return Response(id=req.id, error="unknown_class")
            session.target_class = req.target_class
        if session.target_class is None:
            return Response(id=req.id, error="no_target")
        detections = detect(
            list(self.scene.objects), session.pose, self.frame, self.scene.noise, session.tick_index
        )
        session.tick_index += 1
        new_state, events = guidance_tick(
            detections,
            session.target_class,
            self.frame,
            session.state,
            self.guidance_config,
            now_ms=time.monotonic() * 1000.0,
        )
        session.state = new_state

        target = select_target([d for d in detections if d.is_wellformed(self.frame)],
                               session.target_class)
        d = normalized_center_distance(target, self.frame) if target is not None else None
        wire_events: list[dict[str, Any]] = []
        pattern = None
        speech_text = None
        locked_tone = False
        for ev in events:
            if isinstance(ev, Haptic):
                pattern = {
                    "on_ms": ev.pattern.on_ms,
                    "off_ms": ev.pattern.off_ms,
                    "continuous": ev.pattern.continuous,
                }
                wire_events.append({"type": "haptic", "pattern": pattern})
            elif isinstance(ev, Speech):
                speech_text = ev.text
                wire_events.append(
                    {"type": "speech", "text": ev.text, "direction": ev.direction.value}
                )
            elif isinstance(ev, LockedTone):
                locked_tone = True
                wire_events.append({"type": "locked_tone"})
        result = {
            "phase": new_state.phase.value,
            "direction": new_state.direction.value if new_state.direction else None,
            "d": d,
            "pattern": pattern,
            "speech": speech_text,
            "locked_tone": locked_tone,
            "pose": {"pan_deg": session.pose.pan_deg, "tilt_deg": session.pose.tilt_deg},
            "detections": [detection_to_wire(x) for x in detections],
        }
        return Response(id=req.id, result=result, server_ms=0.0)

    # -- http / websocket ----------------------------------------------------

    def _handle_http(self, sock: socket.socket, reader, request_line: bytes) -> None:
        headers: dict[bytes, bytes] = {}
        while True:
            line = reader.readline(8192)
            if not line or line in (b"\r\n", b"\n"):
                break
            key, _, value = line.partition(b":")
            headers[key.strip().lower()] = value.strip()

        parts = request_line.split()
        if len(parts) < 2:
            self._send_http(sock, 400, b"bad request")
            return
        method, raw_path = parts[0], parts[1]

        upgrade = headers.get(b"upgrade", b"").lower()
        if method == b"GET" and upgrade == b"websocket":
            key = headers.get(b"sec-websocket-key")
            if not key:
                self._send_http(sock, 400, b"missing websocket key")
                return
            accept = base64.b64encode(
                hashlib.sha1(key + _WS_GUID.encode("ascii")).digest()
            )
            sock.sendall(
                b"HTTP/1.1 101 Switching Protocols\r\n"
                b"Upgrade: websocket\r\n"
                b"Connection: Upgrade\r\n"
                b"Sec-WebSocket-Accept: " + accept + b"\r\n\r\n"
            )
            conn = _Connection(sock, websocket=True)
            self._register(conn)
            try:
                self._websocket_loop(conn, reader)
            finally:
                self._unregister(conn)
            return

        if method in (b"GET", b"HEAD"):
            self._serve_static(sock, raw_path, head_only=method == b"HEAD")
        else:
            self._send_http(sock, 405, b"method not allowed")

    def _websocket_loop(self, conn: _Connection, reader) -> None:
        buffered: list[bytes] = []
        while not self._stopping.is_set():
            head = _read_exact(reader, 2)
            if head is None:
                return
            fin = bool(head[0] & 0x80)
            opcode = head[0] & 0x0F
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                raw = _read_exact(reader, 2)
                if raw is None:
                    return
                length = int.from_bytes(raw, "big")
            elif length == 127:
                raw = _read_exact(reader, 8)
                if raw is None:
                    return
                length = int.from_bytes(raw, "big")
            if length > MAX_FRAME_BYTES:
                conn.send_obj(Response(id=None, error="bad_frame:frame too large").to_wire())
                return
            mask = b""
            if masked:
                mask = _read_exact(reader, 4) or b""
                if len(mask) < 4:
                    return
            payload = _read_exact(reader, length) if length else b""
            if payload is None:
                return
            if masked:
                payload = bytes(b ^ mask[i & 3] for i, b in enumerate(payload))

            if opcode == 0x8:  # close
                with conn.send_lock:
                    if not conn.closed:
                        try:
                            conn.sock.sendall(_ws_encode(0x8, b""))
                        except OSError:
                            pass
                return
            if opcode == 0x9:  # ping -> pong
                with conn.send_lock:
                    if not conn.closed:
                        try:
                            conn.sock.sendall(_ws_encode(0xA, payload))
                        except OSError:
                            pass
                continue
            if opcode == 0xA:  # unsolicited pong
                continue
            if opcode in (0x1, 0x2, 0x0):
                buffered.append(payload)
                if not fin:
                    continue
                message = b"".join(buffered)
                buffered = []
                self._ingest_frame(conn, message + b"\n")
                continue
            conn.send_obj(Response(id=None, error=f"bad_frame:opcode {opcode}").to_wire())

    def _serve_static(self, sock: socket.socket, raw_path: bytes, head_only: bool) -> None:
        if self.ui_dir is None:
            self._send_http(sock, 404, b"no ui configured")
            return
        try:
            path = raw_path.decode("utf-8", "replace").split("?", 1)[0]
        except Exception:
            self._send_http(sock, 400, b"bad path")
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir) + "/") and target != self.ui_dir:
            self._send_http(sock, 404, b"not found")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_http(sock, 404, b"not found")
            return
        body = target.read_bytes()
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self._send_http(sock, 200, body, ctype, head_only=head_only)

    @staticmethod
    def _send_http(
        sock: socket.socket,
        status: int,
        body: bytes,
        content_type: str = "text/plain; charset=utf-8",
        head_only: bool = False,
    ) -> None:
        reason = {200: "OK", 400: "Bad Request", 404: "Not Found", 405: "Method Not Allowed"}
        head = (
            f"HTTP/1.1 {status} {reason.get(status, 'Error')}\r\n"
            f"Content-Type: {content_type}\r\n"
            f"Content-Length: {len(body)}\r\n"
            f"Connection: close\r\n\r\n"
        ).encode("ascii")
        try:
            sock.sendall(head if head_only else head + body)
        except OSError:
            pass


def serve(
    port: int = 0,
    profile: BackendProfile | None = None,
    scene: Scene | None = None,
    fixtures: FixtureStore | None = None,
    seed: int = 0,
    **kwargs: Any,
) -> OffloadService:
    """Start an offload service and return its handle."""
    service = OffloadService(
        port=port, profile=profile, scene=scene, fixtures=fixtures, seed=seed, **kwargs
    )
    return service.start()
