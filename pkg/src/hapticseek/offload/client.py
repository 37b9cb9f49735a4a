"""Blocking line-protocol client for the offload service.

``send``/``recv`` are exposed separately so callers can pipeline several
requests on one connection; ``call`` is the common send-then-wait form.
End-to-end time is measured on this side of the socket (send start to
response fully read) and attached to the Response as ``e2e_ms``.
"""
from __future__ import annotations

import socket
import time
from dataclasses import replace
from typing import Optional

from .protocol import MAX_FRAME_BYTES, ProtocolError, Request, Response, decode_response, encode_request


class OffloadError(Exception):
    """Base class for client-side offload failures."""


class OffloadConnectionError(OffloadError):
    pass


class OffloadTimeoutError(OffloadError):
    pass


class OffloadServerError(OffloadError):
    """The service answered with an error code instead of a result."""

    def __init__(self, response: Response):
        super().__init__(response.error or "unknown error")
        self.response = response
        self.code = (response.error or "").split(":", 1)[0]


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)


class OffloadClient:
    def __init__(self, host: str = "127.0.0.1", port: int = 0, timeout_s: float = 30.0):
        self.host = host
        self.port = port
        self.timeout_s = timeout_s
        self._sock: Optional[socket.socket] = None
        self._reader = None
        self._sent_at: dict[str, float] = {}

    @classmethod
    def from_endpoint(cls, endpoint: str, timeout_s: float = 30.0) -> "OffloadClient":
        host, port = parse_endpoint(endpoint)
        return cls(host=host, port=port, timeout_s=timeout_s)

    def connect(self) -> "OffloadClient":
        try:
            sock = socket.create_connection((self.host, self.port), timeout=self.timeout_s)
        except OSError as exc:
            raise OffloadConnectionError(f"cannot reach {self.host}:{self.port}: {exc}") from exc
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self._reader = sock.makefile("rb")
        return self

    def close(self) -> None:
        if self._reader is not None:
            try:
                self._reader.close()
            except OSError:
                pass
            self._reader = None
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
            self._sock = None

    def __enter__(self) -> "OffloadClient":
        if self._sock is None:
            self.connect()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- wire primitives -----------------------------------------------------

    def send(self, request: Request) -> None:
        if self._sock is None:
            raise OffloadConnectionError("client is not connected")
        payload = encode_request(request)
        self._sent_at[request.id] = time.monotonic()
        try:
            self._sock.sendall(payload)
        except socket.timeout as exc:
            raise OffloadTimeoutError(str(exc)) from exc
        except OSError as exc:
            raise OffloadConnectionError(str(exc)) from exc

    def recv(self) -> Response:
        if self._reader is None:
            raise OffloadConnectionError("client is not connected")
        try:
            line = self._reader.readline(MAX_FRAME_BYTES + 1)
        except socket.timeout as exc:
            raise OffloadTimeoutError(str(exc)) from exc
        except OSError as exc:
            raise OffloadConnectionError(str(exc)) from exc
        if not line:
            raise OffloadConnectionError("connection closed by service")
        received = time.monotonic()
        try:
            response = decode_response(line)
        except ProtocolError as exc:
            raise OffloadError(f"undecodable response: {exc}") from exc
        sent = self._sent_at.pop(response.id, None) if response.id is not None else None
        if sent is not None:
            response = replace(response, e2e_ms=(received - sent) * 1000.0)
        return response

    # -- conveniences ----------------------------------------------------------

    def call(self, request: Request, check: bool = False) -> Response:
        """Send one request and wait for its response (FIFO makes it the next one)."""
        self.send(request)
        while True:
            response = self.recv()
            if response.id == request.id:
                if check and not response.ok:
                    raise OffloadServerError(response)
                return response


def call_endpoint(endpoint: str, request: Request, timeout_s: float = 30.0) -> Response:
    with OffloadClient.from_endpoint(endpoint, timeout_s=timeout_s) as client:
        return client.call(request)
