"""Scripted HTTP responders for offline runs and tests.

A script is JSON of the form::

    {"routes": [
        {"method": "GET", "path": "/users", "status": 200,
         "headers": {"Content-Type": "application/json"},
         "body": "[]", "delay_ms": 0}
    ]}

``method`` and ``path`` are optional match criteria (path excludes the
query string); the first matching route answers, otherwise 404. The same
script drives :class:`MockServer` (a real socket server, which also
answers absolute-URI proxy requests) and :class:`ScriptedTransport` (no
sockets at all).
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import urlsplit

from .executor import RawResponse, RequestPlan, Timeout

_NO_BODY_STATUSES = frozenset({204, 304}) | frozenset(range(100, 200))


@dataclass(frozen=True)
class Route:
    status: int = 200
    body: str = ""
    headers: tuple[tuple[str, str], ...] = ()
    method: Optional[str] = None
    path: Optional[str] = None
    delay_ms: int = 0

    def matches(self, method: str, path: str) -> bool:
        return ((self.method is None or self.method == method)
                and (self.path is None or self.path == path))

    @classmethod
    def from_dict(cls, data: dict) -> "Route":
        headers = data.get("headers", {})
        if isinstance(headers, dict):
            headers = headers.items()
        return cls(status=int(data.get("status", 200)), body=data.get("body", ""),
                   headers=tuple((str(k), str(v)) for k, v in headers),
                   method=data.get("method"), path=data.get("path"),
                   delay_ms=int(data.get("delay_ms", 0)))


NOT_FOUND = Route(status=404, body="no route")


@dataclass
class MockScript:
    routes: list[Route] = field(default_factory=list)

    @classmethod
    def from_json(cls, text: str) -> "MockScript":
        data = json.loads(text)
        return cls([Route.from_dict(r) for r in data.get("routes", [])])

    @classmethod
    def from_file(cls, path) -> "MockScript":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def match(self, method: str, path: str) -> Route:
        for route in self.routes:
            if route.matches(method, path):
                return route
        return NOT_FOUND


@dataclass(frozen=True)
class RecordedRequest:
    method: str
    target: str
    headers: tuple[tuple[str, str], ...]
    body: bytes

    def header(self, name: str) -> Optional[str]:
        for k, v in self.headers:
            if k.lower() == name.lower():
                return v
        return None


class ScriptedTransport:
    """Answers plans from a script without touching the network."""

    def __init__(self, script: MockScript):
        self.script = script
        self.sent: list[RequestPlan] = []
        self._lock = threading.Lock()

    def send(self, plan: RequestPlan) -> RawResponse:
        with self._lock:
            self.sent.append(plan)
        route = self.script.match(plan.method.value, urlsplit(plan.target).path)
        if route.delay_ms >= plan.timeout_ms:
            time.sleep(plan.timeout_ms / 1000)
            raise Timeout(plan.timeout_ms, plan.timeout_ms)
        if route.delay_ms:
            time.sleep(route.delay_ms / 1000)
        body = b"" if route.status in _NO_BODY_STATUSES else route.body.encode("utf-8")
        return RawResponse(route.status, route.headers, body)


class _Handler(BaseHTTPRequestHandler):
    server: "_Server"
    protocol_version = "HTTP/1.1"

    def setup(self) -> None:
        super().setup()
        # headers and body go out in separate writes
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def log_message(self, format, *args):  # noqa: A002 - silence stderr
        pass

    def _serve(self) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        self.server.owner._record(RecordedRequest(
            self.command, self.path, tuple(self.headers.items()), body))
        route = self.server.owner.script.match(self.command, urlsplit(self.path).path)
        if route.delay_ms:
            time.sleep(route.delay_ms / 1000)
        payload = b"" if route.status in _NO_BODY_STATUSES else route.body.encode("utf-8")
        try:
            self.send_response(route.status)
            for k, v in route.headers:
                self.send_header(k, v)
            if route.status not in _NO_BODY_STATUSES:
                self.send_header("Content-Length", str(len(payload)))
            self.send_header("Connection", "close")
            self.end_headers()
            if payload:
                self.wfile.write(payload)
        except (BrokenPipeError, ConnectionResetError):
            pass
        self.close_connection = True

    do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = do_HEAD = _serve


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    block_on_close = False
    owner: "MockServer"


class MockServer:
    """Threaded local HTTP server answering from a :class:`MockScript`.

    Use as a context manager; ``url`` is the base URL and ``requests`` the
    list of requests received so far.
    """

    def __init__(self, script: Optional[MockScript] = None, host: str = "127.0.0.1",
                 port: int = 0):
        self.script = script or MockScript()
        self.requests: list[RecordedRequest] = []
        self._lock = threading.Lock()
        self._httpd = _Server((host, port), _Handler)
        self._httpd.owner = self
        self._thread: Optional[threading.Thread] = None

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def _record(self, req: RecordedRequest) -> None:
        with self._lock:
            self.requests.append(req)

    def start(self) -> "MockServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        kwargs={"poll_interval": 0.05}, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "MockServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
