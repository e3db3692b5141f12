"""Turn resolved requests into wire requests and responses into
:class:`ResponseObject` records."""

from __future__ import annotations

import base64
import binascii
import enum
import http.client
import logging
import os
import socket
import ssl
import time
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Optional, Protocol, Union

from .binder import BindingSet, ResolvedRequest, resolve
from .model import DEFAULT_TIMEOUT_MS, EntityKind, HttpMessage, RequestMethod, ReturnForm
from .url import HostKind, Scheme, ServerUrl, render_query, render_url

log = logging.getLogger(__name__)

DEFAULT_MAX_BODY_BYTES = 64 * 1024 * 1024
_CHUNK = 64 * 1024


class PlanError(Exception):
    pass


class FileNotReadable(PlanError):
    def __init__(self, path: str, reason: str = ""):
        super().__init__(f"cannot read payload file '{path}'" + (f": {reason}" if reason else ""))
        self.path = path


class PayloadTooLarge(PlanError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"payload of {size} bytes exceeds the {limit} byte limit")
        self.size = size
        self.limit = limit


class TransportError(Exception):
    pass


class Timeout(TransportError):
    def __init__(self, timeout_ms: int, elapsed_ms: float):
        super().__init__(f"no complete response within {timeout_ms} ms")
        self.timeout_ms = timeout_ms
        self.elapsed_ms = elapsed_ms


class ConnectionFailed(TransportError):
    pass


class ProxyUnreachable(ConnectionFailed):
    pass


@dataclass(frozen=True)
class RequestPlan:
    method: RequestMethod
    absolute_url: str
    server: ServerUrl
    target: str
    headers: tuple[tuple[str, str], ...]
    timeout_ms: int
    body: Optional[bytes] = None
    entity_kind: Optional[EntityKind] = None
    stream_path: Optional[str] = None
    proxy: Optional[tuple[str, int]] = None
    expected_type: Optional[str] = None

    def header(self, name: str) -> Optional[str]:
        for k, v in self.headers:
            if k.lower() == name.lower():
                return v
        return None

    def content_length(self) -> Optional[int]:
        if self.stream_path is not None:
            return os.path.getsize(self.stream_path)
        if self.body is not None:
            return len(self.body)
        if self.method.allows_body:
            return 0
        return None

    def open_body(self) -> Union[bytes, IO[bytes], None]:
        """Body bytes, or a freshly opened file for STREAM entities."""
        if self.stream_path is not None:
            try:
                return open(self.stream_path, "rb")
            except OSError as exc:
                raise FileNotReadable(self.stream_path, exc.strerror or str(exc)) from None
        return self.body


@dataclass(frozen=True)
class RawResponse:
    status: int
    headers: tuple[tuple[str, str], ...]
    body: bytes


class Transport(Protocol):
    def send(self, plan: RequestPlan) -> RawResponse: ...


@dataclass(frozen=True)
class ResponseObject:
    payload: str
    statuscode: int
    succeeded: bool
    try_again: bool
    next_uri: Optional[str]
    request_type: RequestMethod

    def to_dict(self) -> dict:
        return {
            "payload": self.payload,
            "statuscode": self.statuscode,
            "succeeded": self.succeeded,
            "tryAgain": self.try_again,
            "nextUri": self.next_uri,
            "requestType": self.request_type.value,
        }


class Branch(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


@dataclass(frozen=True)
class BranchResult:
    branch: Branch
    output: Union[str, ResponseObject]


def build_plan(resolved: ResolvedRequest,
               max_body_bytes: int = DEFAULT_MAX_BODY_BYTES) -> RequestPlan:
    headers = list(resolved.headers)
    body = None
    entity = None
    stream_path = None
    if resolved.body is not None:
        b = resolved.body
        entity = b.entity_type
        headers.append(("Content-Type", b.content_type))
        if entity is EntityKind.TEXT:
            body = b.payload.encode("utf-8")
        elif entity is EntityKind.BYTES:
            try:
                body = base64.b64decode(b.payload, validate=True)
            except (binascii.Error, ValueError):
                raise PlanError("BYTES payload is not valid base64") from None
        elif entity is EntityKind.FILE:
            body = _read_file(b.payload, max_body_bytes)
        else:
            _check_readable(b.payload, max_body_bytes)
            stream_path = b.payload
        if body is not None and len(body) > max_body_bytes:
            raise PayloadTooLarge(len(body), max_body_bytes)
    if resolved.basic_auth is not None:
        user, password = resolved.basic_auth
        token = base64.b64encode(f"{user}:{password}".encode("utf-8")).decode("ascii")
        headers.append(("Authorization", f"Basic {token}"))

    target = "/" + resolved.path.render()
    query = render_query(resolved.query)
    if query:
        target += "?" + query
    return RequestPlan(
        method=resolved.method,
        absolute_url=render_url(resolved.server, resolved.path, resolved.query),
        server=resolved.server,
        target=target,
        headers=tuple(headers),
        timeout_ms=resolved.effective_timeout_ms,
        body=body,
        entity_kind=entity,
        stream_path=stream_path,
        proxy=resolved.proxy,
        expected_type=resolved.expected_type,
    )


def _read_file(path: str, limit: int) -> bytes:
    try:
        with open(path, "rb") as fh:
            data = fh.read(limit + 1)
    except OSError as exc:
        raise FileNotReadable(path, exc.strerror or str(exc)) from None
    if len(data) > limit:
        raise PayloadTooLarge(os.path.getsize(path), limit)
    return data


def _check_readable(path: str, limit: int) -> None:
    if not os.path.isfile(path) or not os.access(path, os.R_OK):
        raise FileNotReadable(path, "not a readable file")
    size = os.path.getsize(path)
    if size > limit:
        raise PayloadTooLarge(size, limit)


def _header_value(headers: Union[Mapping[str, str], Iterable[tuple[str, str]]],
                  name: str) -> Optional[str]:
    items = headers.items() if isinstance(headers, Mapping) else headers
    for k, v in items:
        if k.lower() == name.lower():
            return v
    return None


def handle_response(status: int,
                    headers: Union[Mapping[str, str], Iterable[tuple[str, str]]],
                    body: bytes, method: RequestMethod) -> ResponseObject:
    """Post-process a raw response.

    ``succeeded`` covers 2xx; ``try_again`` flags 408, 429 and 5xx;
    ``next_uri`` carries the Location header of a 3xx response.
    """
    location = _header_value(headers, "Location")
    return ResponseObject(
        payload=body.decode("utf-8", errors="replace"),
        statuscode=status,
        succeeded=200 <= status <= 299,
        try_again=status in (408, 429) or 500 <= status <= 599,
        next_uri=location if 300 <= status <= 399 else None,
        request_type=method,
    )


def classify(response: ResponseObject, return_form: ReturnForm) -> BranchResult:
    branch = Branch.SUCCESS if response.succeeded else Branch.FAILURE
    if return_form is ReturnForm.PAYLOAD_TEXT:
        return BranchResult(branch, response.payload)
    return BranchResult(branch, response)


def _media(value: Optional[str]) -> str:
    return (value or "").split(";")[0].strip().lower()


def execute(plan: RequestPlan, transport: Optional[Transport] = None) -> ResponseObject:
    """Send ``plan`` exactly once; no redirects are followed, no retries made."""
    transport = transport or _default_transport()
    raw = transport.send(plan)
    response = handle_response(raw.status, raw.headers, raw.body, plan.method)
    if plan.expected_type:
        got = _header_value(raw.headers, "Content-Type")
        if got is not None and _media(got) != _media(plan.expected_type):
            log.warning("%s %s: expected %s response, got %s", plan.method.value,
                        plan.absolute_url, plan.expected_type, got)
    return response


_DEFAULT_TRANSPORT: Optional["HttpTransport"] = None


def _default_transport() -> "HttpTransport":
    global _DEFAULT_TRANSPORT
    if _DEFAULT_TRANSPORT is None:
        _DEFAULT_TRANSPORT = HttpTransport()
    return _DEFAULT_TRANSPORT


def run(message: HttpMessage, bindings: BindingSet,
        transport: Optional[Transport] = None,
        default_timeout_ms: int = DEFAULT_TIMEOUT_MS) -> BranchResult:
    """Resolve, send and classify one message."""
    resolved = resolve(message, bindings, default_timeout_ms)
    response = execute(build_plan(resolved), transport)
    return classify(response, resolved.return_form)


class HttpTransport:
    """HTTP/1.1 over :mod:`http.client`.

    The plan's timeout bounds connect, send and the complete response read.
    Plain-HTTP proxying uses the absolute-URI request form; HTTPS goes
    through a CONNECT tunnel.
    """

    def __init__(self, ssl_context: Optional[ssl.SSLContext] = None):
        self._ssl_context = ssl_context

    @property
    def ssl_context(self) -> ssl.SSLContext:
        if self._ssl_context is None:
            self._ssl_context = ssl.create_default_context()
        return self._ssl_context

    def send(self, plan: RequestPlan) -> RawResponse:
        start = time.monotonic()
        deadline = start + plan.timeout_ms / 1000

        def remaining() -> float:
            left = deadline - time.monotonic()
            if left <= 0:
                raise Timeout(plan.timeout_ms, (time.monotonic() - start) * 1000)
            return left

        server = plan.server
        https = server.scheme is Scheme.HTTPS
        connect_host = server.host
        if plan.proxy is not None:
            host, port = plan.proxy
        else:
            host, port = connect_host, server.effective_port
        if https:
            conn: http.client.HTTPConnection = http.client.HTTPSConnection(
                host, port, timeout=remaining(), context=self.ssl_context)
            if plan.proxy is not None:
                tunnel_host = (f"[{connect_host}]" if server.host_kind is HostKind.IPV6
                               else connect_host)
                conn.set_tunnel(tunnel_host, server.effective_port)
        else:
            conn = http.client.HTTPConnection(host, port, timeout=remaining())
        target = plan.absolute_url if plan.proxy is not None and not https else plan.target

        body = None
        try:
            try:
                conn.connect()
            except (socket.timeout, TimeoutError):
                raise Timeout(plan.timeout_ms, (time.monotonic() - start) * 1000) from None
            except OSError as exc:
                if plan.proxy is not None:
                    raise ProxyUnreachable(
                        f"proxy {plan.proxy[0]}:{plan.proxy[1]} unreachable: {exc}") from None
                raise ConnectionFailed(f"cannot connect to {host}:{port}: {exc}") from None
            sock = conn.sock
            body = plan.open_body()
            try:
                sock.settimeout(remaining())
                conn.putrequest(plan.method.value, target, skip_host=True,
                                skip_accept_encoding=True)
                names = {k.lower() for k, _ in plan.headers}
                if "host" not in names:
                    authority = server.authority.rpartition("@")[2]
                    conn.putheader("Host", authority)
                for k, v in plan.headers:
                    conn.putheader(k, v)
                length = plan.content_length()
                if length is not None and "content-length" not in names:
                    conn.putheader("Content-Length", str(length))
                if "connection" not in names:
                    conn.putheader("Connection", "close")
                conn.endheaders(body)
                sock.settimeout(remaining())
                resp = conn.getresponse()
                chunks = []
                while True:
                    sock.settimeout(remaining())
                    chunk = resp.read1(_CHUNK) if hasattr(resp, "read1") else resp.read(_CHUNK)
                    if not chunk:
                        break
                    chunks.append(chunk)
                remaining()
                return RawResponse(resp.status, tuple(resp.getheaders()), b"".join(chunks))
            except (socket.timeout, TimeoutError):
                raise Timeout(plan.timeout_ms, (time.monotonic() - start) * 1000) from None
            except (http.client.HTTPException, OSError) as exc:
                raise ConnectionFailed(f"request to {plan.absolute_url} failed: {exc}") from None
        finally:
            if body is not None and hasattr(body, "close"):
                body.close()
            conn.close()
