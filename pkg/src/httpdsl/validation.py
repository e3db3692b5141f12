"""Static checks on parsed messages."""

from __future__ import annotations

import base64
import binascii
from collections import Counter
from typing import Optional

from .model import (
    IDENTIFIER_RE, Diagnostic, EntityKind, HttpMessage, RequestDocument,
    Severity, Span,
)
from .url import UrlSyntaxError, parse_path, parse_server


def _shift(span: Span, offset: int, length: int, quoted: bool) -> Span:
    # point inside a literal when it sits on one line
    return Span(span.line, span.column + offset + (1 if quoted else 0), length)


def validate_message(message: HttpMessage, source_name: str = "") -> list[Diagnostic]:
    """Return every rule violation in ``message``; empty means valid."""
    out: list[Diagnostic] = []

    def error(key: str, text: str) -> None:
        out.append(Diagnostic(Severity.ERROR, message.span_of(key), text, source_name))

    if not IDENTIFIER_RE.match(message.name):
        error("name", f"message name '{message.name}' is not an identifier")

    for path, var in message.iter_variables():
        if not var.is_well_formed():
            error(path, f"malformed variable name '{var.name}'")

    server = message.url.server
    if isinstance(server, str):
        try:
            parse_server(server)
        except UrlSyntaxError as exc:
            span = message.span_of("url.server")
            if "url.server" in message.spans and span.length >= len(server):
                quoted = span.length > len(server)
                span = _shift(span, exc.offset, exc.length, quoted)
            out.append(Diagnostic(Severity.ERROR, span, f"invalid server: {exc.message}",
                                  source_name))
    path_value = message.url.path
    if isinstance(path_value, str):
        try:
            parse_path(path_value)
        except UrlSyntaxError as exc:
            span = message.span_of("url.path")
            if "url.path" in message.spans and span.length >= len(path_value):
                quoted = span.length > len(path_value)
                span = _shift(span, exc.offset, exc.length, quoted)
            out.append(Diagnostic(Severity.ERROR, span, f"invalid path: {exc.message}",
                                  source_name))

    for path, value in message.iter_values():
        if isinstance(value, str) and ("\n" in value or "\r" in value):
            error(path, "literal values must not contain line breaks")

    body = message.body
    if body is not None and not message.request_method.allows_body:
        error("body", f"body not allowed for {message.request_method.value}")

    header_names = [h.key_text() for h in message.headers]
    lowered = [n.lower() for n in header_names if n is not None]
    if body is not None and "content-type" in lowered:
        error("body.content_type",
              "Content-Type header conflicts with body contentType")
    c = message.customization
    if c is not None and c.basic_auth is not None and "authorization" in lowered:
        error("customization.basic_auth",
              "Authorization header conflicts with basicauth customization")
    for i, h in enumerate(message.headers):
        if isinstance(h.key, str) and not is_header_token(h.key):
            error(f"headers.{i}.key", f"invalid header name '{h.key}'")

    if body is not None and body.entity_type is EntityKind.BYTES \
            and isinstance(body.payload, str):
        try:
            base64.b64decode(body.payload, validate=True)
        except (binascii.Error, ValueError):
            error("body.payload", "BYTES payload must be base64 text")

    if c is not None:
        if c.timeout_ms is not None and c.timeout_ms <= 0:
            error("customization.timeout_ms", "timeout must be a positive number")
        if c.proxy is not None and isinstance(c.proxy.port, str) \
                and parse_port(c.proxy.port) is None:
            error("customization.proxy.port",
                  f"proxy port '{c.proxy.port}' must be an integer in 1-65535")
        if c.proxy is not None and isinstance(c.proxy.host, str) and not c.proxy.host:
            error("customization.proxy.host", "proxy host must not be empty")
    return out


def validate_document(doc: RequestDocument) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    counts = Counter(m.name for m in doc.messages)
    reported = set()
    for m in doc.messages:
        out.extend(validate_message(m, doc.source_name))
        if counts[m.name] > 1 and m.name in reported:
            out.append(Diagnostic(Severity.ERROR, m.span_of("name"),
                                  f"duplicate message name '{m.name}'", doc.source_name))
        reported.add(m.name)
    return out


_TCHAR = frozenset("!#$%&'*+-.^_`|~0123456789"
                   "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


def is_header_token(text: str) -> bool:
    return bool(text) and all(c in _TCHAR for c in text)


def parse_port(text: str) -> Optional[int]:
    if not text.isascii() or not text.isdigit():
        return None
    value = int(text)
    return value if 1 <= value <= 65535 else None
