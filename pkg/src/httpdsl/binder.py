"""Variable discovery and resolution."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .model import (
    DEFAULT_TIMEOUT_MS, ContentTypeSpec, EntityKind, HttpMessage, MediaType,
    RequestMethod, ReturnForm, Value, VariableKind, WellKnownHeader,
)
from .url import PathText, ServerUrl, UrlSyntaxError, parse_path, parse_server
from .validation import is_header_token, parse_port

EnvironmentLookup = Callable[[str], Optional[str]]

_MEDIA_TYPE_RE = re.compile(
    r"[!#$%&'*+\-.^_`|~0-9A-Za-z]+/[!#$%&'*+\-.^_`|~0-9A-Za-z]+"
    r"(\s*;\s*[!#$%&'*+\-.^_`|~0-9A-Za-z]+=(\"[^\"\r\n]*\"|[!#$%&'*+\-.^_`|~0-9A-Za-z]+))*\Z")


class BindingError(Exception):
    """Base class for resolution failures."""


class MissingInput(BindingError):
    def __init__(self, name: str):
        super().__init__(f"missing input variable '{name}'")
        self.name = name


class MissingEnvironment(BindingError):
    def __init__(self, name: str):
        super().__init__(f"missing environment variable '{name}'")
        self.name = name


class InvalidResolvedValue(BindingError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"invalid value for {field}: {reason}")
        self.field = field
        self.reason = reason


def _no_environment(name: str) -> Optional[str]:
    return None


@dataclass(frozen=True)
class BindingSet:
    inputs: Mapping[str, str] = field(default_factory=dict)
    environment: EnvironmentLookup = _no_environment


@dataclass(frozen=True)
class ResolvedBody:
    content_type: str
    entity_type: EntityKind
    payload: str


@dataclass(frozen=True)
class ResolvedRequest:
    name: str
    method: RequestMethod
    server: ServerUrl
    path: PathText
    query: tuple[tuple[str, str], ...]
    headers: tuple[tuple[str, str], ...]
    body: Optional[ResolvedBody]
    return_form: ReturnForm
    expected_type: str
    effective_timeout_ms: int
    proxy: Optional[tuple[str, int]] = None
    basic_auth: Optional[tuple[str, str]] = None


def _collect(message: HttpMessage, kind: VariableKind) -> list[str]:
    names: list[str] = []
    for _, var in message.iter_variables():
        if var.kind is kind and var.name not in names:
            names.append(var.name)
    return names


def collect_input_variables(message: HttpMessage) -> list[str]:
    """Input variable names, de-duplicated, in first-occurrence order."""
    return _collect(message, VariableKind.INPUT)


def collect_environment_variables(message: HttpMessage) -> list[str]:
    return _collect(message, VariableKind.ENVIRONMENT)


def resolve(message: HttpMessage, bindings: BindingSet,
            default_timeout_ms: int = DEFAULT_TIMEOUT_MS) -> ResolvedRequest:
    """Bind every variable of ``message`` and validate the results.

    ``default_timeout_ms`` applies when the message does not customize
    its timeout.
    """

    def value(v: Value) -> str:
        if isinstance(v, str):
            return v
        if v.kind is VariableKind.INPUT:
            if v.name not in bindings.inputs:
                raise MissingInput(v.name)
            return bindings.inputs[v.name]
        got = bindings.environment(v.name)
        if got is None:
            raise MissingEnvironment(v.name)
        return got

    def content_type(ct: ContentTypeSpec, where: str) -> str:
        if isinstance(ct, MediaType):
            return ct.value
        text = value(ct)
        if not _MEDIA_TYPE_RE.match(text):
            raise InvalidResolvedValue(where, f"'{text}' is not a media type")
        return text

    # bind in traversal order so the first missing variable is reported
    for _, var in message.iter_variables():
        value(var)

    try:
        server = parse_server(value(message.url.server))
    except UrlSyntaxError as exc:
        raise InvalidResolvedValue("url.server", exc.message) from None
    try:
        path = parse_path(value(message.url.path))
    except UrlSyntaxError as exc:
        raise InvalidResolvedValue("url.path", exc.message) from None

    query = tuple((value(p.key), value(p.value)) for p in message.query)

    headers = []
    for h in message.headers:
        if isinstance(h.key, WellKnownHeader):
            name = h.key.value
        else:
            name = value(h.key)
            if not is_header_token(name):
                raise InvalidResolvedValue("header", f"'{name}' is not a valid header name")
        text = value(h.value)
        if "\r" in text or "\n" in text:
            raise InvalidResolvedValue(name, "header values must not contain line breaks")
        headers.append((name, text))
    lowered = {n.lower() for n, _ in headers}

    body = None
    if message.body is not None:
        if not message.request_method.allows_body:
            raise InvalidResolvedValue(
                "body", f"body not allowed for {message.request_method.value}")
        if "content-type" in lowered:
            raise InvalidResolvedValue("Content-Type", "conflicts with body contentType")
        body = ResolvedBody(content_type(message.body.content_type, "body.contentType"),
                            message.body.entity_type, value(message.body.payload))

    rv = message.effective_return_value
    expected = content_type(rv.expected_type, "returns.expect")

    timeout = default_timeout_ms
    proxy = basic_auth = None
    c = message.customization
    if c is not None:
        if c.timeout_ms is not None:
            timeout = c.timeout_ms
        if c.proxy is not None:
            host = value(c.proxy.host)
            port_text = value(c.proxy.port)
            port = parse_port(port_text)
            if port is None:
                raise InvalidResolvedValue(
                    "proxy.port", f"'{port_text}' is not an integer in 1-65535")
            if not host or any(ch.isspace() or ch in "/?#@" for ch in host):
                raise InvalidResolvedValue("proxy.host", f"'{host}' is not a host name")
            proxy = (host, port)
        if c.basic_auth is not None:
            if "authorization" in lowered:
                raise InvalidResolvedValue("Authorization",
                                           "conflicts with basicauth customization")
            basic_auth = (value(c.basic_auth.username), value(c.basic_auth.password))
    if timeout <= 0:
        raise InvalidResolvedValue("timeout", "must be a positive number of milliseconds")

    return ResolvedRequest(
        name=message.name,
        method=message.request_method,
        server=server,
        path=path,
        query=query,
        headers=tuple(headers),
        body=body,
        return_form=rv.return_form,
        expected_type=expected,
        effective_timeout_ms=timeout,
        proxy=proxy,
        basic_auth=basic_auth,
    )


__all__ = [
    "BindingError", "BindingSet", "InvalidResolvedValue", "MissingEnvironment",
    "MissingInput", "ResolvedBody", "ResolvedRequest",
    "collect_environment_variables", "collect_input_variables", "resolve",
]
