"""Domain types for parsed description files.

Every value is an immutable dataclass; lists are stored as tuples so that
messages compare structurally and can be hashed. A literal value is a plain
``str``; a placeholder is a :class:`VariableRef`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

IDENTIFIER_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
ENV_NAME_RE = re.compile(r"[A-Z]+(?:_[A-Z]+)*\Z")

DEFAULT_TIMEOUT_MS = 5000


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Span:
    """1-based line and column plus a length in characters."""

    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    span: Span
    message: str
    source_name: str = ""

    def render(self) -> str:
        return (f"{self.source_name}:{self.span.line}:{self.span.column}: "
                f"{self.severity.value}: {self.message}")

    def __str__(self) -> str:
        return self.render()


class VariableKind(enum.Enum):
    INPUT = "input"
    ENVIRONMENT = "environment"


@dataclass(frozen=True)
class VariableRef:
    kind: VariableKind
    name: str

    @classmethod
    def input(cls, name: str) -> "VariableRef":
        return cls(VariableKind.INPUT, name)

    @classmethod
    def env(cls, name: str) -> "VariableRef":
        return cls(VariableKind.ENVIRONMENT, name)

    @property
    def is_input(self) -> bool:
        return self.kind is VariableKind.INPUT

    def is_well_formed(self) -> bool:
        pattern = IDENTIFIER_RE if self.is_input else ENV_NAME_RE
        return bool(pattern.match(self.name))

    def __str__(self) -> str:
        if self.is_input:
            return f"input ${self.name}"
        return f"environment {self.name}"


#: A literal text or a placeholder resolved later.
Value = Union[str, VariableRef]


class RequestMethod(enum.Enum):
    GET = "GET"
    POST = "POST"
    PUT = "PUT"
    DELETE = "DELETE"

    @property
    def allows_body(self) -> bool:
        return self in (RequestMethod.POST, RequestMethod.PUT)


class WellKnownHeader(enum.Enum):
    ACCEPT = "Accept"
    ACCEPT_CHARSET = "Accept-Charset"
    ACCEPT_ENCODING = "Accept-Encoding"
    ACCEPT_LANGUAGE = "Accept-Language"
    AUTHORIZATION = "Authorization"
    CACHE_CONTROL = "Cache-Control"
    CONNECTION = "Connection"
    CONTENT_ENCODING = "Content-Encoding"
    CONTENT_LANGUAGE = "Content-Language"
    CONTENT_LENGTH = "Content-Length"
    CONTENT_TYPE = "Content-Type"
    COOKIE = "Cookie"
    DATE = "Date"
    EXPECT = "Expect"
    FORWARDED = "Forwarded"
    FROM = "From"
    HOST = "Host"
    IF_MATCH = "If-Match"
    IF_MODIFIED_SINCE = "If-Modified-Since"
    IF_NONE_MATCH = "If-None-Match"
    IF_RANGE = "If-Range"
    IF_UNMODIFIED_SINCE = "If-Unmodified-Since"
    MAX_FORWARDS = "Max-Forwards"
    ORIGIN = "Origin"
    PRAGMA = "Pragma"
    PROXY_AUTHORIZATION = "Proxy-Authorization"
    RANGE = "Range"
    REFERER = "Referer"
    USER_AGENT = "User-Agent"
    VIA = "Via"

    @classmethod
    def lookup(cls, text: str) -> Optional["WellKnownHeader"]:
        return _HEADERS_BY_LOWER.get(text.lower())


_HEADERS_BY_LOWER = {h.value.lower(): h for h in WellKnownHeader}


class MediaType(enum.Enum):
    TEXT_PLAIN = "text/plain"
    APPLICATION_JSON = "application/json"
    APPLICATION_XML = "application/xml"
    IMAGE_JPEG = "image/jpeg"
    IMAGE_PNG = "image/png"
    APPLICATION_OCTET_STREAM = "application/octet-stream"
    MULTIPART_FORM_DATA = "multipart/form-data"
    APPLICATION_FORM_URLENCODED = "application/x-www-form-urlencoded"

    @classmethod
    def lookup(cls, text: str) -> Optional["MediaType"]:
        return _MEDIA_BY_LOWER.get(text.lower())


_MEDIA_BY_LOWER = {m.value: m for m in MediaType}

#: A header key: well-known name, custom name (plain ``str``) or a variable.
HeaderKey = Union[WellKnownHeader, str, VariableRef]
#: A content type: well-known media type, custom text or a variable.
ContentTypeSpec = Union[MediaType, str, VariableRef]


class EntityKind(enum.Enum):
    TEXT = "TEXT"
    FILE = "FILE"
    STREAM = "STREAM"
    BYTES = "BYTES"


ENTITY_ALIASES = {
    "StringEntity": EntityKind.TEXT,
    "FileEntity": EntityKind.FILE,
    "InputStreamEntity": EntityKind.STREAM,
    "ByteArrayEntity": EntityKind.BYTES,
}


class ReturnForm(enum.Enum):
    FULL_RESPONSE = "response"
    PAYLOAD_TEXT = "payload"


@dataclass(frozen=True)
class AbstractUrl:
    server: Value
    path: Value = ""


@dataclass(frozen=True)
class Parameter:
    key: Value
    value: Value


@dataclass(frozen=True)
class Header:
    key: HeaderKey
    value: Value

    def key_text(self) -> Optional[str]:
        """The literal header name, or None when the key is a variable."""
        if isinstance(self.key, WellKnownHeader):
            return self.key.value
        if isinstance(self.key, str):
            return self.key
        return None


@dataclass(frozen=True)
class Body:
    content_type: ContentTypeSpec
    entity_type: EntityKind
    payload: Value


@dataclass(frozen=True)
class ReturnValue:
    expected_type: ContentTypeSpec = MediaType.TEXT_PLAIN
    return_form: ReturnForm = ReturnForm.PAYLOAD_TEXT


DEFAULT_RETURN_VALUE = ReturnValue()


@dataclass(frozen=True)
class ProxySpec:
    host: Value
    port: Value


@dataclass(frozen=True)
class BasicAuthSpec:
    username: Value
    password: Value


@dataclass(frozen=True)
class Customization:
    proxy: Optional[ProxySpec] = None
    basic_auth: Optional[BasicAuthSpec] = None
    timeout_ms: Optional[int] = None


@dataclass(frozen=True)
class HttpMessage:
    name: str
    url: AbstractUrl
    request_method: RequestMethod
    query: tuple[Parameter, ...] = ()
    headers: tuple[Header, ...] = ()
    body: Optional[Body] = None
    return_value: Optional[ReturnValue] = None
    customization: Optional[Customization] = None
    # field path -> source location; ignored by equality
    spans: Mapping[str, Span] = field(default_factory=dict, compare=False,
                                      repr=False, hash=False)

    @property
    def effective_return_value(self) -> ReturnValue:
        return self.return_value or DEFAULT_RETURN_VALUE

    def span_of(self, key: str) -> Span:
        while key:
            if key in self.spans:
                return self.spans[key]
            key = key.rpartition(".")[0]
        return self.spans.get("", Span(1, 1))

    def iter_values(self) -> Iterator[tuple[str, object]]:
        """Yield ``(field path, value)`` for every slot that may hold a
        variable, in document order."""
        yield "url.server", self.url.server
        yield "url.path", self.url.path
        for i, p in enumerate(self.query):
            yield f"query.{i}.key", p.key
            yield f"query.{i}.value", p.value
        for i, h in enumerate(self.headers):
            yield f"headers.{i}.key", h.key
            yield f"headers.{i}.value", h.value
        if self.body is not None:
            yield "body.content_type", self.body.content_type
            yield "body.payload", self.body.payload
        if self.return_value is not None:
            yield "return_value.expected_type", self.return_value.expected_type
        c = self.customization
        if c is not None:
            if c.proxy is not None:
                yield "customization.proxy.host", c.proxy.host
                yield "customization.proxy.port", c.proxy.port
            if c.basic_auth is not None:
                yield "customization.basic_auth.username", c.basic_auth.username
                yield "customization.basic_auth.password", c.basic_auth.password

    def iter_variables(self) -> Iterator[tuple[str, VariableRef]]:
        for path, value in self.iter_values():
            if isinstance(value, VariableRef):
                yield path, value


@dataclass(frozen=True)
class RequestDocument:
    source_name: str
    messages: tuple[HttpMessage, ...]

    def message(self, name: str) -> HttpMessage:
        for m in self.messages:
            if m.name == name:
                return m
        raise KeyError(name)
