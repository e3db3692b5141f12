"""Server and path grammar for ``url`` fields.

The host grammar follows the RFC 1738 ``hostport`` productions::

    hostport     = host [ ":" port ]
    host         = hostname | hostnumber | "[" ipv6 "]"
    hostname     = *[ domainlabel "." ] toplabel
    domainlabel  = alphadigit | alphadigit *[ alphadigit | "-" ] alphadigit
    toplabel     = alpha | alpha *[ alphadigit | "-" ] alphadigit
    hostnumber   = digits "." digits "." digits "." digits

with two changes: a top-level label must be 2 to 63 characters long, and
bracketed IPv6 literals are accepted.
"""

from __future__ import annotations

import enum
import string
from dataclasses import dataclass
from typing import Iterable, Optional

ALPHA = frozenset(string.ascii_letters)
DIGIT = frozenset(string.digits)
HEX = frozenset(string.hexdigits)
ALPHADIGIT = ALPHA | DIGIT

# RFC 1738: unreserved = alpha | digit | safe | extra
SAFE = frozenset("$-_.+")
EXTRA = frozenset("!*'(),")
UNRESERVED = ALPHADIGIT | SAFE | EXTRA
USER_CHARS = UNRESERVED | frozenset(";?&=")
SEGMENT_CHARS = UNRESERVED | frozenset(";:@&=")

# RFC 3986 unreserved set, used for query encoding
_QUERY_SAFE = frozenset((string.ascii_letters + string.digits + "-._~").encode())

MIN_TLD = 2
MAX_TLD = 63
MAX_LABEL = 63
MAX_HOSTNAME = 253


class UrlSyntaxError(ValueError):
    """Raised when server or path text violates the grammar.

    ``offset`` and ``length`` locate the offending characters in the text
    that was parsed.
    """

    def __init__(self, message: str, offset: int = 0, length: int = 1):
        super().__init__(message)
        self.message = message
        self.offset = offset
        self.length = max(length, 1)


class Scheme(enum.Enum):
    HTTP = "http"
    HTTPS = "https"


class HostKind(enum.Enum):
    NAME = "name"
    IPV4 = "ipv4"
    IPV6 = "ipv6"


@dataclass(frozen=True)
class ServerUrl:
    scheme: Scheme
    host: str
    host_kind: HostKind
    port: Optional[int] = None
    userinfo: Optional[str] = None

    @property
    def authority(self) -> str:
        host = f"[{self.host}]" if self.host_kind is HostKind.IPV6 else self.host
        if self.port is not None:
            host = f"{host}:{self.port}"
        if self.userinfo is not None:
            host = f"{self.userinfo}@{host}"
        return host

    @property
    def effective_port(self) -> int:
        if self.port is not None:
            return self.port
        return 443 if self.scheme is Scheme.HTTPS else 80

    def render(self) -> str:
        return f"{self.scheme.value}://{self.authority}"


@dataclass(frozen=True)
class PathText:
    segments: tuple[str, ...] = ()

    def render(self) -> str:
        return "/".join(self.segments)


def parse_server(text: str) -> ServerUrl:
    """Parse ``[scheme://][userinfo@]host[:port][/]``.

    The scheme defaults to HTTP when omitted.
    """
    if not text:
        raise UrlSyntaxError("server must not be empty", 0, 1)

    pos = 0
    scheme = Scheme.HTTP
    sep = text.find("://")
    if sep >= 0:
        name = text[:sep].lower()
        try:
            scheme = Scheme(name)
        except ValueError:
            raise UrlSyntaxError(
                f"unsupported scheme '{text[:sep]}' (expected http or https)",
                0, max(sep, 1)) from None
        pos = sep + 3

    end = len(text)
    if text.endswith("/") and end > pos:
        end -= 1
    for i in range(pos, end):
        if text[i] in "/?#" or text[i].isspace():
            raise UrlSyntaxError(f"illegal character {text[i]!r} in server", i)

    authority = text[pos:end]
    userinfo = None
    at = authority.rfind("@")
    if at >= 0:
        userinfo = authority[:at]
        _check_userinfo(userinfo, pos)
        pos += at + 1
        authority = authority[at + 1:]

    if authority.startswith("["):
        close = authority.find("]")
        if close < 0:
            raise UrlSyntaxError("unterminated IPv6 literal", pos, len(authority))
        host = authority[1:close]
        _check_ipv6(host, pos + 1)
        kind = HostKind.IPV6
        rest_at = close + 1
    else:
        colon = authority.find(":")
        rest_at = len(authority) if colon < 0 else colon
        host = authority[:rest_at]
        kind = _check_host(host, pos)

    port = None
    rest = authority[rest_at:]
    if rest:
        if rest[0] != ":":
            raise UrlSyntaxError(f"unexpected character {rest[0]!r} after host",
                                 pos + rest_at)
        port = _parse_port(rest[1:], pos + rest_at + 1)

    return ServerUrl(scheme, host, kind, port, userinfo)


def parse_path(text: str) -> PathText:
    """Split a path into segments; a single leading ``/`` is dropped."""
    start = 1 if text.startswith("/") else 0
    i = start
    while i < len(text):
        c = text[i]
        if c == "%":
            if len(text) < i + 3 or text[i + 1] not in HEX or text[i + 2] not in HEX:
                raise UrlSyntaxError("'%' must be followed by two hex digits",
                                     i, min(3, len(text) - i))
            i += 3
            continue
        if c != "/" and c not in SEGMENT_CHARS:
            raise UrlSyntaxError(f"illegal character {c!r} in path", i)
        i += 1
    body = text[start:]
    if not body:
        return PathText(())
    return PathText(tuple(body.split("/")))


def percent_encode(text: str) -> str:
    """Percent-encode everything outside the RFC 3986 unreserved set."""
    return "".join(chr(b) if b in _QUERY_SAFE else f"%{b:02X}"
                   for b in text.encode("utf-8"))


def render_query(query: Iterable[tuple[str, str]]) -> str:
    return "&".join(f"{percent_encode(k)}={percent_encode(v)}" for k, v in query)


def render_url(server: ServerUrl, path: PathText,
               query: Iterable[tuple[str, str]] = ()) -> str:
    url = f"{server.render()}/{path.render()}"
    q = render_query(query)
    return f"{url}?{q}" if q else url


def is_valid_server(text: str) -> bool:
    try:
        parse_server(text)
    except UrlSyntaxError:
        return False
    return True


def _check_userinfo(userinfo: str, base: int) -> None:
    # user [ ":" password ]; neither part may contain "@"
    i = 0
    seen_colon = False
    while i < len(userinfo):
        c = userinfo[i]
        if c == "%":
            if len(userinfo) < i + 3 or userinfo[i + 1] not in HEX \
                    or userinfo[i + 2] not in HEX:
                raise UrlSyntaxError("'%' must be followed by two hex digits",
                                     base + i)
            i += 3
            continue
        if c == ":" and not seen_colon:
            seen_colon = True
        elif c not in USER_CHARS:
            raise UrlSyntaxError(f"illegal character {c!r} in userinfo", base + i)
        i += 1


def _parse_port(text: str, base: int) -> int:
    if not text:
        raise UrlSyntaxError("missing port number after ':'", base - 1)
    for i, c in enumerate(text):
        if c not in DIGIT:
            raise UrlSyntaxError(f"illegal character {c!r} in port", base + i)
    value = int(text)
    if not 1 <= value <= 65535:
        raise UrlSyntaxError(f"port {value} out of range 1-65535", base, len(text))
    return value


def _check_host(host: str, base: int) -> HostKind:
    if not host:
        raise UrlSyntaxError("missing host", base)
    labels = host.split(".")
    if len(labels) == 4 and all(lbl and set(lbl) <= DIGIT for lbl in labels):
        _check_ipv4(host, base)
        return HostKind.IPV4
    _check_hostname(labels, base)
    return HostKind.NAME


def _check_ipv4(host: str, base: int) -> None:
    offset = base
    for octet in host.split("."):
        if len(octet) > 1 and octet[0] == "0":
            raise UrlSyntaxError(f"IPv4 octet '{octet}' has a leading zero",
                                 offset, len(octet))
        if int(octet) > 255:
            raise UrlSyntaxError(f"IPv4 octet {octet} out of range 0-255",
                                 offset, len(octet))
        offset += len(octet) + 1


def _check_hostname(labels: list[str], base: int) -> None:
    if sum(len(lbl) for lbl in labels) + len(labels) - 1 > MAX_HOSTNAME:
        raise UrlSyntaxError(f"host name longer than {MAX_HOSTNAME} characters",
                             base)
    offset = base
    for i, label in enumerate(labels):
        top = i == len(labels) - 1
        if not label:
            raise UrlSyntaxError("empty label in host name", offset)
        for j, c in enumerate(label):
            if c not in ALPHADIGIT and c != "-":
                raise UrlSyntaxError(f"illegal character {c!r} in host name",
                                     offset + j)
        if label[0] == "-" or label[-1] == "-":
            raise UrlSyntaxError(
                f"label '{label}' must not start or end with '-'",
                offset, len(label))
        if top:
            if label[0] not in ALPHA:
                raise UrlSyntaxError(
                    f"top-level domain '{label}' must start with a letter",
                    offset, len(label))
            if not MIN_TLD <= len(label) <= MAX_TLD:
                raise UrlSyntaxError(
                    f"top-level domain '{label}' must be {MIN_TLD}-{MAX_TLD} "
                    f"characters long", offset, len(label))
        elif len(label) > MAX_LABEL:
            raise UrlSyntaxError(
                f"label longer than {MAX_LABEL} characters", offset, len(label))
        offset += len(label) + 1


def _check_ipv6(text: str, base: int) -> None:
    def fail(reason: str) -> UrlSyntaxError:
        return UrlSyntaxError(f"invalid IPv6 address: {reason}", base, len(text))

    if not text:
        raise fail("empty")
    elided = "::" in text
    if elided:
        head, _, tail = text.partition("::")
        if "::" in tail:
            raise fail("'::' may appear only once")
        groups = (head.split(":") if head else []) + (tail.split(":") if tail else [])
    else:
        groups = text.split(":")

    budget = 8
    if groups and "." in groups[-1] and text.endswith(groups[-1]):
        v4 = groups.pop()
        pieces = v4.split(".")
        if len(pieces) != 4 or not all(p and set(p) <= DIGIT for p in pieces) \
                or any((len(p) > 1 and p[0] == "0") or int(p) > 255 for p in pieces):
            raise fail(f"bad embedded IPv4 '{v4}'")
        budget = 6
    for g in groups:
        if not g:
            raise fail("empty group")
        if len(g) > 4 or not set(g) <= HEX:
            raise fail(f"bad group '{g}'")
    if elided and len(groups) > budget - 1:
        raise fail("too many groups")
    if not elided and len(groups) != budget:
        raise fail(f"expected {budget} groups")
