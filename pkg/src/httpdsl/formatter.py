"""Canonical text rendering of request documents.

Literal values are always double-quoted; names, methods, enums, well-known
header keys and well-known media types are written bare. A message without
optional fields renders to five lines.
"""

from __future__ import annotations

from .model import (
    ContentTypeSpec, HeaderKey, HttpMessage, MediaType, RequestDocument,
    Value, VariableRef, WellKnownHeader,
)

INDENT = "    "


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_value(value: Value) -> str:
    if isinstance(value, VariableRef):
        return str(value)
    return quote(value)


def format_header_key(key: HeaderKey) -> str:
    if isinstance(key, WellKnownHeader):
        return key.value
    return format_value(key)


def format_content_type(ct: ContentTypeSpec) -> str:
    if isinstance(ct, MediaType):
        return ct.value
    return format_value(ct)


def format_message(message: HttpMessage) -> str:
    i1, i2 = INDENT, INDENT * 2
    url = f"url server {format_value(message.url.server)}"
    if message.url.path != "":
        url += f" path {format_value(message.url.path)}"
    lines = [
        "http {",
        f"{i1}name {message.name}",
        f"{i1}{url}",
        f"{i1}type {message.request_method.value}",
    ]
    for p in message.query:
        lines.append(f"{i1}param {format_value(p.key)}: {format_value(p.value)}")
    for h in message.headers:
        lines.append(f"{i1}header {format_header_key(h.key)}: {format_value(h.value)}")
    if message.body is not None:
        b = message.body
        lines += [
            f"{i1}body {{",
            f"{i2}contentType {format_content_type(b.content_type)}",
            f"{i2}entityType {b.entity_type.value}",
            f"{i2}payload {format_value(b.payload)}",
            f"{i1}}}",
        ]
    if message.return_value is not None:
        r = message.return_value
        lines += [
            f"{i1}returns {{",
            f"{i2}expect {format_content_type(r.expected_type)} as {r.return_form.value}",
            f"{i1}}}",
        ]
    c = message.customization
    if c is not None:
        inner = []
        if c.proxy is not None:
            inner.append(f"{i2}proxy host {format_value(c.proxy.host)} "
                         f"port {format_value(c.proxy.port)}")
        if c.basic_auth is not None:
            inner.append(f"{i2}basicauth user {format_value(c.basic_auth.username)} "
                         f"password {format_value(c.basic_auth.password)}")
        if c.timeout_ms is not None:
            inner.append(f"{i2}timeout {c.timeout_ms}")
        if inner:
            lines += [f"{i1}customize {{", *inner, f"{i1}}}"]
        else:
            lines.append(f"{i1}customize {{ }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_document(doc: RequestDocument) -> str:
    return "\n".join(format_message(m) for m in doc.messages)


class CommentInsideMessage(ValueError):
    def __init__(self, source_name: str, line: int):
        super().__init__(f"{source_name}:{line}: comments inside an http block are not "
                         "kept by the formatter; move the comment above the block")
        self.line = line


def format_source(source: str, source_name: str = "<string>") -> str:
    """Canonical text for a whole file, keeping comments between messages.

    Raises :class:`~httpdsl.parser.DslSyntaxError` when ``source`` does not
    parse and :class:`CommentInsideMessage` for comments within a block.
    """
    from .parser import TokenKind, parse_document, tokenize

    doc = parse_document(source, source_name)
    leading: list[list[str]] = [[] for _ in doc.messages]
    trailing: list[str] = []
    depth = 0
    index = 0
    for tok in tokenize(source):
        if tok.kind is TokenKind.COMMENT:
            if depth:
                raise CommentInsideMessage(source_name, tok.span.line)
            text = tok.lexeme.rstrip()
            (leading[index] if index < len(leading) else trailing).append(text)
        elif tok.kind is TokenKind.PUNCT and tok.lexeme == "{":
            depth += 1
        elif tok.kind is TokenKind.PUNCT and tok.lexeme == "}":
            depth -= 1
            if depth == 0:
                index += 1
    parts = ["".join(c + "\n" for c in comments) + format_message(m)
             for comments, m in zip(leading, doc.messages)]
    if trailing:
        parts.append("".join(c + "\n" for c in trailing))
    return "\n".join(parts)
