"""Lexer and recursive-descent parser for ``.http`` description files."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .model import (
    ENTITY_ALIASES, ENV_NAME_RE, IDENTIFIER_RE, AbstractUrl, BasicAuthSpec,
    Body, ContentTypeSpec, Customization, Diagnostic, EntityKind, Header,
    HeaderKey, HttpMessage, MediaType, Parameter, ProxySpec, RequestDocument,
    RequestMethod, ReturnForm, ReturnValue, Severity, Span, Value, VariableRef,
    WellKnownHeader,
)

KEYWORDS = frozenset("""
    http name url server path type param header body contentType entityType
    payload returns expect as customize proxy host port basicauth user
    password timeout input environment
""".split())

_WORD_STOP = frozenset(' \t\r\n{}"')


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    STRING = "string-literal"
    PUNCT = "punctuation"
    ENV_NAME = "env-name"
    SIGIL = "variable-sigil"
    NUMBER = "number"
    WORD = "word"
    WHITESPACE = "whitespace"
    COMMENT = "comment"
    EOF = "eof"


TRIVIA = (TokenKind.WHITESPACE, TokenKind.COMMENT)
BARE = (TokenKind.KEYWORD, TokenKind.IDENTIFIER, TokenKind.ENV_NAME,
        TokenKind.NUMBER, TokenKind.WORD)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: Span
    offset: int
    value: str = ""  # decoded text for strings

    @property
    def text(self) -> str:
        return self.value if self.kind is TokenKind.STRING else self.lexeme

    @property
    def end(self) -> int:
        return self.offset + len(self.lexeme)


class DslSyntaxError(Exception):
    """Raised by :func:`parse_document`; carries every diagnostic found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(d.render() for d in diagnostics))


class _LexError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(message)
        self.message = message
        self.span = span


class Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1

    def _span_at(self, offset: int, length: int) -> Span:
        return Span(self.line, self.col + (offset - self.pos), length)

    def _advance_to(self, end: int) -> None:
        chunk = self.src[self.pos:end]
        nl = chunk.count("\n")
        if nl:
            self.line += nl
            self.col = len(chunk) - chunk.rfind("\n")
        else:
            self.col += len(chunk)
        self.pos = end

    def _emit(self, kind: TokenKind, end: int, value: str = "") -> Token:
        tok = Token(kind, self.src[self.pos:end],
                    Span(self.line, self.col, end - self.pos), self.pos, value)
        self._advance_to(end)
        return tok

    def tokens(self) -> list[Token]:
        """Tokenize the whole source, trivia included.

        Raises :class:`_LexError` on the first malformed token.
        """
        out = []
        src = self.src
        n = len(src)
        while self.pos < n:
            c = src[self.pos]
            if c.isspace():
                end = self.pos
                while end < n and src[end].isspace():
                    end += 1
                out.append(self._emit(TokenKind.WHITESPACE, end))
            elif src.startswith("//", self.pos):
                end = src.find("\n", self.pos)
                out.append(self._emit(TokenKind.COMMENT, n if end < 0 else end))
            elif c in "{}:":
                out.append(self._emit(TokenKind.PUNCT, self.pos + 1))
            elif c == "$":
                out.append(self._emit(TokenKind.SIGIL, self.pos + 1))
            elif c == '"':
                out.append(self._string())
            else:
                out.append(self._word())
        out.append(Token(TokenKind.EOF, "", Span(self.line, self.col, 0), n))
        return out

    def _string(self) -> Token:
        src = self.src
        i = self.pos + 1
        chars = []
        while True:
            if i >= len(src) or src[i] == "\n":
                raise _LexError("unterminated string literal",
                                self._span_at(self.pos, i - self.pos))
            c = src[i]
            if c == '"':
                return self._emit(TokenKind.STRING, i + 1, "".join(chars))
            if c == "\\":
                nxt = src[i + 1:i + 2]
                if nxt not in ('"', "\\"):
                    raise _LexError(f"invalid escape sequence '\\{nxt}'",
                                    self._span_at(i, 2))
                chars.append(nxt)
                i += 2
                continue
            chars.append(c)
            i += 1

    def _word(self) -> Token:
        src = self.src
        n = len(src)
        end = self.pos
        while end < n and src[end] not in _WORD_STOP:
            # a colon ends a word when followed by a separator
            if src[end] == ":" and (end + 1 >= n or src[end + 1] in _WORD_STOP):
                break
            end += 1
        text = src[self.pos:end]
        if text in KEYWORDS:
            kind = TokenKind.KEYWORD
        elif text.isdigit():
            kind = TokenKind.NUMBER
        elif ENV_NAME_RE.match(text):
            kind = TokenKind.ENV_NAME
        elif IDENTIFIER_RE.match(text):
            kind = TokenKind.IDENTIFIER
        else:
            kind = TokenKind.WORD
        return self._emit(kind, end)


def tokenize(source: str) -> list[Token]:
    return Lexer(source).tokens()


class _Abort(Exception):
    """Unwinds out of a message after a syntax error was recorded."""


class Parser:
    def __init__(self, tokens: list[Token], source_name: str):
        self.toks = [t for t in tokens if t.kind not in TRIVIA]
        self.i = 0
        self.source_name = source_name
        self.diagnostics: list[Diagnostic] = []

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def _next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind is not TokenKind.EOF:
            self.i += 1
        return tok

    def _is(self, lexeme: str) -> bool:
        t = self.tok
        return t.lexeme == lexeme and t.kind in (TokenKind.KEYWORD, TokenKind.PUNCT)

    def _error(self, message: str, span: Span) -> None:
        self.diagnostics.append(
            Diagnostic(Severity.ERROR, span, message, self.source_name))

    def _fail(self, message: str, tok: Optional[Token] = None) -> _Abort:
        tok = tok or self.tok
        self._error(message, tok.span)
        return _Abort()

    def _describe(self, tok: Token) -> str:
        if tok.kind is TokenKind.EOF:
            return "end of file"
        return f"'{tok.lexeme}'"

    def _expect(self, lexeme: str) -> Token:
        if not self._is(lexeme):
            if lexeme == "}" and self.tok.kind is TokenKind.EOF:
                raise self._fail("unterminated block: expected '}'")
            raise self._fail(f"expected '{lexeme}', found {self._describe(self.tok)}")
        return self._next()

    @staticmethod
    def _join(a: Span, b: Token) -> Span:
        if a.line == b.span.line:
            return Span(a.line, a.column, b.span.column + b.span.length - a.column)
        return a

    # -- document

    def parse_document(self) -> list[HttpMessage]:
        messages = []
        while self.tok.kind is not TokenKind.EOF:
            if self._is("http"):
                start = self.i
                try:
                    messages.append(self._message())
                except _Abort:
                    self._recover(start)
            else:
                tok = self._next()
                if tok.kind is TokenKind.WORD or tok.kind is TokenKind.IDENTIFIER:
                    self._error(f"unknown keyword '{tok.lexeme}'", tok.span)
                else:
                    self._error(f"expected 'http', found {self._describe(tok)}",
                                tok.span)
                self._skip_to_http()
        if not messages and not self.diagnostics:
            self._error("document must contain at least one http message",
                        self.tok.span)
        return messages

    def _skip_to_http(self) -> None:
        while self.tok.kind is not TokenKind.EOF and not self._is("http"):
            self._next()

    def _recover(self, start: int) -> None:
        # skip to the brace closing the message that failed
        self.i = start
        depth = 0
        while self.tok.kind is not TokenKind.EOF:
            tok = self._next()
            if tok.lexeme == "{" and tok.kind is TokenKind.PUNCT:
                depth += 1
            elif tok.lexeme == "}" and tok.kind is TokenKind.PUNCT:
                depth -= 1
                if depth <= 0:
                    break
            elif depth <= 1 and tok.lexeme == "http" and self.i - 1 > start \
                    and tok.kind is TokenKind.KEYWORD:
                self.i -= 1
                break

    # -- message

    def _message(self) -> HttpMessage:
        head = self._expect("http")
        self._expect("{")
        spans: dict[str, Span] = {"": head.span}
        seen: dict[str, Token] = {}
        fields: dict[str, object] = {}
        query: list[Parameter] = []
        headers: list[Header] = []

        def once(tok: Token, key: str) -> None:
            if key in seen:
                raise self._fail(f"duplicate field '{key}'", tok)
            seen[key] = tok

        while not self._is("}"):
            tok = self.tok
            if tok.kind is TokenKind.EOF:
                raise self._fail("unterminated block: expected '}'")
            kw = tok.lexeme if tok.kind is TokenKind.KEYWORD else None
            if kw == "name":
                once(tok, "name")
                self._next()
                t = self._next()
                if t.kind not in BARE or not IDENTIFIER_RE.match(t.lexeme):
                    raise self._fail(
                        f"message name must be an identifier, found {self._describe(t)}", t)
                fields["name"] = t.lexeme
                spans["name"] = t.span
            elif kw == "url":
                once(tok, "url")
                self._next()
                self._expect("server")
                server, spans["url.server"] = self._value()
                path: Value = ""
                if self._is("path"):
                    self._next()
                    path, spans["url.path"] = self._value()
                fields["url"] = AbstractUrl(server, path)
            elif kw == "type":
                once(tok, "type")
                self._next()
                t = self._next()
                try:
                    fields["type"] = RequestMethod(t.lexeme)
                except ValueError:
                    raise self._fail(
                        f"unknown request method {self._describe(t)} "
                        f"(expected GET, POST, PUT or DELETE)", t) from None
                spans["type"] = t.span
            elif kw == "param":
                self._next()
                idx = len(query)
                key, spans[f"query.{idx}.key"] = self._value()
                self._expect(":")
                value, spans[f"query.{idx}.value"] = self._value()
                spans[f"query.{idx}"] = tok.span
                query.append(Parameter(key, value))
            elif kw == "header":
                self._next()
                idx = len(headers)
                hkey, spans[f"headers.{idx}.key"] = self._header_key()
                self._expect(":")
                value, spans[f"headers.{idx}.value"] = self._value()
                spans[f"headers.{idx}"] = tok.span
                headers.append(Header(hkey, value))
            elif kw == "body":
                once(tok, "body")
                self._next()
                spans["body"] = tok.span
                fields["body"] = self._body(spans)
            elif kw == "returns":
                once(tok, "returns")
                self._next()
                spans["return_value"] = tok.span
                fields["returns"] = self._returns(spans)
            elif kw == "customize":
                once(tok, "customize")
                self._next()
                spans["customization"] = tok.span
                fields["customize"] = self._customize(spans)
            elif tok.kind in (TokenKind.IDENTIFIER, TokenKind.WORD,
                              TokenKind.KEYWORD, TokenKind.ENV_NAME):
                raise self._fail(f"unknown keyword '{tok.lexeme}'")
            else:
                raise self._fail(f"expected a field keyword, found {self._describe(tok)}")
        self._next()

        missing = [k for k in ("name", "url", "type") if k not in fields]
        if missing:
            for k in missing:
                self._error(f"missing mandatory field '{k}'", head.span)
            raise _Abort()
        return HttpMessage(
            name=fields["name"],  # type: ignore[arg-type]
            url=fields["url"],  # type: ignore[arg-type]
            request_method=fields["type"],  # type: ignore[arg-type]
            query=tuple(query),
            headers=tuple(headers),
            body=fields.get("body"),  # type: ignore[arg-type]
            return_value=fields.get("returns"),  # type: ignore[arg-type]
            customization=fields.get("customize"),  # type: ignore[arg-type]
            spans=spans,
        )

    # -- values

    def _variable(self) -> tuple[Optional[VariableRef], Span]:
        tok = self.tok
        if tok.kind is not TokenKind.KEYWORD or tok.lexeme not in ("input", "environment"):
            return None, tok.span
        self._next()
        if tok.lexeme == "input":
            sigil = self._next()
            if sigil.kind is not TokenKind.SIGIL:
                raise self._fail(
                    f"malformed input variable: expected '$name' after 'input', "
                    f"found {self._describe(sigil)}", sigil)
            name = self._next()
            if name.offset != sigil.end or name.kind not in BARE \
                    or not IDENTIFIER_RE.match(name.lexeme):
                raise self._fail(
                    "malformed input variable: '$' must be directly followed by "
                    "an identifier", name if name.offset == sigil.end else sigil)
            return VariableRef.input(name.lexeme), self._join(tok.span, name)
        name = self._next()
        if name.kind not in BARE or not ENV_NAME_RE.match(name.lexeme):
            raise self._fail(
                f"malformed environment variable {self._describe(name)}: expected "
                f"capitalized words joined by '_'", name)
        return VariableRef.env(name.lexeme), self._join(tok.span, name)

    def _value(self) -> tuple[Value, Span]:
        var, span = self._variable()
        if var is not None:
            return var, span
        tok = self.tok
        if tok.kind is TokenKind.STRING or tok.kind in BARE:
            self._next()
            return tok.text, tok.span
        raise self._fail(f"expected a value, found {self._describe(tok)}")

    def _header_key(self) -> tuple[HeaderKey, Span]:
        var, span = self._variable()
        if var is not None:
            return var, span
        tok = self.tok
        if tok.kind is TokenKind.STRING:
            self._next()
            return tok.value, tok.span
        if tok.kind in BARE:
            self._next()
            return WellKnownHeader.lookup(tok.lexeme) or tok.lexeme, tok.span
        raise self._fail(f"expected a header name, found {self._describe(tok)}")

    def _content_type(self) -> tuple[ContentTypeSpec, Span]:
        var, span = self._variable()
        if var is not None:
            return var, span
        tok = self.tok
        if tok.kind is TokenKind.STRING:
            self._next()
            return tok.value, tok.span
        if tok.kind in BARE:
            self._next()
            return MediaType.lookup(tok.lexeme) or tok.lexeme, tok.span
        raise self._fail(f"expected a content type, found {self._describe(tok)}")

    # -- blocks

    def _block(self, handlers: dict, label: str) -> dict[str, Token]:
        self._expect("{")
        seen: dict[str, Token] = {}
        while not self._is("}"):
            tok = self.tok
            if tok.kind is TokenKind.EOF:
                raise self._fail("unterminated block: expected '}'")
            handler = handlers.get(tok.lexeme) if tok.kind is TokenKind.KEYWORD else None
            if handler is None:
                raise self._fail(f"unknown keyword {self._describe(tok)} in {label}")
            if tok.lexeme in seen:
                raise self._fail(f"duplicate field '{tok.lexeme}' in {label}")
            seen[tok.lexeme] = tok
            self._next()
            handler()
        self._next()
        return seen

    def _body(self, spans: dict[str, Span]) -> Body:
        got: dict[str, object] = {}

        def content_type() -> None:
            got["ct"], spans["body.content_type"] = self._content_type()

        def entity_type() -> None:
            t = self._next()
            kind = ENTITY_ALIASES.get(t.lexeme)
            if kind is None:
                try:
                    kind = EntityKind(t.lexeme)
                except ValueError:
                    raise self._fail(
                        f"unknown entity type {self._describe(t)} "
                        f"(expected TEXT, FILE, STREAM or BYTES)", t) from None
            got["et"] = kind
            spans["body.entity_type"] = t.span

        def payload() -> None:
            got["pl"], spans["body.payload"] = self._value()

        open_tok = self.tok
        self._block({"contentType": content_type, "entityType": entity_type,
                     "payload": payload}, "body")
        for key, word in (("ct", "contentType"), ("et", "entityType"), ("pl", "payload")):
            if key not in got:
                raise self._fail(f"body is missing '{word}'", open_tok)
        return Body(got["ct"], got["et"], got["pl"])  # type: ignore[arg-type]

    def _returns(self, spans: dict[str, Span]) -> ReturnValue:
        got: dict[str, object] = {}

        def expect() -> None:
            got["type"], spans["return_value.expected_type"] = self._content_type()
            self._expect("as")
            t = self._next()
            try:
                got["form"] = ReturnForm(t.lexeme)
            except ValueError:
                raise self._fail(
                    f"unknown return form {self._describe(t)} "
                    f"(expected payload or response)", t) from None

        open_tok = self.tok
        self._block({"expect": expect}, "returns")
        if not got:
            raise self._fail("returns is missing 'expect'", open_tok)
        return ReturnValue(got["type"], got["form"])  # type: ignore[arg-type]

    def _customize(self, spans: dict[str, Span]) -> Customization:
        got: dict[str, object] = {}

        def proxy() -> None:
            self._expect("host")
            host, spans["customization.proxy.host"] = self._value()
            self._expect("port")
            port, spans["customization.proxy.port"] = self._value()
            got["proxy"] = ProxySpec(host, port)

        def basicauth() -> None:
            self._expect("user")
            user, spans["customization.basic_auth.username"] = self._value()
            self._expect("password")
            pw, spans["customization.basic_auth.password"] = self._value()
            got["auth"] = BasicAuthSpec(user, pw)

        def timeout() -> None:
            t = self._next()
            if t.kind is not TokenKind.NUMBER:
                raise self._fail(
                    f"timeout must be a number of milliseconds, found {self._describe(t)}", t)
            got["timeout"] = int(t.lexeme)
            spans["customization.timeout_ms"] = t.span

        self._block({"proxy": proxy, "basicauth": basicauth, "timeout": timeout},
                    "customize")
        return Customization(got.get("proxy"), got.get("auth"),  # type: ignore[arg-type]
                             got.get("timeout"))  # type: ignore[arg-type]


def parse_document(source: str, source_name: str = "<string>") -> RequestDocument:
    """Parse description-file text.

    Raises :class:`DslSyntaxError` listing every error found; the parser
    recovers at message boundaries so one bad message does not hide others.
    """
    try:
        tokens = tokenize(source)
    except _LexError as exc:
        raise DslSyntaxError([Diagnostic(Severity.ERROR, exc.span, exc.message,
                                         source_name)]) from None
    parser = Parser(tokens, source_name)
    messages = parser.parse_document()
    if parser.diagnostics:
        raise DslSyntaxError(parser.diagnostics)
    return RequestDocument(source_name, tuple(messages))


def parse_file(path: Union[str, os.PathLike]) -> RequestDocument:
    path = Path(path)
    return parse_document(path.read_text(encoding="utf-8"), str(path))


def parse_directory(root: Union[str, os.PathLike]
                    ) -> tuple[list[RequestDocument], list[Diagnostic]]:
    """Parse every ``*.http`` file below ``root``, ordered by path.

    Errors are collected per file instead of stopping at the first one.
    """
    root = Path(root)
    files = sorted((p for p in root.rglob("*.http") if p.is_file()),
                   key=lambda p: p.as_posix())
    documents: list[RequestDocument] = []
    diagnostics: list[Diagnostic] = []
    for path in files:
        try:
            documents.append(parse_file(path))
        except DslSyntaxError as exc:
            diagnostics.extend(exc.diagnostics)
        except (OSError, UnicodeDecodeError) as exc:
            diagnostics.append(Diagnostic(Severity.ERROR, Span(1, 1, 0),
                                          f"cannot read file: {exc}", str(path)))
    return documents, diagnostics
