"""Client project generation.

A dialect turns parsed messages into a :class:`ProjectTree`: a manifest,
three shared support units and one client unit per message. :func:`emit`
writes a tree to disk without ever deleting anything.
"""

from __future__ import annotations

import enum
import keyword
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Iterable, Optional, Sequence

import jinja2

from ..binder import collect_input_variables
from ..model import (
    DEFAULT_TIMEOUT_MS, ContentTypeSpec, HeaderKey, HttpMessage, MediaType,
    Value, VariableKind, WellKnownHeader,
)

DEFAULT_ROOT = "httpLib"
PROJECT_VERSION = "0.1.0"


class CodegenError(Exception):
    pass


class DuplicateMessageName(CodegenError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"duplicate message name '{name}'" + (f" ({detail})" if detail else ""))
        self.name = name


class UnknownDialect(CodegenError):
    def __init__(self, dialect: str):
        super().__init__(f"unknown dialect '{dialect}' (available: {', '.join(DIALECTS)})")
        self.dialect = dialect


class IoFailure(CodegenError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
        self.reason = reason


class OverwritePolicy(enum.Enum):
    ALWAYS = "always"
    IF_ABSENT = "if_absent"


@dataclass(frozen=True)
class FileSpec:
    path: str
    content: bytes
    policy: OverwritePolicy = OverwritePolicy.ALWAYS


def _check_relative(path: str) -> None:
    p = PurePosixPath(path)
    if not path or p.is_absolute() or "\\" in path or any(
            part in ("..", ".", "") for part in path.split("/")):
        raise ValueError(f"illegal project path '{path}'")


@dataclass(frozen=True)
class ProjectTree:
    root: str = DEFAULT_ROOT
    files: tuple[FileSpec, ...] = ()

    def __post_init__(self):
        _check_relative(self.root)
        seen = set()
        for f in self.files:
            _check_relative(f.path)
            if f.path in seen:
                raise ValueError(f"duplicate project path '{f.path}'")
            seen.add(f.path)

    def paths(self) -> list[str]:
        return [f.path for f in self.files]

    def file(self, path: str) -> FileSpec:
        for f in self.files:
            if f.path == path:
                return f
        raise KeyError(path)


@dataclass
class EmitReport:
    created: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    overwritten: list[str] = field(default_factory=list)
    # files under a client directory that no message produces any more
    stale: list[str] = field(default_factory=list)

    def summary(self) -> str:
        return (f"created: {len(self.created)}, skipped: {len(self.skipped)}, "
                f"overwritten: {len(self.overwritten)}")


def snake_case(name: str) -> str:
    s = re.sub(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])", "_", name)
    return s.lower()


def py_identifier(name: str) -> str:
    return name + "_" if keyword.iskeyword(name) else name


class PythonDialect:
    """Standard-library Python client project."""

    name = "python"
    source_dir = "src/main/python"
    package = "httplib"

    def __init__(self):
        self.env = jinja2.Environment(
            loader=jinja2.PackageLoader("httpdsl.codegen", "templates/python"),
            undefined=jinja2.StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=True,
            lstrip_blocks=True,
            autoescape=False,
        )
        self.env.filters["pystr"] = repr

    def support_path(self, unit: str) -> str:
        return f"{self.source_dir}/{self.package}/support/{unit}.py"

    def client_dir(self) -> str:
        return f"{self.source_dir}/{self.package}/clients"

    def client_path(self, message: HttpMessage) -> str:
        return f"{self.client_dir()}/{snake_case(message.name)}.py"

    def support_units(self) -> list[FileSpec]:
        return [FileSpec(self.support_path(unit),
                         self.env.get_template(f"{unit}.py.j2").render().encode("utf-8"))
                for unit in ("response_handler", "response_object", "request_type")]

    def manifest(self, units: Sequence[str]) -> FileSpec:
        text = self.env.get_template("manifest.txt.j2").render(
            project=DEFAULT_ROOT, version=PROJECT_VERSION, source_dir=self.source_dir,
            units=units)
        return FileSpec("manifest.txt", text.encode("utf-8"))

    def render_client(self, message: HttpMessage, source: str = "") -> str:
        inputs = collect_input_variables(message)

        def expr(v: Value) -> str:
            if isinstance(v, str):
                return repr(v)
            if v.kind is VariableKind.INPUT:
                return py_identifier(v.name)
            return f"_rh.environment({v.name!r})"

        def header_key(k: HeaderKey) -> str:
            return repr(k.value) if isinstance(k, WellKnownHeader) else expr(k)

        def content_type(ct: ContentTypeSpec) -> str:
            return repr(ct.value) if isinstance(ct, MediaType) else expr(ct)

        body = None
        if message.body is not None:
            b = message.body
            body = {"kind": b.entity_type.value, "payload": expr(b.payload),
                    "content_type": content_type(b.content_type)}
        rv = message.effective_return_value
        expected = rv.expected_type
        c = message.customization
        timeout = DEFAULT_TIMEOUT_MS
        proxy = basic_auth = None
        if c is not None:
            if c.timeout_ms is not None:
                timeout = c.timeout_ms
            if c.proxy is not None:
                proxy = {"host": expr(c.proxy.host), "port": expr(c.proxy.port)}
            if c.basic_auth is not None:
                basic_auth = {"user": expr(c.basic_auth.username),
                              "password": expr(c.basic_auth.password)}
        return self.env.get_template("client.py.j2").render(
            name=message.name,
            source=source or "a request description",
            inputs=tuple(inputs),
            params=[py_identifier(n) for n in inputs],
            return_form=rv.return_form.value,
            expected_type=repr(expected.value) if isinstance(expected, MediaType)
            else repr(expected) if isinstance(expected, str) else "None",
            timeout_customized=c is not None and c.timeout_ms is not None,
            timeout_ms=timeout,
            proxy=proxy,
            basic_auth=basic_auth,
            server=expr(message.url.server),
            path=expr(message.url.path),
            query=[(expr(p.key), expr(p.value)) for p in message.query],
            headers=[(header_key(h.key), expr(h.value)) for h in message.headers],
            body=body,
            method=message.request_method.value,
        )

    def plan(self, messages: Sequence[HttpMessage], sources: Sequence[str]) -> list[FileSpec]:
        clients = [FileSpec(self.client_path(m), self.render_client(m, s).encode("utf-8"))
                   for m, s in zip(messages, sources)]
        support = self.support_units()
        units = [f.path for f in support + clients]
        return [self.manifest(units), *support, *clients]


DIALECTS = {"python": PythonDialect}
_dialect_cache: dict[str, PythonDialect] = {}


def get_dialect(name: str) -> PythonDialect:
    if name not in DIALECTS:
        raise UnknownDialect(name)
    if name not in _dialect_cache:
        _dialect_cache[name] = DIALECTS[name]()
    return _dialect_cache[name]


def plan_project(messages: Sequence[HttpMessage], target_dialect: str = "python",
                 sources: Optional[Sequence[str]] = None,
                 root: str = DEFAULT_ROOT) -> ProjectTree:
    """Lay out the client project for ``messages``.

    ``sources`` optionally names the description file of each message; it
    only appears in the generated module docstrings.
    """
    dialect = get_dialect(target_dialect)
    seen: dict[str, str] = {}
    for m in messages:
        if m.name in seen:
            raise DuplicateMessageName(m.name)
        unit = dialect.client_path(m)
        if unit in seen.values():
            other = next(k for k, v in seen.items() if v == unit)
            raise DuplicateMessageName(m.name, f"same client unit as '{other}'")
        seen[m.name] = unit
    if sources is None:
        sources = [""] * len(messages)
    elif len(sources) != len(messages):
        raise ValueError(f"{len(sources)} sources given for {len(messages)} messages")
    return ProjectTree(root, tuple(dialect.plan(messages, sources)))


def render_client_unit(message: HttpMessage, target_dialect: str = "python") -> str:
    return get_dialect(target_dialect).render_client(message)


def _write(target: Path, content: bytes) -> None:
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(content)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(tree: ProjectTree, out_dir, client_dirs: Iterable[str] = ()) -> EmitReport:
    """Write ``tree`` below ``out_dir/tree.root``.

    ALWAYS files are rewritten when their bytes differ and reported as
    overwritten either way; IF_ABSENT files are never replaced. Nothing is
    deleted: files found in ``client_dirs`` that the tree does not contain
    are only listed in ``report.stale``.
    """
    base = Path(out_dir) / tree.root
    report = EmitReport()
    for f in tree.files:
        target = base / f.path
        try:
            exists = target.exists()
            if exists and f.policy is OverwritePolicy.IF_ABSENT:
                report.skipped.append(f.path)
                continue
            if not exists or target.read_bytes() != f.content:
                _write(target, f.content)
        except OSError as exc:
            raise IoFailure(str(target), exc.strerror or str(exc)) from None
        (report.overwritten if exists else report.created).append(f.path)

    known = set(tree.paths())
    for d in client_dirs:
        folder = base / d
        if folder.is_dir():
            for p in sorted(folder.iterdir()):
                rel = f"{d}/{p.name}"
                if p.is_file() and p.suffix == ".py" and rel not in known:
                    report.stale.append(rel)
    return report


def emit_project(tree: ProjectTree, out_dir, target_dialect: str = "python") -> EmitReport:
    """:func:`emit` with stale detection in the dialect's client directory."""
    return emit(tree, out_dir, [get_dialect(target_dialect).client_dir()])


__all__ = [
    "CodegenError", "DIALECTS", "DuplicateMessageName", "EmitReport", "FileSpec",
    "IoFailure", "OverwritePolicy", "ProjectTree", "UnknownDialect", "emit",
    "emit_project", "plan_project", "render_client_unit", "snake_case",
]
