"""Command-line interface.

Exit codes: 0 success, 1 domain failure (FAILURE branch, check failure,
name collisions), 2 usage, parse or I/O error, 3 transport error.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click

from . import blocks as blocks_mod
from . import codegen
from .binder import BindingError, BindingSet, resolve
from .executor import (
    Branch, PlanError, ResponseObject, TransportError, build_plan, classify, execute,
)
from .formatter import CommentInsideMessage, format_source
from .model import DEFAULT_TIMEOUT_MS, IDENTIFIER_RE, Diagnostic, RequestDocument, Severity
from .parser import DslSyntaxError, parse_directory, parse_file
from .validation import validate_document

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3

TIMEOUT_ENV = "HTTPDSL_TIMEOUT_MS"


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


def _fail(code: int, message: str) -> _Exit:
    return _Exit(code, message)


def _http_files(paths) -> list[Path]:
    out = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted((f for f in p.rglob("*.http") if f.is_file()),
                              key=lambda f: f.as_posix()))
        elif p.exists():
            out.append(p)
        else:
            raise _fail(EXIT_USAGE, f"{raw}: no such file or directory")
    return out


def _load(paths) -> tuple[list[RequestDocument], list[Diagnostic]]:
    """Parse files and directories; raise _Exit(2) when something is unreadable."""
    docs: list[RequestDocument] = []
    diags: list[Diagnostic] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found, errors = parse_directory(p)
            docs += found
            diags += errors
            continue
        try:
            docs.append(parse_file(p))
        except DslSyntaxError as exc:
            diags += exc.diagnostics
        except (OSError, UnicodeDecodeError) as exc:
            raise _fail(EXIT_USAGE, f"{raw}: cannot read file: {exc}") from None
    return docs, diags


def _print_diagnostics(diags) -> None:
    for d in diags:
        click.echo(d.render())


def _load_valid(paths) -> list[RequestDocument]:
    docs, diags = _load(paths)
    for doc in docs:
        diags += validate_document(doc)
    errors = [d for d in diags if d.severity is Severity.ERROR]
    if errors:
        for d in errors:
            click.echo(d.render(), err=True)
        raise _fail(EXIT_USAGE, "")
    return docs


def _parse_assignments(ctx, param, values) -> dict[str, str]:
    out = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}")
        if param.name == "inputs" and not IDENTIFIER_RE.match(name):
            raise click.BadParameter(f"{name!r} is not an identifier")
        out[name] = value
    return out


def _default_timeout() -> int:
    raw = os.environ.get(TIMEOUT_ENV)
    if raw is None or raw == "":
        return DEFAULT_TIMEOUT_MS
    if not raw.isdigit() or int(raw) <= 0:
        raise _fail(EXIT_USAGE, f"{TIMEOUT_ENV} must be a positive integer, got {raw!r}")
    return int(raw)


def _transport(spec: Optional[str]):
    if spec is None or spec == "http":
        return None
    kind, sep, target = spec.partition(":")
    if kind != "mock" or not sep or not target:
        raise _fail(EXIT_USAGE, f"unknown transport {spec!r} (use 'http' or 'mock:<file>')")
    from .mockserver import MockScript, ScriptedTransport
    try:
        return ScriptedTransport(MockScript.from_file(target))
    except (OSError, ValueError) as exc:
        raise _fail(EXIT_USAGE, f"cannot load mock script {target}: {exc}") from None


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except _Exit as exc:
            if exc.message:
                click.echo(f"error: {exc.message}", err=True)
            ctx.exit(exc.code)


@click.group(cls=_Group)
@click.option("-v", "--verbose", count=True, help="More log output (repeatable).")
@click.version_option(package_name="artifact", prog_name="httpdsl")
def cli(verbose: int) -> None:
    """Validate, run and generate clients for .http description files."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)


@cli.command()
@click.argument("paths", nargs=-1, required=True)
def validate(paths) -> None:
    """Report syntax and rule violations."""
    files = _http_files(paths)
    docs, diags = _load(files)
    for doc in docs:
        diags += validate_document(doc)
    _print_diagnostics(diags)
    if any(d.severity is Severity.ERROR for d in diags):
        raise _fail(EXIT_FAILURE, "")


@cli.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.argument("message")
@click.option("--input", "-i", "inputs", multiple=True, callback=_parse_assignments,
              metavar="NAME=VALUE", help="Bind an input variable.")
@click.option("--env", "-e", "env", multiple=True, callback=_parse_assignments,
              metavar="NAME=VALUE", help="Override an environment variable.")
@click.option("--transport", metavar="SPEC",
              help="'http' (default) or 'mock:<script.json>' for offline runs.")
@click.option("--json", "as_json", is_flag=True, help="Print the full response as JSON.")
def run(file, message, inputs, env, transport, as_json) -> None:
    """Send one message and print its result."""
    docs = _load_valid(_http_files([file]))
    try:
        msg = docs[0].message(message)
    except KeyError:
        names = ", ".join(m.name for m in docs[0].messages)
        raise _fail(EXIT_USAGE, f"no message named '{message}' (found: {names})") from None

    def lookup(name: str) -> Optional[str]:
        return env[name] if name in env else os.environ.get(name)

    bindings = BindingSet(inputs, lookup)
    try:
        resolved = resolve(msg, bindings, _default_timeout())
        response = execute(build_plan(resolved), _transport(transport))
    except BindingError as exc:
        raise _fail(EXIT_USAGE, str(exc)) from None
    except PlanError as exc:
        raise _fail(EXIT_USAGE, str(exc)) from None
    except TransportError as exc:
        raise _fail(EXIT_TRANSPORT, str(exc)) from None

    result = classify(response, resolved.return_form)
    if as_json or isinstance(result.output, ResponseObject):
        click.echo(json.dumps(response.to_dict(), indent=2))
    else:
        click.echo(result.output, nl=not result.output.endswith("\n"))
    if result.branch is Branch.FAILURE:
        raise _fail(EXIT_FAILURE, "")


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("--out", "-o", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Directory that receives the project.")
@click.option("--dialect", default="python", show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the report as JSON.")
def generate(paths, out_dir, dialect, as_json) -> None:
    """Emit a client project for every message."""
    if dialect not in codegen.DIALECTS:
        raise _fail(EXIT_USAGE, str(codegen.UnknownDialect(dialect)))
    docs = _load_valid(_http_files(paths))
    messages = [m for d in docs for m in d.messages]
    sources = [d.source_name for d in docs for _ in d.messages]
    try:
        tree = codegen.plan_project(messages, dialect, sources=sources)
        report = codegen.emit_project(tree, out_dir, dialect)
    except codegen.DuplicateMessageName as exc:
        raise _fail(EXIT_FAILURE, str(exc)) from None
    except codegen.IoFailure as exc:
        raise _fail(EXIT_USAGE, str(exc)) from None
    for path in report.stale:
        click.echo(f"warning: {path} has no message any more; left in place", err=True)
    if as_json:
        click.echo(json.dumps({"created": report.created, "skipped": report.skipped,
                               "overwritten": report.overwritten, "stale": report.stale},
                              indent=2))
    else:
        click.echo(report.summary())


@cli.command("blocks")
@click.argument("paths", nargs=-1)
@click.option("--out", "-o", "out_file", type=click.Path(dir_okay=False),
              help="Manifest file to write (default: stdout).")
@click.option("--with-rest-prelude", is_flag=True, help="Prepend the four REST blocks.")
@click.option("--name", "palette_name", default="blocks", show_default=True)
def blocks_cmd(paths, out_file, with_rest_prelude, palette_name) -> None:
    """Export a block palette manifest."""
    docs = _load_valid(_http_files(paths)) if paths else []
    prelude = blocks_mod.rest_prelude() if with_rest_prelude else None
    try:
        palette = blocks_mod.build_palette(docs, palette_name, prelude)
    except blocks_mod.DuplicateBlockName as exc:
        for name, first, second in exc.collisions:
            click.echo(f"error: block '{name}' defined in {first} and {second}", err=True)
        raise _fail(EXIT_FAILURE, "") from None
    text = blocks_mod.export_palette(palette)
    if out_file is None:
        click.echo(text, nl=False)
        return
    try:
        Path(out_file).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _fail(EXIT_USAGE, f"cannot write {out_file}: {exc}") from None
    click.echo(f"{len(palette.descriptors)} blocks written to {out_file}")


@cli.command()
@click.argument("paths", nargs=-1, required=True)
@click.option("--check", is_flag=True, help="Only report files that would change.")
def fmt(paths, check) -> None:
    """Rewrite files in canonical form."""
    changed = []
    broken = False
    for path in _http_files(paths):
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise _fail(EXIT_USAGE, f"{path}: cannot read file: {exc}") from None
        try:
            canonical = format_source(text, str(path))
        except DslSyntaxError as exc:
            for d in exc.diagnostics:
                click.echo(d.render(), err=True)
            broken = True
            continue
        except CommentInsideMessage as exc:
            click.echo(f"error: {exc}", err=True)
            broken = True
            continue
        if canonical == text:
            continue
        changed.append(path)
        if check:
            click.echo(f"would reformat {path}")
        else:
            path.write_text(canonical, encoding="utf-8", newline="\n")
            click.echo(f"reformatted {path}")
    if broken:
        raise _fail(EXIT_USAGE, "")
    if check and changed:
        raise _fail(EXIT_FAILURE, "")


def main(argv=None) -> None:
    cli.main(args=argv, prog_name="httpdsl")


if __name__ == "__main__":
    main()
