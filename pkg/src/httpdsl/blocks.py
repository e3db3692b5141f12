"""Workflow block descriptors derived from messages, and palette manifests.

A palette manifest is line-oriented UTF-8 text::

    httpdsl-palette 1
    palette "REST"
    source "rest.http"
    block GetRequest
      label GetRequest
      source "rest.http"
      port url TEXT
      branch Success response TEXT
      branch Failure response TEXT
    end

Quoted fields use JSON string syntax. Records appear in palette order;
exporting the same palette twice gives identical bytes.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .binder import collect_input_variables
from .model import HttpMessage, RequestDocument, ReturnForm
from .parser import parse_document
from .samples import source as sample_source

MANIFEST_MAGIC = "httpdsl-palette"
MANIFEST_VERSION = 1
REST_PRELUDE_SOURCE = "rest.http"


class PortType(enum.Enum):
    TEXT = "TEXT"


class OutputType(enum.Enum):
    TEXT = "TEXT"
    FULL = "FULL"


@dataclass(frozen=True)
class Port:
    name: str
    type: PortType = PortType.TEXT


@dataclass(frozen=True)
class BlockBranch:
    name: str
    output_name: str = "response"
    output_type: OutputType = OutputType.TEXT


@dataclass(frozen=True)
class BlockDescriptor:
    name: str
    label: str
    input_ports: tuple[Port, ...]
    branches: tuple[BlockBranch, ...]
    source: str = ""

    def port_names(self) -> list[str]:
        return [p.name for p in self.input_ports]


@dataclass(frozen=True)
class Palette:
    name: str
    descriptors: tuple[BlockDescriptor, ...] = ()
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        seen = set()
        for d in self.descriptors:
            if d.name in seen:
                raise ValueError(f"duplicate block '{d.name}' in palette '{self.name}'")
            seen.add(d.name)

    def block(self, name: str) -> BlockDescriptor:
        for d in self.descriptors:
            if d.name == name:
                return d
        raise KeyError(name)


class DuplicateBlockName(Exception):
    def __init__(self, name: str, file1: str, file2: str,
                 collisions: Sequence[tuple[str, str, str]] = ()):
        super().__init__(f"block '{name}' defined in both {file1} and {file2}")
        self.name = name
        self.file1 = file1
        self.file2 = file2
        self.collisions = list(collisions) or [(name, file1, file2)]


class ManifestError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def derive_block(message: HttpMessage, source: str = "") -> BlockDescriptor:
    """Input variables become TEXT ports; environment variables never do."""
    full = message.effective_return_value.return_form is ReturnForm.FULL_RESPONSE
    out = OutputType.FULL if full else OutputType.TEXT
    return BlockDescriptor(
        name=message.name,
        label=message.name,
        input_ports=tuple(Port(n) for n in collect_input_variables(message)),
        branches=(BlockBranch("Success", output_type=out),
                  BlockBranch("Failure", output_type=out)),
        source=source,
    )


def rest_prelude() -> Palette:
    """The four generic REST blocks, parsed from the bundled description."""
    doc = parse_document(sample_source("rest"), REST_PRELUDE_SOURCE)
    return Palette("REST", tuple(derive_block(m, REST_PRELUDE_SOURCE) for m in doc.messages),
                   (REST_PRELUDE_SOURCE,))


def build_palette(documents: Iterable[RequestDocument], palette_name: str = "blocks",
                  prelude: Optional[Palette] = None) -> Palette:
    """One block per message; names must be unique across all inputs.

    Raises :class:`DuplicateBlockName` carrying every collision found.
    """
    descriptors: list[BlockDescriptor] = list(prelude.descriptors) if prelude else []
    sources: list[str] = list(prelude.sources) if prelude else []
    owner = {d.name: d.source for d in descriptors}
    collisions = []
    for doc in documents:
        if doc.source_name not in sources:
            sources.append(doc.source_name)
        for m in doc.messages:
            if m.name in owner:
                collisions.append((m.name, owner[m.name], doc.source_name))
                continue
            owner[m.name] = doc.source_name
            descriptors.append(derive_block(m, doc.source_name))
    if collisions:
        raise DuplicateBlockName(*collisions[0], collisions=collisions)
    return Palette(palette_name, tuple(descriptors), tuple(sources))


def export_palette(palette: Palette) -> str:
    q = json.dumps
    lines = [f"{MANIFEST_MAGIC} {MANIFEST_VERSION}", f"palette {q(palette.name)}"]
    lines += [f"source {q(s)}" for s in palette.sources]
    for d in palette.descriptors:
        lines.append(f"block {d.name}")
        lines.append(f"  label {d.label}")
        lines.append(f"  source {q(d.source)}")
        lines += [f"  port {p.name} {p.type.value}" for p in d.input_ports]
        lines += [f"  branch {b.name} {b.output_name} {b.output_type.value}"
                  for b in d.branches]
        lines.append("end")
    return "\n".join(lines) + "\n"


def _string(text: str, lineno: int) -> str:
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = None
    if not isinstance(value, str):
        raise ManifestError(lineno, f"expected a quoted string, got {text!r}")
    return value


def parse_manifest(text: str) -> Palette:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != f"{MANIFEST_MAGIC} {MANIFEST_VERSION}":
        raise ManifestError(1, f"expected header '{MANIFEST_MAGIC} {MANIFEST_VERSION}'")
    name: Optional[str] = None
    sources: list[str] = []
    blocks: list[BlockDescriptor] = []
    current: Optional[dict] = None

    for lineno, line in enumerate(lines[1:], start=2):
        word, _, rest = line.strip().partition(" ")
        if current is None:
            if word == "palette" and name is None:
                name = _string(rest, lineno)
            elif word == "source" and not blocks:
                sources.append(_string(rest, lineno))
            elif word == "block" and rest:
                current = {"name": rest, "label": rest, "source": "",
                           "ports": [], "branches": []}
            else:
                raise ManifestError(lineno, f"unexpected {line!r}")
            continue
        parts = rest.split(" ")
        try:
            if word == "label":
                current["label"] = rest
            elif word == "source":
                current["source"] = _string(rest, lineno)
            elif word == "port" and len(parts) == 2:
                current["ports"].append(Port(parts[0], PortType(parts[1])))
            elif word == "branch" and len(parts) == 3:
                current["branches"].append(
                    BlockBranch(parts[0], parts[1], OutputType(parts[2])))
            elif word == "end" and not rest:
                blocks.append(BlockDescriptor(current["name"], current["label"],
                                              tuple(current["ports"]),
                                              tuple(current["branches"]), current["source"]))
                current = None
            else:
                raise ManifestError(lineno, f"unexpected {line!r}")
        except ValueError as exc:
            if isinstance(exc, ManifestError):
                raise
            raise ManifestError(lineno, str(exc)) from None
    if current is not None:
        raise ManifestError(len(lines), f"block '{current['name']}' is missing 'end'")
    if name is None:
        raise ManifestError(2, "missing palette name")
    try:
        return Palette(name, tuple(blocks), tuple(sources))
    except ValueError as exc:
        raise ManifestError(len(lines), str(exc)) from None


__all__ = [
    "BlockBranch", "BlockDescriptor", "DuplicateBlockName", "ManifestError", "OutputType",
    "Palette", "Port", "PortType", "build_palette", "derive_block", "export_palette",
    "parse_manifest", "rest_prelude",
]
