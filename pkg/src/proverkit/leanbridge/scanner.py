"""Syntactic scanner for Lean declaration headers.

Extracts (kind, qualified name, signature, doc, span) records from source
text without running the elaborator.  Namespace blocks are tracked so
names come out fully qualified.  Shared by local search, the retrieval
index builder and blueprint status reporting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

DECL_KINDS = ("theorem", "lemma", "def", "abbrev", "structure", "instance",
              "class", "inductive", "opaque", "axiom")

_DECL_RE = re.compile(
    r"^\s*(?:@\[[^\]]*\]\s*)?"
    r"(?:(?:private|protected|noncomputable|partial|unsafe|scoped|local)\s+)*"
    r"(theorem|lemma|def|abbrev|structure|instance|class|inductive|opaque|axiom)"
    r"\s+([A-Za-z_][A-Za-z0-9_'.!?]*)"
)
_NAMESPACE_RE = re.compile(r"^\s*namespace\s+([A-Za-z_][A-Za-z0-9_'.]*)")
_SECTION_RE = re.compile(r"^\s*section\b")
_END_RE = re.compile(r"^\s*end\b")
_DOC_OPEN_RE = re.compile(r"^\s*/--")


@dataclass(frozen=True)
class DeclHeader:
    name: str  # fully qualified
    kind: str
    signature: str
    doc: str
    path: str
    line: int  # 1-based line of the declaration keyword
    end_line: int  # last line of the declaration body (inclusive)
    body: str


def _signature_of(lines: list[str], start: int, end: int) -> str:
    """Header text from the decl keyword up to the first top-level ``:=``."""
    collected: list[str] = []
    for i in range(start, min(end, start + 20)):
        line = lines[i]
        idx = line.find(":=")
        if idx != -1:
            collected.append(line[:idx].rstrip())
            break
        collected.append(line.rstrip())
        if line.rstrip().endswith(" by") or line.rstrip() == "by":
            break
    return " ".join(s.strip() for s in collected if s.strip())


def scan_source(text: str, path: str = "<string>") -> list[DeclHeader]:
    lines = text.splitlines()
    stack: list[str | None] = []  # namespace names; None for sections
    pending_doc = ""
    in_doc = False
    doc_lines: list[str] = []
    headers: list[DeclHeader] = []
    raw: list[tuple[int, str, str, str]] = []  # (idx, kind, name, doc)

    for idx, line in enumerate(lines):
        if in_doc:
            doc_lines.append(line)
            if "-/" in line:
                in_doc = False
                pending_doc = _clean_doc("\n".join(doc_lines))
            continue
        if _DOC_OPEN_RE.match(line):
            doc_lines = [line]
            if "-/" in line[line.find("/--") + 3:]:
                pending_doc = _clean_doc(line)
            else:
                in_doc = True
            continue
        ns = _NAMESPACE_RE.match(line)
        if ns:
            stack.append(ns.group(1))
            pending_doc = ""
            continue
        if _SECTION_RE.match(line):
            stack.append(None)
            continue
        if _END_RE.match(line):
            if stack:
                stack.pop()
            continue
        decl = _DECL_RE.match(line)
        if decl:
            kind, name = decl.group(1), decl.group(2)
            prefix = [n for n in stack if n]
            qualified = ".".join(prefix + [name]) if prefix else name
            raw.append((idx, kind, qualified, pending_doc))
            pending_doc = ""
        elif line.strip():
            pending_doc = ""

    for pos, (idx, kind, name, doc) in enumerate(raw):
        end_idx = raw[pos + 1][0] - 1 if pos + 1 < len(raw) else len(lines) - 1
        headers.append(DeclHeader(
            name=name,
            kind=kind,
            signature=_signature_of(lines, idx, end_idx + 1),
            doc=doc,
            path=path,
            line=idx + 1,
            end_line=end_idx + 1,
            body="\n".join(lines[idx:end_idx + 1]),
        ))
    return headers


def _clean_doc(block: str) -> str:
    block = block.strip()
    if block.startswith("/--"):
        block = block[3:]
    if block.endswith("-/"):
        block = block[:-2]
    return " ".join(block.split())


def scan_project(root: Path, exclude_dirs: Iterable[str] = (".lake", "build", "scratch")) -> list[DeclHeader]:
    """Scan every .lean file under root, excluding build artifacts."""
    excluded = set(exclude_dirs)
    headers: list[DeclHeader] = []
    for path in sorted(root.rglob("*.lean")):
        if any(part in excluded for part in path.relative_to(root).parts):
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except OSError:
            continue
        headers.extend(scan_source(text, str(path.relative_to(root))))
    return headers
