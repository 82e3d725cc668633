"""Blueprint proving-status resolution against a Lean project.

A node with a Lean name is proved when its declaration exists in the
project and neither it nor anything it transitively references inside
the project carries a sorry diagnostic; it is sorried when the taint
reaches it; it stays unstated when the declaration is missing.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path

from ..leanbridge.scanner import DeclHeader, scan_project
from .model import (
    STATUS_SORRIED,
    STATUS_STATED,
    STATUS_UNSTATED,
    STATUS_PROVED,
    BlueprintGraph,
    Finding,
)

log = logging.getLogger(__name__)

STATUS_UNKNOWN = "unknown"  # bridge failure marker, outside the lattice

_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*")


def status_report(
    graph: BlueprintGraph,
    project_root: Path,
    bridge,
) -> tuple[dict[str, str], list[Finding]]:
    """Resolve each node's status against the project on disk.

    ``bridge`` needs a ``diagnostics(path) -> list[Diagnostic]`` method;
    per-file bridge failures degrade affected nodes to 'unknown' rather
    than crashing the report.
    """
    decls = {d.name: d for d in scan_project(project_root)}
    tainted = _sorry_tainted(decls, project_root, bridge)

    statuses: dict[str, str] = {}
    findings: list[Finding] = []
    for node in graph.in_document_order():
        if not node.lean_name:
            statuses[node.id] = STATUS_UNSTATED
            continue
        decl = decls.get(node.lean_name)
        if decl is None:
            statuses[node.id] = STATUS_UNSTATED
            findings.append(Finding(
                "missing_decl",
                f"{node.id}: lean name {node.lean_name!r} not found in project",
                (node.id,),
            ))
            continue
        taint = tainted.get(node.lean_name)
        if taint is None:
            statuses[node.id] = STATUS_UNKNOWN
        elif taint:
            statuses[node.id] = STATUS_SORRIED
        elif not _has_body(decl):
            statuses[node.id] = STATUS_STATED
        else:
            statuses[node.id] = STATUS_PROVED
    return statuses, findings


def _has_body(decl: DeclHeader) -> bool:
    return ":=" in decl.body or re.search(r"\bby\b", decl.body) is not None


def _sorry_tainted(
    decls: dict[str, DeclHeader],
    project_root: Path,
    bridge,
) -> dict[str, bool | None]:
    """Per-declaration sorry taint; None marks bridge failure for its file.

    Direct taint comes from sorry diagnostics attributed to the
    declaration's line span; taint then propagates along intra-project
    references found in declaration bodies.
    """
    by_file: dict[str, list[DeclHeader]] = {}
    for decl in decls.values():
        by_file.setdefault(decl.path, []).append(decl)

    direct: dict[str, bool | None] = {}
    for path, file_decls in by_file.items():
        try:
            diags = bridge.diagnostics(path)
        except Exception as exc:
            log.warning("diagnostics failed for %s: %s", path, exc)
            for decl in file_decls:
                direct[decl.name] = None
            continue
        sorry_lines = [
            d.start_line for d in diags
            if "sorry" in d.message.lower() and d.severity in ("warning", "error")
        ]
        for decl in file_decls:
            direct[decl.name] = any(
                decl.line <= line <= decl.end_line for line in sorry_lines
            )

    # short-name index so unqualified references resolve inside the project
    by_short: dict[str, str] = {}
    for name in decls:
        by_short.setdefault(name.rsplit(".", 1)[-1], name)

    refs: dict[str, set[str]] = {}
    for name, decl in decls.items():
        found: set[str] = set()
        for word in _WORD_RE.findall(decl.body):
            if word == name:
                continue
            if word in decls:
                found.add(word)
            elif word in by_short and by_short[word] != name:
                found.add(by_short[word])
        refs[name] = found

    tainted: dict[str, bool | None] = dict(direct)
    changed = True
    while changed:
        changed = False
        for name, deps in refs.items():
            if tainted.get(name) is not True:
                if any(tainted.get(dep) is True for dep in deps):
                    if tainted[name] is not None:
                        tainted[name] = True
                        changed = True
    return tainted
