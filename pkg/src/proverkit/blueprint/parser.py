"""Parser and serializer for the blueprint document format.

The format is a small LaTeX-like environment subset, one block per
definition/lemma/theorem:

    \\begin{lemma}
    \\label{l:step}
    \\lean{Project.step_bound}
    \\uses{d:measure, l:aux}
    For all n, the step measure is bounded by ...
    \\end{lemma}

``\\label`` is required and unique.  ``\\lean`` ties the node to a Lean
declaration, ``\\leanok`` marks it proved, ``\\uses`` lists dependencies.
Everything else inside the block is the informal statement.  Full LaTeX is
deliberately not parsed.  The root is the last theorem in the document.
"""

from __future__ import annotations

import re

from .model import (
    STATUS_PROVED,
    STATUS_STATED,
    STATUS_UNSTATED,
    BlueprintGraph,
    BlueprintNode,
    NODE_KINDS,
)

_BEGIN = re.compile(r"\\begin\{(\w+)\}")
_END = re.compile(r"\\end\{(\w+)\}")
_COMMAND = re.compile(r"\\(label|lean|uses)\{([^{}]*)\}")
_LEANOK = re.compile(r"\\leanok\b")
_BAD_COMMAND = re.compile(r"\\(label|lean|uses)\{[^}]*$")


class BlueprintParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def parse_blueprint(text: str) -> BlueprintGraph:
    """Parse a blueprint document; the last theorem becomes the root."""
    nodes: dict[str, BlueprintNode] = {}
    label_lines: dict[str, int] = {}
    order = 0
    root: str | None = None

    current_kind: str | None = None
    current_start = 0
    label: str | None = None
    lean_name: str | None = None
    leanok = False
    uses: list[str] = []
    statement_lines: list[str] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        begin = _BEGIN.match(stripped)
        if begin:
            kind = begin.group(1)
            if kind not in NODE_KINDS:
                continue  # foreign environments (e.g. proof) are prose
            if current_kind is not None:
                raise BlueprintParseError(
                    f"\\begin{{{kind}}} inside unterminated {current_kind} block", lineno
                )
            current_kind = kind
            current_start = lineno
            label = None
            lean_name = None
            leanok = False
            uses = []
            statement_lines = []
            continue
        end = _END.match(stripped)
        if end and end.group(1) in NODE_KINDS:
            if current_kind is None or end.group(1) != current_kind:
                raise BlueprintParseError(f"unmatched \\end{{{end.group(1)}}}", lineno)
            if label is None:
                raise BlueprintParseError(f"{current_kind} block has no \\label", current_start)
            status = STATUS_UNSTATED
            if lean_name:
                status = STATUS_PROVED if leanok else STATUS_STATED
            nodes[label] = BlueprintNode(
                id=label,
                kind=current_kind,
                statement=" ".join(s for s in statement_lines if s),
                lean_name=lean_name,
                uses=tuple(uses),
                status=status,
                doc_order=order,
            )
            if current_kind == "theorem":
                root = label
            order += 1
            current_kind = None
            continue
        if current_kind is None:
            continue
        if _BAD_COMMAND.search(stripped):
            raise BlueprintParseError("unterminated command argument", lineno)
        consumed = False
        for match in _COMMAND.finditer(stripped):
            consumed = True
            command, arg = match.group(1), match.group(2).strip()
            if command == "label":
                if arg in label_lines:
                    raise BlueprintParseError(
                        f"duplicate label {arg!r} (first defined at line {label_lines[arg]})",
                        lineno,
                    )
                label_lines[arg] = lineno
                label = arg
            elif command == "lean":
                lean_name = arg or None
            elif command == "uses":
                parts = [p.strip() for p in arg.split(",")]
                if arg and any(not p for p in parts):
                    raise BlueprintParseError(f"malformed \\uses list: {arg!r}", lineno)
                uses.extend(p for p in parts if p)
        if _LEANOK.search(stripped):
            leanok = True
            consumed = True
        if not consumed and stripped:
            statement_lines.append(stripped)

    if current_kind is not None:
        raise BlueprintParseError(f"unterminated {current_kind} block", current_start)
    if root is None:
        raise BlueprintParseError("no root theorem")
    return BlueprintGraph(nodes=nodes, root=root)


def serialize_blueprint(graph: BlueprintGraph) -> str:
    """Render a graph back to the document format.

    Structure (ids, kinds, statements, lean names, uses edges) round-trips
    through parse_blueprint; a 'sorried' status serializes as stated since the
    format only distinguishes unstated/stated/proved.
    """
    ordered = [n for n in graph.in_document_order() if n.id != graph.root]
    ordered.append(graph.node(graph.root))
    blocks: list[str] = []
    for node in ordered:
        lines = [f"\\begin{{{node.kind}}}", f"\\label{{{node.id}}}"]
        if node.lean_name:
            lines.append(f"\\lean{{{node.lean_name}}}")
        if node.status == STATUS_PROVED:
            lines.append("\\leanok")
        if node.uses:
            lines.append(f"\\uses{{{', '.join(node.uses)}}}")
        if node.statement:
            lines.append(node.statement)
        lines.append(f"\\end{{{node.kind}}}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
