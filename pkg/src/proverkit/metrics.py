"""Proof-artifact measurement: Lean source normalization and bench reports.

Line counting works on normalized source: all comments are removed
(line comments, nested block comments, doc comments) and blank or
whitespace-only lines are dropped before counting.  String, char and raw
string literals are honored so that comment markers inside them survive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class NormalizedSource:
    """Lean source with comments and blank lines removed."""

    original_path: str
    normalized: str
    line_count: int
    findings: list[str] = field(default_factory=list)


# Characters that may end an identifier; a quote directly after one of these
# is a prime suffix (h') or part of a name, not a literal opener.
_IDENT_TAIL = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_!?'")


def _scan_char_literal(text: str, i: int) -> int | None:
    """Return the index one past a char literal starting at ``text[i] == "'"``.

    Returns None when the quote does not open a char literal.
    """
    n = len(text)
    j = i + 1
    if j >= n or text[j] == "\n":
        return None
    if text[j] == "\\":
        j += 1
        while j < n and text[j] not in ("'", "\n"):
            j += 1
        if j < n and text[j] == "'":
            return j + 1
        return None
    if text[j] == "'":
        return None
    if j + 1 < n and text[j + 1] == "'":
        return j + 2
    return None


def _plain_string_end(text: str, i: int) -> int | None:
    """Index one past a ``"..."`` literal starting at i, or None."""
    j = i + 1
    n = len(text)
    while j < n:
        if text[j] == "\\":
            j += 2
            continue
        if text[j] == '"':
            return j + 1
        j += 1
    return None


def _raw_string_end(text: str, i: int) -> int | None:
    """Index one past a raw string ``r#*"..."#*`` starting at i, or None."""
    j = i + 1
    hashes = 0
    n = len(text)
    while j < n and text[j] == "#":
        hashes += 1
        j += 1
    if j >= n or text[j] != '"':
        return None
    closer = '"' + "#" * hashes
    end = text.find(closer, j + 1)
    if end == -1:
        return None
    return end + len(closer)


def strip_lean(source: str, path: str = "<string>") -> NormalizedSource:
    """Remove comments and blank lines from Lean source text.

    Handles ``--`` line comments, nested ``/- ... -/`` block comments
    (including ``/-- ... -/`` doc comments), string literals, char literals
    and raw strings (``r"..."``, ``r#"..."#``).  An unterminated block
    comment is stripped to end of file and reported as a finding.  Input
    does not have to be valid Lean.
    """
    out: list[str] = []
    findings: list[str] = []
    n = len(source)
    i = 0
    depth = 0  # block comment nesting
    prev = ""  # immediately preceding source character (token-boundary check)
    while i < n:
        c = source[i]
        if depth > 0:
            if source.startswith("/-", i):
                depth += 1
                i += 2
            elif source.startswith("-/", i):
                depth -= 1
                i += 2
            else:
                if c == "\n":
                    out.append("\n")
                i += 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if source.startswith("/-", i):
            depth += 1
            i += 2
            continue
        if c == '"':
            end = _plain_string_end(source, i)
            if end is None:
                out.append(source[i:])
                findings.append(f"{path}: unterminated string literal")
                i = n
                break
            out.append(source[i:end])
            prev = '"'
            i = end
            continue
        if c == "r" and prev not in _IDENT_TAIL:
            end = _raw_string_end(source, i)
            if end is not None:
                out.append(source[i:end])
                prev = '"'
                i = end
                continue
        if c == "'" and prev not in _IDENT_TAIL:
            end = _scan_char_literal(source, i)
            if end is not None:
                out.append(source[i:end])
                prev = "'"
                i = end
                continue
        out.append(c)
        prev = c
        i += 1
    if depth > 0:
        findings.append(f"{path}: unterminated block comment stripped to end of file")
    lines = [line.rstrip() for line in "".join(out).split("\n")]
    kept = [line for line in lines if line.strip()]
    normalized = "\n".join(kept)
    return NormalizedSource(path, normalized, len(kept), findings)


@dataclass
class BenchRecord:
    """One problem's outcome for a benchmark report."""

    problem_id: str
    solved: bool
    wall_minutes: float
    line_count: int | None = None
    budget_spent: float = 0.0
    mode: str = ""

    def __post_init__(self) -> None:
        if not self.solved:
            self.line_count = None


class ReportError(ValueError):
    pass


def bench_report(records: list[BenchRecord]) -> tuple[str, dict]:
    """Render a solved/minutes/line-count table plus a machine export.

    Records keep their input order (the declared problem-set order).
    Duplicate problem ids are rejected.
    """
    seen: set[str] = set()
    for rec in records:
        if rec.problem_id in seen:
            raise ReportError(f"duplicate problem id: {rec.problem_id}")
        seen.add(rec.problem_id)

    ids = [r.problem_id for r in records]
    solved_row = ["ok" if r.solved else "--" for r in records]
    minutes_row = [f"{r.wall_minutes:.1f}" for r in records]
    lines_row = [str(r.line_count) if r.line_count is not None else "--" for r in records]

    headers = ["problem"] + ids
    rows = [
        ["solved"] + solved_row,
        ["minutes"] + minutes_row,
        ["lines"] + lines_row,
    ]
    widths = [max(len(headers[c]), *(len(row[c]) for row in rows)) for c in range(len(headers))]
    fmt = "  ".join("{:>%d}" % w for w in widths)
    text_lines = [fmt.format(*headers)]
    text_lines += [fmt.format(*row) for row in rows]
    table = "\n".join(text_lines)

    export = {
        "problems": [
            {
                "problem_id": r.problem_id,
                "solved": r.solved,
                "wall_minutes": r.wall_minutes,
                "line_count": r.line_count,
                "budget_spent": r.budget_spent,
                "mode": r.mode,
            }
            for r in records
        ],
        "solved_count": sum(1 for r in records if r.solved),
        "total": len(records),
    }
    return table, export


def export_json(export: dict) -> str:
    return json.dumps(export, indent=2, sort_keys=False)
