"""A tiny deterministic model of Lean elaboration for the mock server.

Understands just enough of Lean's surface syntax to elaborate fixture
files and snippets: declarations of the form

    theorem name (binders) : PROP := by tac1; tac2
    example : PROP := rfl
    def name : TYPE := value

where PROP is a comparison over ground integer arithmetic (+ - * ^ and
parentheses) or True/False.  Tactic semantics:

    rfl                    closes a true ground equation, else errors
    simp, norm_num,
    decide, omega, ring    close any true ground comparison, else error
    sorry                  closes anything; warns "declaration uses 'sorry'"
    skip                   no effect
    loopForever            marks the file as never finishing elaboration

Non-ground propositions (free variables) can only be closed by sorry.
Everything is positioned: diagnostics carry exact token ranges so
clients can be tested against known lines, and goal visibility regions
drive position-based goal queries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

CLOSERS = ("rfl", "simp", "norm_num", "decide", "omega", "ring", "nlinarith")
NEUTRAL = ("skip",)

_DECL_RE = re.compile(
    r"^(theorem|lemma|example|def|abbrev)\b(?:\s+([A-Za-z_][A-Za-z0-9_'.]*))?",
    re.MULTILINE,
)
_STRUCTURAL_RE = re.compile(r"^(namespace|end|section|import|open|structure|set_option)\b",
                            re.MULTILINE)
_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_'.]*|\d+|:=|[^\sA-Za-z0-9_]")


@dataclass
class MockDiagnostic:
    line: int  # 0-based
    start_col: int  # 0-based character offset
    end_line: int
    end_col: int
    severity: int  # 1 error, 2 warning, 3 info
    message: str


@dataclass
class GoalRegion:
    start: tuple[int, int]  # 0-based (line, char), inclusive
    end: tuple[int, int]  # exclusive
    goal: str


@dataclass
class SymbolEntry:
    kind: str
    name: str
    line: int  # 0-based
    start_col: int
    end_col: int


@dataclass
class Elaboration:
    diagnostics: list[MockDiagnostic] = field(default_factory=list)
    goal_regions: list[GoalRegion] = field(default_factory=list)
    symbols: list[SymbolEntry] = field(default_factory=list)
    pending: bool = False  # file never finishes elaborating

    def goals_at(self, line: int, char: int) -> list[str] | None:
        """Goals visible at a 0-based position; None when outside any proof."""
        for region in self.goal_regions:
            if region.start <= (line, char) < region.end:
                return [region.goal] if region.goal else []
        return None


def blank_comments(text: str) -> str:
    """Replace comment content with spaces, preserving offsets and newlines."""
    out = list(text)
    i = 0
    n = len(text)
    depth = 0
    while i < n:
        if depth > 0:
            if text.startswith("/-", i):
                depth += 1
                out[i] = out[i + 1] = " "
                i += 2
            elif text.startswith("-/", i):
                depth -= 1
                out[i] = out[i + 1] = " "
                i += 2
            else:
                if text[i] != "\n":
                    out[i] = " "
                i += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                out[i] = " "
                i += 1
            continue
        if text.startswith("/-", i):
            depth += 1
            out[i] = out[i + 1] = " "
            i += 2
            continue
        if text[i] == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            i = min(j + 1, n)
            continue
        i += 1
    return "".join(out)


class _PropParser:
    """Recursive-descent evaluator for ground comparison propositions."""

    def __init__(self, text: str):
        self.tokens = _TOKEN_RE.findall(text)
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str | None:
        tok = self.peek()
        self.pos += 1
        return tok

    def parse_prop(self) -> bool | None:
        """True/False when ground and decidable here, None otherwise."""
        if self.tokens == ["True"]:
            return True
        if self.tokens == ["False"]:
            return False
        left = self.parse_expr()
        op = self.take()
        comparisons = {"=", "≤", "<", "≥", ">", "≠", "<=", ">=", "!=", "=="}
        if op == "<" and self.peek() == "=":  # tokenized separately
            self.take()
            op = "<="
        elif op == ">" and self.peek() == "=":
            self.take()
            op = ">="
        elif op == "!" and self.peek() == "=":
            self.take()
            op = "!="
        if op not in comparisons:
            return None
        right = self.parse_expr()
        if left is None or right is None or self.peek() is not None:
            return None
        return {
            "=": left == right, "==": left == right,
            "≠": left != right, "!=": left != right,
            "≤": left <= right, "<=": left <= right,
            "≥": left >= right, ">=": left >= right,
            "<": left < right, ">": left > right,
        }[op]

    def parse_expr(self) -> int | None:
        value = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.parse_term()
            if value is None or rhs is None:
                return None
            value = value + rhs if op == "+" else max(value - rhs, 0)  # Nat subtraction
        return value

    def parse_term(self) -> int | None:
        value = self.parse_power()
        while self.peek() == "*":
            self.take()
            rhs = self.parse_power()
            if value is None or rhs is None:
                return None
            value = value * rhs
        return value

    def parse_power(self) -> int | None:
        value = self.parse_atom()
        if self.peek() == "^":
            self.take()
            exponent = self.parse_power()
            if value is None or exponent is None or exponent < 0:
                return None
            return value ** exponent
        return value

    def parse_atom(self) -> int | None:
        tok = self.take()
        if tok == "(":
            value = self.parse_expr()
            if self.take() != ")":
                return None
            return value
        if tok is not None and tok.isdigit():
            return int(tok)
        return None  # identifiers and anything else: not ground


def evaluate_prop(text: str) -> bool | None:
    try:
        return _PropParser(text).parse_prop()
    except Exception:
        return None


@dataclass
class _Tactic:
    name: str
    line: int
    start_col: int
    end_col: int


def _utf16_len(s: str) -> int:
    return sum(2 if ord(c) > 0xFFFF else 1 for c in s)


def _to_utf16_col(line_text: str, char_col: int) -> int:
    return _utf16_len(line_text[:char_col])


def elaborate(text: str) -> Elaboration:
    """Elaborate a mini-Lean source buffer into diagnostics/goals/symbols."""
    result = Elaboration()
    blanked = blank_comments(text)
    decl_starts = list(_DECL_RE.finditer(blanked))
    boundaries = sorted(
        [m.start() for m in decl_starts]
        + [m.start() for m in _STRUCTURAL_RE.finditer(blanked)]
        + [len(blanked)]
    )
    for match in decl_starts:
        start_off = match.start()
        end_off = next(b for b in boundaries if b > start_off)
        _elaborate_decl(result, blanked, match, start_off, end_off)
    return result


def _offset_to_pos(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset)
    bol = text.rfind("\n", 0, offset) + 1
    return line, offset - bol


def _elaborate_decl(result, blanked, match, start_off, end_off):
    kind = match.group(1)
    name = match.group(2)
    decl_text = blanked[start_off:end_off]
    decl_line, decl_col = _offset_to_pos(blanked, start_off)

    if name:
        name_off = match.start(2)
        name_line, name_col = _offset_to_pos(blanked, name_off)
        result.symbols.append(SymbolEntry(
            kind=kind, name=name, line=name_line,
            start_col=name_col, end_col=name_col + len(name),
        ))
        warn_line, warn_scol, warn_ecol = name_line, name_col, name_col + len(name)
    else:
        warn_line, warn_scol, warn_ecol = decl_line, decl_col, decl_col + len(kind)

    if "loopForever" in decl_text:
        result.pending = True
        return

    if kind in ("def", "abbrev"):
        return  # definitions always elaborate in the mock

    # split the header at the first depth-0 ':' that is not part of ':='
    assign_off = _find_assign(decl_text)
    colon_off = _find_prop_colon(decl_text)
    if colon_off is None:
        result.diagnostics.append(MockDiagnostic(
            decl_line, decl_col, decl_line, decl_col + len(kind),
            1, "declaration header has no type ascription",
        ))
        return
    if assign_off is None:
        result.diagnostics.append(MockDiagnostic(
            decl_line, decl_col, decl_line, decl_col + len(kind),
            1, "unexpected end of declaration, expected ':='",
        ))
        return

    prop = decl_text[colon_off + 1:assign_off].strip()
    prop_value = evaluate_prop(prop)
    goal_text = f"⊢ {' '.join(prop.split())}" if prop else "⊢ ?"

    proof_text = decl_text[assign_off + 2:]
    proof_base = start_off + assign_off + 2

    by_match = re.search(r"\bby\b", proof_text)
    if by_match:
        tactics = _collect_tactics(blanked, proof_base + by_match.end(),
                                   start_off + len(decl_text))
        _run_tactics(result, tactics, prop_value, goal_text,
                     proof_base + by_match.start(),
                     blanked, warn_line, warn_scol, warn_ecol)
    else:
        _run_term_proof(result, proof_text, proof_base, prop_value, goal_text,
                        blanked, warn_line, warn_scol, warn_ecol)


def _find_assign(decl_text: str) -> int | None:
    depth = 0
    for i, c in enumerate(decl_text):
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        elif c == ":" and depth == 0 and decl_text[i:i + 2] == ":=":
            return i
    return None


def _find_prop_colon(decl_text: str) -> int | None:
    depth = 0
    for i, c in enumerate(decl_text):
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        elif c == ":" and depth == 0 and decl_text[i:i + 2] != ":=":
            return i
    return None


def _collect_tactics(blanked: str, start: int, end: int) -> list[_Tactic]:
    tactics = []
    for m in re.finditer(r"[A-Za-z_][A-Za-z0-9_']*", blanked[start:end]):
        line, col = _offset_to_pos(blanked, start + m.start())
        tactics.append(_Tactic(m.group(0), line, col, col + len(m.group(0))))
    return tactics


def _run_tactics(result, tactics, prop_value, goal_text, by_off, blanked,
                 warn_line, warn_scol, warn_ecol):
    by_line, by_col = _offset_to_pos(blanked, by_off)
    closed_at: tuple[int, int] | None = None
    region_start = (by_line, by_col)

    for tac in tactics:
        if closed_at is not None:
            result.diagnostics.append(MockDiagnostic(
                tac.line, tac.start_col, tac.line, tac.end_col,
                1, "no goals to prove",
            ))
            continue
        if tac.name == "sorry":
            result.diagnostics.append(MockDiagnostic(
                warn_line, warn_scol, warn_line, warn_ecol,
                2, "declaration uses 'sorry'",
            ))
            closed_at = (tac.line, tac.end_col + 1)
            continue
        if tac.name in NEUTRAL:
            continue
        if tac.name in CLOSERS:
            if prop_value is True:
                closed_at = (tac.line, tac.start_col)
            else:
                reason = ("the goal is false" if prop_value is False
                          else "the goal is not ground")
                result.diagnostics.append(MockDiagnostic(
                    tac.line, tac.start_col, tac.line, tac.end_col,
                    1, f"tactic '{tac.name}' failed, {reason}\n{goal_text}",
                ))
                closed_at = (tac.line, tac.end_col)  # abort the tactic block
            continue
        result.diagnostics.append(MockDiagnostic(
            tac.line, tac.start_col, tac.line, tac.end_col,
            1, f"unknown tactic '{tac.name}'",
        ))
        closed_at = (tac.line, tac.end_col)

    if closed_at is None:
        result.diagnostics.append(MockDiagnostic(
            by_line, by_col, by_line, by_col + 2,
            1, f"unsolved goals\n{goal_text}",
        ))
        last = tactics[-1] if tactics else None
        region_end = (last.line, last.end_col + 1) if last else (by_line, by_col + 3)
    else:
        region_end = closed_at
    if region_end > region_start:
        result.goal_regions.append(GoalRegion(region_start, region_end, goal_text))


def _run_term_proof(result, proof_text, proof_base, prop_value, goal_text,
                    blanked, warn_line, warn_scol, warn_ecol):
    m = re.search(r"\S+", proof_text)
    if not m:
        line, col = _offset_to_pos(blanked, proof_base)
        result.diagnostics.append(MockDiagnostic(
            line, col, line, col + 1, 1, "declaration body is missing",
        ))
        return
    term = m.group(0)
    line, col = _offset_to_pos(blanked, proof_base + m.start())
    if term == "sorry":
        result.diagnostics.append(MockDiagnostic(
            warn_line, warn_scol, warn_line, warn_ecol,
            2, "declaration uses 'sorry'",
        ))
        result.goal_regions.append(GoalRegion(
            (line, col), (line, col + len(term) + 1), goal_text,
        ))
        return
    if term == "rfl":
        if prop_value is not True:
            reason = ("the goal is false" if prop_value is False
                      else "the goal is not ground")
            result.diagnostics.append(MockDiagnostic(
                line, col, line, col + len(term),
                1, f"type mismatch, 'rfl' does not prove the goal, {reason}\n{goal_text}",
            ))
        return
    result.diagnostics.append(MockDiagnostic(
        line, col, line, col + len(term),
        1, f"unknown identifier '{term}'",
    ))
