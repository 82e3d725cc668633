"""The Lean bridge: seven project-level tools over one LSP session.

File outline, goal query, diagnostics, snippet execution, multi-attempt,
local declaration search and remote search.  The bridge only observes
and runs snippets in scratch files; user files are never modified.  One
bridge owns one language-server session; callers serialize access.
"""

from __future__ import annotations

import re
import time
import uuid
from pathlib import Path

from .loogle import DEFAULT_ENDPOINT, Fetcher, _http_fetch, loogle_search
from .lsp import LspClient
from .scanner import DeclHeader, scan_project, scan_source
from .types import (
    AttemptResult,
    BridgeError,
    BridgeTimeout,
    Diagnostic,
    DeclMatch,
    FileLocation,
    GoalState,
)

SCRATCH_DIR = "scratch"
LOCAL_SEARCH_CAP = 20


def _utf16_col(line_text: str, char_col: int) -> int:
    return sum(2 if ord(c) > 0xFFFF else 1 for c in line_text[:char_col])


def _char_col(line_text: str, utf16_col: int) -> int:
    units = 0
    for idx, c in enumerate(line_text):
        if units >= utf16_col:
            return idx
        units += 2 if ord(c) > 0xFFFF else 1
    return len(line_text)


class LeanBridge:
    def __init__(
        self,
        project_root: Path,
        server_command: list[str] | None = None,
        settle_quiet: float = 0.5,
        settle_max: float = 120.0,
        run_code_timeout: float = 60.0,
        attempt_timeout: float = 30.0,
        network_enabled: bool = False,
        loogle_endpoint: str = DEFAULT_ENDPOINT,
        loogle_fetcher: Fetcher = _http_fetch,
        stdlib_roots: list[Path] | None = None,
    ):
        self.project_root = Path(project_root).resolve()
        if not self.project_root.is_dir():
            raise BridgeError(f"project root does not exist: {self.project_root}")
        self.server_command = server_command or ["lake", "serve", "--"]
        self.settle_quiet = settle_quiet
        self.settle_max = settle_max
        self.run_code_timeout = run_code_timeout
        self.attempt_timeout = attempt_timeout
        self.network_enabled = network_enabled
        self.loogle_endpoint = loogle_endpoint
        self.loogle_fetcher = loogle_fetcher
        self.stdlib_roots = [Path(p) for p in (stdlib_roots or [])]
        self._client: LspClient | None = None
        self._open_docs: dict[str, int] = {}  # uri -> version
        self._doc_texts: dict[str, str] = {}  # uri -> last opened text
        self._decl_index: list[DeclHeader] | None = None

    # -- session -----------------------------------------------------------

    def _ensure_client(self) -> LspClient:
        if self._client is None or not self._client.alive:
            client = LspClient(self.server_command, cwd=str(self.project_root))
            client.start()
            self._client = client
            self._open_docs = {}
        return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.stop()
            self._client = None

    def __enter__(self) -> "LeanBridge":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- paths -------------------------------------------------------------

    def _resolve(self, path: str) -> Path:
        resolved = (self.project_root / path).resolve()
        if not resolved.is_relative_to(self.project_root):
            raise BridgeError(f"path escapes the project root: {path}")
        return resolved

    def _uri(self, resolved: Path) -> str:
        return resolved.as_uri()

    def _open_file(self, path: str) -> tuple[str, str]:
        """didOpen (or refresh) a project file; returns (uri, text)."""
        resolved = self._resolve(path)
        if not resolved.is_file():
            raise BridgeError(f"no such file in project: {path}")
        text = resolved.read_text(encoding="utf-8")
        uri = self._uri(resolved)
        self._open_text(uri, text)
        return uri, text

    def _open_text(self, uri: str, text: str) -> None:
        client = self._ensure_client()
        self._doc_texts[uri] = text
        if uri in self._open_docs:
            version = self._open_docs[uri] + 1
            self._open_docs[uri] = version
            client.reset_doc(uri)
            client.notify("textDocument/didChange", {
                "textDocument": {"uri": uri, "version": version},
                "contentChanges": [{"text": text}],
            })
        else:
            self._open_docs[uri] = 1
            client.reset_doc(uri)
            client.notify("textDocument/didOpen", {
                "textDocument": {
                    "uri": uri, "languageId": "lean4", "version": 1, "text": text,
                },
            })

    def _close_doc(self, uri: str) -> None:
        if self._client is not None and uri in self._open_docs:
            self._client.notify("textDocument/didClose", {"textDocument": {"uri": uri}})
            del self._open_docs[uri]

    # -- diagnostics settle policy ------------------------------------------

    def _wait_settled(self, uri: str, max_wait: float | None = None) -> list[dict]:
        """Wait for elaboration to settle, then return raw diagnostics.

        Settled means the server reported processing done and published at
        least once, or the publish stream has been quiet for the configured
        period.  Exceeding the cap raises a timeout carrying whatever
        diagnostics arrived so far.
        """
        client = self._ensure_client()
        limit = max_wait if max_wait is not None else self.settle_max
        deadline = time.monotonic() + limit
        while True:
            state = client.doc_state(uri)
            if state.processing_done and state.publish_count > 0:
                return list(state.diagnostics)
            if (state.publish_count > 0
                    and time.monotonic() - state.last_publish >= self.settle_quiet):
                return list(state.diagnostics)
            if time.monotonic() >= deadline:
                raise BridgeTimeout(
                    f"diagnostics did not settle within {limit}s",
                    partial=self._convert_diagnostics(uri, state.diagnostics),
                )
            if not client.alive:
                raise BridgeError("language server exited during elaboration")
            time.sleep(0.002)

    def _convert_diagnostics(self, uri: str, raw: list[dict]) -> list[Diagnostic]:
        path = self._path_of(uri)
        lines = self._doc_texts.get(uri, "").split("\n")
        out = []
        severity_map = {1: "error", 2: "warning", 3: "info", 4: "info"}

        def char_pos(pos: dict) -> tuple[int, int]:
            # wire positions are 0-based with UTF-16 columns
            line_idx = pos.get("line", 0)
            line_text = lines[line_idx] if line_idx < len(lines) else ""
            return line_idx + 1, _char_col(line_text, pos.get("character", 0)) + 1

        for diag in raw:
            rng = diag.get("range", {})
            start_line, start_col = char_pos(rng.get("start", {}))
            end_line, end_col = char_pos(rng.get("end", {}))
            out.append(Diagnostic(
                path=path,
                start_line=start_line,
                start_column=start_col,
                end_line=end_line,
                end_column=end_col,
                severity=severity_map.get(diag.get("severity", 1), "info"),
                message=diag.get("message", ""),
            ))
        return out

    def _path_of(self, uri: str) -> str:
        from urllib.parse import unquote, urlparse

        parsed = urlparse(uri)
        full = Path(unquote(parsed.path))
        try:
            return str(full.relative_to(self.project_root))
        except ValueError:
            return str(full)

    # -- tools ---------------------------------------------------------------

    def file_outline(self, path: str) -> list[tuple[str, str, FileLocation]]:
        """Declaration-level symbols in document order.

        Positions come from the server; declaration kinds are recovered from
        the header scanner since LSP symbol kinds cannot distinguish, say,
        theorems from lemmas.
        """
        uri, text = self._open_file(path)
        client = self._ensure_client()
        symbols = client.request("textDocument/documentSymbol",
                                 {"textDocument": {"uri": uri}}) or []
        kinds_by_name = {d.name.rsplit(".", 1)[-1]: d.kind for d in scan_source(text, path)}
        lines = text.split("\n")
        out = []
        for sym in symbols:
            rng = sym.get("selectionRange") or sym.get("range") or {}
            start = rng.get("start", {})
            line_idx = start.get("line", 0)
            line_text = lines[line_idx] if line_idx < len(lines) else ""
            col = _char_col(line_text, start.get("character", 0))
            name = sym.get("name", "")
            out.append((
                kinds_by_name.get(name.rsplit(".", 1)[-1], "def"),
                name,
                FileLocation(path=path, line=line_idx + 1, column=col + 1),
            ))
        out.sort(key=lambda item: (item[2].line, item[2].column))
        return out

    def goal_at(self, loc: FileLocation) -> GoalState:
        """Proof goals visible at a position; empty outside proofs."""
        uri, text = self._open_file(loc.path)
        lines = text.split("\n")
        line_text = lines[loc.line - 1] if loc.line - 1 < len(lines) else ""
        position = {
            "line": loc.line - 1,
            "character": _utf16_col(line_text, loc.column - 1),
        }
        client = self._ensure_client()
        result = client.request("$/lean/plainGoal", {
            "textDocument": {"uri": uri},
            "position": position,
        })
        if not result:
            return GoalState.from_goals([])
        return GoalState.from_goals(list(result.get("goals", [])))

    def diagnostics(self, path: str, max_wait: float | None = None) -> list[Diagnostic]:
        uri, _ = self._open_file(path)
        raw = self._wait_settled(uri, max_wait)
        return self._convert_diagnostics(uri, raw)

    def run_code(self, snippet: str, timeout: float | None = None) -> AttemptResult:
        """Elaborate a standalone snippet in an ephemeral scratch file."""
        limit = timeout if timeout is not None else self.run_code_timeout
        scratch_dir = self.project_root / SCRATCH_DIR
        try:
            scratch_dir.mkdir(exist_ok=True)
            scratch = scratch_dir / f"snippet_{uuid.uuid4().hex[:12]}.lean"
            scratch.write_text(snippet, encoding="utf-8")
        except OSError as exc:
            raise BridgeError(f"cannot create scratch file: {exc}") from exc
        uri = self._uri(scratch)
        try:
            self._open_text(uri, snippet)
            try:
                raw = self._wait_settled(uri, max_wait=limit)
            except BridgeTimeout as exc:
                return AttemptResult(
                    snippet=snippet, success=False,
                    diagnostics=exc.partial, timed_out=True,
                )
            diags = self._convert_diagnostics(uri, raw)
            success = not any(d.is_error for d in diags)
            return AttemptResult(
                snippet=snippet,
                success=success,
                diagnostics=diags,
                resulting_goal=GoalState.from_goals([]) if success else None,
            )
        finally:
            self._close_doc(uri)
            scratch.unlink(missing_ok=True)
            try:
                scratch_dir.rmdir()  # only removes when empty
            except OSError:
                pass

    def multi_attempt(self, loc: FileLocation, snippets: list[str]) -> list[AttemptResult]:
        """Try each tactic snippet at one goal site, each in isolation.

        The snippet replaces the ``sorry`` token at the location (or is
        inserted at the position when no sorry is there).  Each attempt
        elaborates an ephemeral scratch file holding just the enclosing
        declaration plus the file's imports, so attempts never observe
        each other's effects nor unrelated problems elsewhere in the file.
        """
        if not snippets:
            raise ValueError("snippets must be non-empty")
        goal = self.goal_at(loc)
        if goal.is_empty:
            raise BridgeError(f"no open goal at {loc.path}:{loc.line}:{loc.column}")
        resolved = self._resolve(loc.path)
        text = resolved.read_text(encoding="utf-8")
        block, block_loc = _enclosing_decl_block(text, loc)
        results = []
        for snippet in snippets:
            spliced = _splice(block, block_loc, snippet)
            result = self.run_code(spliced, timeout=self.attempt_timeout)
            results.append(AttemptResult(
                snippet=snippet,
                success=result.success,
                diagnostics=result.diagnostics,
                resulting_goal=result.resulting_goal,
                timed_out=result.timed_out,
            ))
        return results

    def local_search(self, query: str) -> list[DeclMatch]:
        """Substring/prefix/exact matching over scanned declaration headers."""
        if not query.strip():
            raise ValueError("query must be non-empty")
        if self._decl_index is None:
            headers = scan_project(self.project_root)
            for root in self.stdlib_roots:
                if root.is_dir():
                    headers.extend(scan_project(root))
            self._decl_index = headers
        query_lower = query.lower()

        def rank(header: DeclHeader) -> int | None:
            name = header.name
            short = name.rsplit(".", 1)[-1]
            if query in (name, short):
                return 0
            if name.startswith(query) or short.startswith(query):
                return 1
            if query_lower in name.lower():
                return 2
            return None

        scored = []
        for header in self._decl_index:
            r = rank(header)
            if r is not None:
                scored.append((r, header.name, header))
        scored.sort(key=lambda item: (item[0], item[1]))
        out = []
        for _, _, header in scored[:LOCAL_SEARCH_CAP]:
            in_project = (self.project_root / header.path).is_file()
            out.append(DeclMatch(
                name=header.name,
                signature=header.signature,
                source="local_project" if in_project else "stdlib",
                location=FileLocation(path=header.path, line=header.line, column=1),
            ))
        return out

    def loogle_search(self, query: str) -> list[DeclMatch]:
        return loogle_search(
            query,
            network_enabled=self.network_enabled,
            endpoint=self.loogle_endpoint,
            fetcher=self.loogle_fetcher,
        )


def _splice(text: str, loc: FileLocation, snippet: str) -> str:
    lines = text.split("\n")
    idx = loc.line - 1
    if idx >= len(lines):
        raise BridgeError(f"location line {loc.line} beyond end of file")
    line = lines[idx]
    col = loc.column - 1
    if line[col:col + len("sorry")] == "sorry":
        lines[idx] = line[:col] + snippet + line[col + len("sorry"):]
    else:
        lines[idx] = line[:col] + snippet + line[col:]
    return "\n".join(lines)


_BLOCK_START_RE = re.compile(
    r"^(?:@\[[^\]]*\]\s*)?(?:(?:private|protected|noncomputable)\s+)*"
    r"(?:theorem|lemma|example|def|abbrev)\b"
)


def _enclosing_decl_block(text: str, loc: FileLocation) -> tuple[str, FileLocation]:
    """Imports plus the declaration containing loc, with loc rebased onto it."""
    lines = text.split("\n")
    starts = [i for i, line in enumerate(lines) if _BLOCK_START_RE.match(line)]
    target = loc.line - 1
    begin = max((i for i in starts if i <= target), default=None)
    if begin is None:
        return text, loc
    end = min((i for i in starts if i > target), default=len(lines))
    imports = [line for line in lines[:begin] if line.startswith("import ")]
    block_lines = imports + lines[begin:end]
    rebased = FileLocation(
        path=loc.path,
        line=len(imports) + (target - begin) + 1,
        column=loc.column,
    )
    return "\n".join(block_lines), rebased
