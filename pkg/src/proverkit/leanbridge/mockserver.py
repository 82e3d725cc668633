"""Mock Lean language server speaking real LSP over stdio.

Run with ``python -m proverkit.leanbridge.mockserver``.  Elaboration is
delegated to the mini-Lean model, so goal queries, diagnostics and
document symbols behave like a (tiny, deterministic) Lean server:
Content-Length framing, publishDiagnostics + fileProgress notifications,
``$/lean/plainGoal`` requests, full-document sync.  A document containing
the ``loopForever`` marker never finishes elaborating, which lets
clients exercise their timeout handling without a hung server.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from .lsp import read_frame, write_frame
from .minilean import Elaboration, elaborate

# LSP SymbolKind values advertised for mini-Lean declaration kinds.
SYMBOL_KINDS = {
    "theorem": 12,  # Function
    "lemma": 12,
    "def": 14,  # Constant
    "abbrev": 14,
    "structure": 23,  # Struct
    "instance": 6,  # Method
}


def _utf16_col(line_text: str, char_col: int) -> int:
    return sum(2 if ord(c) > 0xFFFF else 1 for c in line_text[:char_col])


def _char_col(line_text: str, utf16_col: int) -> int:
    units = 0
    for idx, c in enumerate(line_text):
        if units >= utf16_col:
            return idx
        units += 2 if ord(c) > 0xFFFF else 1
    return len(line_text)


@dataclass
class _Doc:
    text: str
    version: int
    elab: Elaboration


class MockLeanServer:
    def __init__(self, stdin, stdout):
        self.stdin = stdin
        self.stdout = stdout
        self.docs: dict[str, _Doc] = {}
        self.running = True

    def serve(self) -> int:
        while self.running:
            message = read_frame(self.stdin)
            if message is None:
                return 0
            self.handle(message)
        return 0

    def _reply(self, req_id, result) -> None:
        write_frame(self.stdout, {"jsonrpc": "2.0", "id": req_id, "result": result})

    def _notify(self, method: str, params: dict) -> None:
        write_frame(self.stdout, {"jsonrpc": "2.0", "method": method, "params": params})

    def handle(self, message: dict) -> None:
        method = message.get("method")
        req_id = message.get("id")
        params = message.get("params") or {}
        if method == "initialize":
            self._reply(req_id, {
                "capabilities": {
                    "textDocumentSync": 1,  # full
                    "documentSymbolProvider": True,
                    "positionEncoding": "utf-16",
                },
                "serverInfo": {"name": "mock-lean-server", "version": "1.0"},
            })
        elif method == "initialized":
            pass
        elif method == "shutdown":
            self._reply(req_id, None)
        elif method == "exit":
            self.running = False
        elif method == "textDocument/didOpen":
            doc = params["textDocument"]
            self._open(doc["uri"], doc.get("text", ""), doc.get("version", 0))
        elif method == "textDocument/didChange":
            doc = params["textDocument"]
            changes = params.get("contentChanges", [])
            if changes:
                self._open(doc["uri"], changes[-1].get("text", ""), doc.get("version", 0))
        elif method == "textDocument/didClose":
            uri = params["textDocument"]["uri"]
            self.docs.pop(uri, None)
            self._notify("textDocument/publishDiagnostics", {"uri": uri, "diagnostics": []})
        elif method == "textDocument/documentSymbol":
            self._reply(req_id, self._symbols(params["textDocument"]["uri"]))
        elif method == "$/lean/plainGoal":
            self._reply(req_id, self._plain_goal(params))
        elif req_id is not None:
            write_frame(self.stdout, {
                "jsonrpc": "2.0", "id": req_id,
                "error": {"code": -32601, "message": f"unknown method {method}"},
            })

    def _open(self, uri: str, text: str, version: int) -> None:
        elab = elaborate(text)
        self.docs[uri] = _Doc(text=text, version=version, elab=elab)
        if elab.pending:
            # never-finishing elaboration: progress only, no diagnostics
            self._notify("$/lean/fileProgress", {
                "textDocument": {"uri": uri, "version": version},
                "processing": [{"range": _full_range(text), "kind": 1}],
            })
            return
        self._notify("$/lean/fileProgress", {
            "textDocument": {"uri": uri, "version": version},
            "processing": [],
        })
        lines = text.split("\n")
        self._notify("textDocument/publishDiagnostics", {
            "uri": uri,
            "version": version,
            "diagnostics": [
                {
                    "range": {
                        "start": {"line": d.line,
                                  "character": _utf16_col(_line(lines, d.line), d.start_col)},
                        "end": {"line": d.end_line,
                                "character": _utf16_col(_line(lines, d.end_line), d.end_col)},
                    },
                    "severity": d.severity,
                    "source": "mock-lean",
                    "message": d.message,
                }
                for d in elab.diagnostics
            ],
        })

    def _symbols(self, uri: str) -> list[dict]:
        doc = self.docs.get(uri)
        if doc is None:
            return []
        lines = doc.text.split("\n")
        out = []
        for sym in doc.elab.symbols:
            rng = {
                "start": {"line": sym.line,
                          "character": _utf16_col(_line(lines, sym.line), sym.start_col)},
                "end": {"line": sym.line,
                        "character": _utf16_col(_line(lines, sym.line), sym.end_col)},
            }
            out.append({
                "name": sym.name,
                "kind": SYMBOL_KINDS.get(sym.kind, 12),
                "range": rng,
                "selectionRange": rng,
            })
        return out

    def _plain_goal(self, params: dict):
        uri = params["textDocument"]["uri"]
        position = params["position"]
        doc = self.docs.get(uri)
        if doc is None:
            return None
        lines = doc.text.split("\n")
        line = position.get("line", 0)
        char = _char_col(_line(lines, line), position.get("character", 0))
        goals = doc.elab.goals_at(line, char)
        if goals is None:
            return None
        return {"goals": goals, "rendered": "\n\n".join(goals)}


def _line(lines: list[str], idx: int) -> str:
    return lines[idx] if 0 <= idx < len(lines) else ""


def _full_range(text: str) -> dict:
    lines = text.split("\n")
    return {
        "start": {"line": 0, "character": 0},
        "end": {"line": len(lines) - 1, "character": len(lines[-1])},
    }


def main() -> int:
    return MockLeanServer(sys.stdin.buffer, sys.stdout.buffer).serve()


if __name__ == "__main__":
    raise SystemExit(main())
