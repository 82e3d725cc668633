"""Minimal LSP client over a child process stdio pipe.

Content-Length framed JSON-RPC 2.0.  A reader thread routes responses to
waiting callers and folds server notifications (diagnostics, progress)
into per-document state the bridge polls.  Server-to-client requests are
acknowledged with a null result so sessions never deadlock on them.
"""

from __future__ import annotations

import itertools
import json
import logging
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Any, BinaryIO

from .types import BridgeError, BridgeTimeout

log = logging.getLogger(__name__)


def write_frame(stream: BinaryIO, message: dict) -> None:
    body = json.dumps(message, ensure_ascii=False).encode("utf-8")
    stream.write(f"Content-Length: {len(body)}\r\n\r\n".encode("ascii") + body)
    stream.flush()


def read_frame(stream: BinaryIO) -> dict | None:
    """Read one framed message; None on clean EOF."""
    content_length: int | None = None
    while True:
        line = stream.readline()
        if not line:
            return None
        if line in (b"\r\n", b"\n"):
            break
        try:
            key, value = line.decode("ascii", errors="replace").split(":", 1)
        except ValueError:
            continue
        if key.strip().lower() == "content-length":
            content_length = int(value.strip())
    if content_length is None:
        raise BridgeError("frame missing Content-Length header")
    body = stream.read(content_length)
    if body is None or len(body) != content_length:
        return None
    return json.loads(body.decode("utf-8"))


@dataclass
class DocumentState:
    version: int = 0
    diagnostics: list[dict] = field(default_factory=list)
    diagnostics_version: int | None = None
    publish_count: int = 0
    last_publish: float = 0.0
    processing_done: bool = False


class LspClient:
    """Owns one language-server child process."""

    def __init__(self, command: list[str], cwd: str, request_timeout: float = 30.0):
        self.command = command
        self.cwd = cwd
        self.request_timeout = request_timeout
        self._proc: subprocess.Popen | None = None
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._responses: dict[int, dict] = {}
        self._response_ready = threading.Condition(self._lock)
        self._docs: dict[str, DocumentState] = {}
        self._reader: threading.Thread | None = None
        self._closed = False

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> dict:
        try:
            self._proc = subprocess.Popen(
                self.command,
                cwd=self.cwd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise BridgeError(f"cannot start language server {self.command!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        result = self.request("initialize", {
            "processId": None,
            "rootUri": None,
            "capabilities": {
                "general": {"positionEncodings": ["utf-16"]},
                "textDocument": {"publishDiagnostics": {}},
            },
        })
        encoding = (result.get("capabilities") or {}).get("positionEncoding", "utf-16")
        if encoding != "utf-16":
            raise BridgeError(f"unsupported position encoding: {encoding}")
        self.notify("initialized", {})
        return result

    def stop(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.poll() is None:
                try:
                    self.request("shutdown", None, timeout=2.0)
                except BridgeError:
                    pass
                self._closed = True
                try:
                    self.notify("exit", None)
                except BridgeError:
                    pass
                proc.wait(timeout=5.0)
        except Exception:
            proc.kill()
        finally:
            self._closed = True
            self._proc = None

    @property
    def alive(self) -> bool:
        return self._proc is not None and self._proc.poll() is None

    # -- wire --------------------------------------------------------------

    def request(self, method: str, params: Any, timeout: float | None = None) -> Any:
        if not self.alive:
            raise BridgeError("language server is not running")
        req_id = next(self._ids)
        message = {"jsonrpc": "2.0", "id": req_id, "method": method, "params": params}
        with self._lock:
            write_frame(self._proc.stdin, message)
        deadline_timeout = timeout if timeout is not None else self.request_timeout
        with self._response_ready:
            if not self._response_ready.wait_for(
                lambda: req_id in self._responses or self._closed,
                timeout=deadline_timeout,
            ):
                raise BridgeTimeout(f"no response to {method} within {deadline_timeout}s")
            if req_id not in self._responses:
                raise BridgeError("language server session closed")
            response = self._responses.pop(req_id)
        if "error" in response:
            err = response["error"]
            raise BridgeError(f"{method} failed: {err.get('code')} {err.get('message')}")
        return response.get("result")

    def notify(self, method: str, params: Any) -> None:
        if not self.alive:
            raise BridgeError("language server is not running")
        with self._lock:
            write_frame(self._proc.stdin, {"jsonrpc": "2.0", "method": method, "params": params})

    def _read_loop(self) -> None:
        import time as _time

        stdout = self._proc.stdout
        try:
            while True:
                message = read_frame(stdout)
                if message is None:
                    break
                if "id" in message and "method" not in message:
                    with self._response_ready:
                        self._responses[message["id"]] = message
                        self._response_ready.notify_all()
                elif "id" in message:
                    # server-to-client request: acknowledge and move on
                    with self._lock:
                        if self.alive:
                            write_frame(self._proc.stdin, {
                                "jsonrpc": "2.0", "id": message["id"], "result": None,
                            })
                else:
                    self._handle_notification(message, _time.monotonic())
        except Exception as exc:
            if not self._closed:
                log.warning("reader thread stopped: %s", exc)
        finally:
            with self._response_ready:
                self._closed = True
                self._response_ready.notify_all()

    def _handle_notification(self, message: dict, now: float) -> None:
        method = message.get("method")
        params = message.get("params", {})
        if method == "textDocument/publishDiagnostics":
            uri = params.get("uri", "")
            state = self._doc(uri)
            with self._lock:
                state.diagnostics = params.get("diagnostics", [])
                state.diagnostics_version = params.get("version")
                state.publish_count += 1
                state.last_publish = now
        elif method == "$/lean/fileProgress":
            uri = (params.get("textDocument") or {}).get("uri", "")
            state = self._doc(uri)
            with self._lock:
                state.processing_done = not params.get("processing")

    # -- document state ----------------------------------------------------

    def _doc(self, uri: str) -> DocumentState:
        with self._lock:
            if uri not in self._docs:
                self._docs[uri] = DocumentState()
            return self._docs[uri]

    def doc_state(self, uri: str) -> DocumentState:
        return self._doc(uri)

    def reset_doc(self, uri: str) -> None:
        with self._lock:
            self._docs[uri] = DocumentState()
