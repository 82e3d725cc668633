"""MCP tool server over a newline-delimited JSON-RPC 2.0 stdio transport.

One JSON-RPC message per line, UTF-8.  Requests are handled strictly
sequentially within a session.  Tool handler failures are reported inside
the tool result (``isError: true``); protocol-level errors are reserved
for malformed or unroutable requests.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Callable

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "2024-11-05"
MAX_MESSAGE_BYTES = 16 * 1024 * 1024

# JSON-RPC 2.0 error codes
PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603


class DuplicateToolError(ValueError):
    """A tool with the same name is already registered."""


@dataclass
class ToolDescriptor:
    """Advertised tool: name, description and input schema.

    ``input_schema`` is a JSON-Schema-style object with a ``properties``
    map and an optional ``required`` list; every required name must be a
    declared property.
    """

    name: str
    description: str
    input_schema: dict

    def __post_init__(self) -> None:
        props = self.input_schema.get("properties", {})
        for req in self.input_schema.get("required", []):
            if req not in props:
                raise ValueError(
                    f"tool {self.name!r}: required parameter {req!r} missing from properties"
                )


@dataclass
class ToolResult:
    """Outcome of one tool call: ordered text blocks plus an error flag."""

    content: list[str] = field(default_factory=list)
    is_error: bool = False

    def __post_init__(self) -> None:
        if self.is_error and not self.content:
            raise ValueError("error results must carry an explanation")

    def to_wire(self) -> dict:
        return {
            "content": [{"type": "text", "text": block} for block in self.content],
            "isError": self.is_error,
        }


def text_result(*blocks: str) -> ToolResult:
    return ToolResult(content=list(blocks))


ToolHandler = Callable[[dict], ToolResult]


def _error_response(req_id: Any, code: int, message: str) -> dict:
    return {"jsonrpc": "2.0", "id": req_id, "error": {"code": code, "message": message}}


def _result_response(req_id: Any, result: Any) -> dict:
    return {"jsonrpc": "2.0", "id": req_id, "result": result}


class McpServer:
    """Dispatches ``initialize``, ``tools/list`` and ``tools/call`` requests."""

    def __init__(self, name: str = "proverkit", version: str = "0.1.0") -> None:
        self.name = name
        self.version = version
        self._tools: dict[str, tuple[ToolDescriptor, ToolHandler]] = {}

    def register_tool(self, descriptor: ToolDescriptor, handler: ToolHandler) -> None:
        if descriptor.name in self._tools:
            raise DuplicateToolError(f"tool already registered: {descriptor.name}")
        self._tools[descriptor.name] = (descriptor, handler)

    @property
    def tool_names(self) -> list[str]:
        return list(self._tools)

    def handle_request(self, envelope: dict) -> dict | None:
        """Answer one parsed JSON-RPC message; None for notifications."""
        req_id = envelope.get("id")
        method = envelope.get("method")
        if not isinstance(method, str):
            # Null-safe id: malformed requests are answered even without one.
            return _error_response(req_id, INVALID_REQUEST, "missing method")
        if req_id is None:
            # Notification: never answered.
            return None
        if method == "initialize":
            return _result_response(req_id, {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {}},
                "serverInfo": {"name": self.name, "version": self.version},
            })
        if method == "tools/list":
            return _result_response(req_id, {
                "tools": [
                    {
                        "name": desc.name,
                        "description": desc.description,
                        "inputSchema": desc.input_schema,
                    }
                    for desc, _ in self._tools.values()
                ]
            })
        if method == "tools/call":
            params = envelope.get("params")
            if not isinstance(params, dict) or not isinstance(params.get("name"), str):
                return _error_response(req_id, INVALID_PARAMS, "tools/call needs a tool name")
            tool_name = params["name"]
            arguments = params.get("arguments", {})
            if not isinstance(arguments, dict):
                return _error_response(req_id, INVALID_PARAMS, "arguments must be an object")
            entry = self._tools.get(tool_name)
            if entry is None:
                return _error_response(req_id, INVALID_PARAMS, f"unknown tool: {tool_name}")
            _, handler = entry
            try:
                result = handler(arguments)
            except Exception as exc:  # tool failures are data, not protocol failures
                log.warning("tool %s failed: %s", tool_name, exc)
                result = ToolResult(content=[f"tool {tool_name} failed: {exc}"], is_error=True)
            return _result_response(req_id, result.to_wire())
        return _error_response(req_id, METHOD_NOT_FOUND, f"unknown method: {method}")

    def serve(self, reader: BinaryIO, writer: BinaryIO) -> None:
        """Process one session: one message per line until stream close."""
        for raw in reader:
            if len(raw) > MAX_MESSAGE_BYTES:
                _write_line(writer, _error_response(None, INVALID_REQUEST, "message too large"))
                continue
            line = raw.strip()
            if not line:
                continue
            try:
                envelope = json.loads(line.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                _write_line(writer, _error_response(None, PARSE_ERROR, f"parse error: {exc}"))
                continue
            if not isinstance(envelope, dict):
                _write_line(writer, _error_response(None, INVALID_REQUEST, "message must be an object"))
                continue
            response = self.handle_request(envelope)
            if response is not None:
                _write_line(writer, response)


def encode_message(message: dict) -> bytes:
    return json.dumps(message, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def _write_line(writer: BinaryIO, message: dict) -> None:
    writer.write(encode_message(message) + b"\n")
    writer.flush()
