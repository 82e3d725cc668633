from .server import (
    DuplicateToolError,
    McpServer,
    ToolDescriptor,
    ToolResult,
    text_result,
)

__all__ = [
    "DuplicateToolError",
    "McpServer",
    "ToolDescriptor",
    "ToolResult",
    "text_result",
]
