"""Records surfaced by the Lean language-server bridge."""

from __future__ import annotations

from dataclasses import dataclass, field

SEVERITIES = ("error", "warning", "info")


@dataclass(frozen=True)
class FileLocation:
    """1-based (line, column) position in a project file."""

    path: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")


@dataclass(frozen=True)
class GoalState:
    goals: tuple[str, ...]
    rendered: str

    @classmethod
    def from_goals(cls, goals: list[str]) -> "GoalState":
        return cls(goals=tuple(goals), rendered="\n\n".join(goals))

    @property
    def is_empty(self) -> bool:
        return not self.goals


@dataclass(frozen=True)
class Diagnostic:
    path: str
    start_line: int  # 1-based
    start_column: int
    end_line: int
    end_column: int
    severity: str
    message: str

    def __post_init__(self) -> None:
        if self.severity not in SEVERITIES:
            raise ValueError(f"unknown severity: {self.severity}")
        if (self.end_line, self.end_column) < (self.start_line, self.start_column):
            raise ValueError("diagnostic range end precedes start")

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


@dataclass
class AttemptResult:
    """Outcome of elaborating one snippet."""

    snippet: str
    success: bool
    diagnostics: list[Diagnostic] = field(default_factory=list)
    resulting_goal: GoalState | None = None
    timed_out: bool = False

    def __post_init__(self) -> None:
        if self.success and any(d.is_error for d in self.diagnostics):
            raise ValueError("successful attempts cannot carry error diagnostics")


@dataclass(frozen=True)
class DeclMatch:
    """A declaration found by local, stdlib or remote search."""

    name: str
    signature: str
    source: str  # local_project | stdlib | loogle
    location: FileLocation | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("declaration name must be non-empty")
        if self.source not in ("local_project", "stdlib", "loogle"):
            raise ValueError(f"unknown match source: {self.source}")


class BridgeError(RuntimeError):
    """Transport or environment failure, distinct from an empty result."""


class BridgeTimeout(BridgeError):
    """The language server did not answer in time; may carry partial data."""

    def __init__(self, message: str, partial: list[Diagnostic] | None = None):
        super().__init__(message)
        self.partial = partial or []


class CapabilityDisabled(BridgeError):
    """The operation needs a capability (e.g. network) that is switched off."""
