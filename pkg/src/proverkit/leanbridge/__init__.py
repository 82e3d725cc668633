from .bridge import LeanBridge
from .types import (
    AttemptResult,
    BridgeError,
    BridgeTimeout,
    CapabilityDisabled,
    DeclMatch,
    Diagnostic,
    FileLocation,
    GoalState,
)

__all__ = [
    "AttemptResult",
    "BridgeError",
    "BridgeTimeout",
    "CapabilityDisabled",
    "DeclMatch",
    "Diagnostic",
    "FileLocation",
    "GoalState",
    "LeanBridge",
]
