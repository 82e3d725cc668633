from .model import BlueprintGraph, BlueprintNode, Finding, RefinementEdit
from .ops import EditError, apply_edit, proving_order, validate
from .parser import BlueprintParseError, parse_blueprint, serialize_blueprint
from .status import status_report

__all__ = [
    "BlueprintGraph",
    "BlueprintNode",
    "BlueprintParseError",
    "EditError",
    "Finding",
    "RefinementEdit",
    "apply_edit",
    "parse_blueprint",
    "proving_order",
    "serialize_blueprint",
    "status_report",
    "validate",
]
