"""Per-problem spend tracking with a hard stop.

Costs are unit amounts meant to reflect relative effort, not exact
vendor billing.  A debit that would push spend past the limit is never
applied: the budget flips to exhausted and stays there.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class BudgetExhausted(RuntimeError):
    """Raised by call sites that must not proceed once spend hit the limit."""


@dataclass(frozen=True)
class CostEvent:
    endpoint: str
    cost: float
    input_tokens: int = 0
    output_tokens: int = 0
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.cost < 0:
            raise ValueError("cost must be non-negative")


@dataclass
class Budget:
    limit: float
    spent: float = 0.0
    call_counts: dict[str, int] = field(default_factory=dict)
    exhausted: bool = False
    events: list[CostEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.limit < 0:
            raise ValueError("budget limit must be non-negative")

    @property
    def remaining(self) -> float:
        return max(self.limit - self.spent, 0.0)


def enforce_budget(budget: Budget, event: CostEvent) -> str:
    """Apply one cost event; returns "ok" or "exhausted".

    The debit lands only when ``spent + cost <= limit``; otherwise spend is
    left untouched and the budget is marked exhausted.  Zero-cost events on
    an exhausted budget are refused too: exhaustion is a terminal state.
    """
    if budget.exhausted:
        return "exhausted"
    new_spent = budget.spent + event.cost
    if new_spent > budget.limit:
        budget.exhausted = True
        return "exhausted"
    budget.spent = new_spent
    budget.call_counts[event.endpoint] = budget.call_counts.get(event.endpoint, 0) + 1
    budget.events.append(event)
    return "ok"
