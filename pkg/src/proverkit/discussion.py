"""Consulting external models about a stuck proof state.

One request/response per partner per call; partners are queried
concurrently and their suggestions come back in partner-list order.  A
partner timing out or erroring never suppresses the others.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field

from .providers import ChatClient, ChatExchange

DEFAULT_CONTEXT_CAP = 32_000

PARTNER_SYSTEM = (
    "Another model is stuck on a formalization task. Analyze the state it "
    "shares and suggest candidate ideas or alternative proof paths."
)


@dataclass
class DiscussionRequest:
    context: str  # current goal, relevant code excerpt, bottleneck description
    partners: list[str]
    per_partner_timeout: float = 60.0
    context_cap: int = DEFAULT_CONTEXT_CAP

    def __post_init__(self) -> None:
        if not self.context.strip():
            raise ValueError("discussion context must be non-empty")
        if not self.partners:
            raise ValueError("at least one partner is required")
        if len(self.context) > self.context_cap:
            # keep the head (goal and bottleneck lead), drop excess excerpt tail
            self.context = self.context[: self.context_cap]


@dataclass
class Suggestion:
    partner: str
    idea: str
    status: str  # ok | timeout | error

    def __post_init__(self) -> None:
        if self.status not in ("ok", "timeout", "error"):
            raise ValueError(f"unknown suggestion status: {self.status}")
        if self.status == "ok" and not self.idea:
            raise ValueError("ok suggestions must carry an idea")


@dataclass
class DiscussionOutcome:
    suggestions: list[Suggestion]
    exchanges: list[ChatExchange] = field(default_factory=list)


def discuss(req: DiscussionRequest, providers: dict[str, ChatClient]) -> DiscussionOutcome:
    """Ask every partner for one suggestion; results align with req.partners.

    Unknown partner ids are rejected up front, before any call is made.
    """
    unknown = [p for p in req.partners if p not in providers]
    if unknown:
        raise KeyError(f"unknown partner endpoints: {', '.join(unknown)}")

    messages = [
        {"role": "system", "content": PARTNER_SYSTEM},
        {"role": "user", "content": req.context},
    ]

    def ask(partner: str) -> tuple[Suggestion, ChatExchange | None]:
        try:
            exchange = providers[partner].complete(messages)
        except Exception as exc:
            return Suggestion(partner=partner, idea=str(exc), status="error"), None
        return Suggestion(partner=partner, idea=exchange.response, status="ok"), exchange

    outcome = DiscussionOutcome(suggestions=[])
    pool = ThreadPoolExecutor(max_workers=max(len(req.partners), 1))
    try:
        futures = [pool.submit(ask, partner) for partner in req.partners]
        deadline = time.monotonic() + req.per_partner_timeout
        for partner, future in zip(req.partners, futures):
            try:
                remaining = max(deadline - time.monotonic(), 0.0)
                suggestion, exchange = future.result(timeout=remaining)
            except FutureTimeout:
                suggestion, exchange = Suggestion(
                    partner=partner, idea="timed out", status="timeout"
                ), None
            outcome.suggestions.append(suggestion)
            if exchange is not None:
                outcome.exchanges.append(exchange)
    finally:
        # do not block on a hung partner; its thread ends with the transport timeout
        pool.shutdown(wait=False)
    return outcome
