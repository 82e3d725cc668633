"""Subagent decomposition: isolated workers for stuck subgoals.

A subagent gets one formal goal and a freshly curated context (upstream
statements, retrieved declarations, an optional informal hint) with no
parent conversation history.  Each round it asks a hint model for an
informal sketch, formalizes guided by it, and checks the result against
the Lean bridge; rounds repeat until success, a cap, or slice exhaustion.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from ..providers import ChatClient, ProviderError
from .budget import Budget
from .session import (
    Clock,
    ProveSession,
    TranscriptEvent,
    _debit,
    _gate,
    extract_lean_code,
    has_sorry,
)

DEFAULT_SUBAGENT_ROUNDS = 3
DECOMPOSE_RETRIES = 2

HINT_PROMPT = (
    "Sketch, informally but precisely, how to prove the following formal "
    "statement. Focus on the key idea; a few sentences suffice.\n\n{goal}\n\n"
    "Context:\n{context}"
)
FORMALIZE_PROMPT = (
    "Prove this statement in Lean 4. Reply with a single fenced ```lean "
    "code block containing a complete declaration.\n\nStatement:\n{goal}\n\n"
    "Context (statements you may rely on, without their proofs):\n{context}\n\n"
    "Informal hint:\n{hint}"
)
DECOMPOSE_PROMPT = (
    "Decompose the proof of the following formal statement into independent "
    "subgoals. Reply with one line per subgoal, each starting with "
    "'SUBGOAL:' followed by a self-contained formal statement.\n\n{goal}"
)


@dataclass
class SubagentTask:
    goal: str  # formal statement text
    context: str  # curated bundle: upstream statements, retrieval, hint
    budget_slice: Budget
    hint_model: str
    prover_model: str = ""
    forbidden_markers: tuple[str, ...] = ()  # parent turns that must not leak

    def __post_init__(self) -> None:
        if not self.goal.strip():
            raise ValueError("subagent goal must be non-empty")
        for marker in self.forbidden_markers:
            if marker and marker in self.context:
                raise ValueError(
                    "subagent context contains parent conversation content; "
                    "contexts must be freshly curated"
                )
        if not self.prover_model:
            self.prover_model = self.hint_model


@dataclass
class SubagentResult:
    outcome: str  # proved | failed
    code: str | None
    reason: str = ""
    transcript: list[TranscriptEvent] = field(default_factory=list)


def spawn_subagent(
    task: SubagentTask,
    providers: dict[str, ChatClient],
    bridge,
    max_rounds: int = DEFAULT_SUBAGENT_ROUNDS,
    clock: Clock = time.time,
) -> SubagentResult:
    """Run one isolated hint-then-formalize loop for a single subgoal."""
    if task.hint_model not in providers:
        raise KeyError(f"unknown hint model endpoint: {task.hint_model}")
    if task.prover_model not in providers:
        raise KeyError(f"unknown prover model endpoint: {task.prover_model}")

    shadow = ProveSession(problem_id="subagent", mode="subagent",
                          budget=task.budget_slice)
    for round_idx in range(max_rounds):
        if _gate(shadow, clock):
            return SubagentResult("failed", None, "budget slice exhausted",
                                  shadow.transcript)
        hint = ""
        try:
            exchange = providers[task.hint_model].complete([
                {"role": "user", "content": HINT_PROMPT.format(
                    goal=task.goal, context=task.context)},
            ])
            shadow.log("model_call", clock(), endpoint=task.hint_model,
                       step="hint", round=round_idx)
            if not _debit(shadow, task.hint_model, exchange.cost, clock):
                return SubagentResult("failed", None, "budget slice exhausted",
                                      shadow.transcript)
            hint = exchange.response
        except ProviderError as exc:
            # proceed without a hint this round, on the record
            shadow.log("note", clock(), hint_failure=str(exc), round=round_idx)

        try:
            exchange = providers[task.prover_model].complete([
                {"role": "user", "content": FORMALIZE_PROMPT.format(
                    goal=task.goal, context=task.context,
                    hint=hint or "(none this round)")},
            ])
        except ProviderError as exc:
            shadow.log("note", clock(), prover_failure=str(exc), round=round_idx)
            continue
        shadow.log("model_call", clock(), endpoint=task.prover_model,
                   step="formalize", round=round_idx)
        if not _debit(shadow, task.prover_model, exchange.cost, clock):
            return SubagentResult("failed", None, "budget slice exhausted",
                                  shadow.transcript)
        code = extract_lean_code(exchange.response)
        try:
            result = bridge.run_code(code)
        except Exception as exc:
            return SubagentResult("failed", None, f"bridge failure: {exc}",
                                  shadow.transcript)
        shadow.log("tool_call", clock(), tool="lean_run_code",
                   success=result.success, round=round_idx)
        if result.success and not has_sorry(code) and not any(
            "sorry" in d.message for d in result.diagnostics
        ):
            return SubagentResult("proved", code, "", shadow.transcript)
    return SubagentResult("failed", None, f"no proof within {max_rounds} rounds",
                          shadow.transcript)


def decompose(
    goal: str,
    client: ChatClient,
    *,
    hint_model: str,
    prover_model: str = "",
    slice_limit: float = 0.0,
    context: str = "",
    forbidden_markers: tuple[str, ...] = (),
    retries: int = DECOMPOSE_RETRIES,
) -> tuple[list[SubagentTask], bool]:
    """Split a goal into subagent tasks; falls back to a single task.

    Returns (tasks, fallback_used).  Each task gets its own fresh context
    and a budget slice of ``slice_limit``.
    """
    statements: list[str] = []
    for _ in range(retries + 1):
        try:
            exchange = client.complete([
                {"role": "user", "content": DECOMPOSE_PROMPT.format(goal=goal)},
            ])
        except ProviderError:
            continue
        statements = [
            match.group(1).strip()
            for match in re.finditer(r"^SUBGOAL:\s*(.+)$", exchange.response, re.MULTILINE)
            if match.group(1).strip()
        ]
        if statements:
            break
    fallback = not statements
    if fallback:
        statements = [goal]
    tasks = [
        SubagentTask(
            goal=stmt,
            context=context,
            budget_slice=Budget(limit=slice_limit),
            hint_model=hint_model,
            prover_model=prover_model or hint_model,
            forbidden_markers=forbidden_markers,
        )
        for stmt in statements
    ]
    return tasks, fallback
