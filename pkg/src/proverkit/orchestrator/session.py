"""Proving sessions: drive an agent over problems and blueprints.

A session runs in one of three modes: ``direct`` (the driver formalizes
straight away), ``with_informal`` (an informally proved solution is fed
to the driver as a hint), or ``with_subagents`` (stuck goals are
decomposed and handed to context-isolated subagents).  Every model or
driver call is budget-gated; exhaustion is a hard stop.

The agent driver is an interface.  The reference implementation is
script/replay based; a thin live driver forwards to a chat endpoint.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from ..blueprint.model import (
    STATUS_PROVED,
    BlueprintGraph,
    RefinementEdit,
)
from ..blueprint.ops import EditError, apply_edit, proving_order, validate
from ..metrics import strip_lean
from ..providers import ChatClient, ProviderError
from .budget import Budget, CostEvent, enforce_budget

DEFAULT_ATTEMPTS = 3
DEFAULT_EDIT_RETRIES = 2

Clock = Callable[[], float]


@dataclass
class ProblemSpec:
    problem_id: str
    statement: str  # informal statement
    stub: str  # Lean statement stub, typically ending in sorry


@dataclass
class TranscriptEvent:
    kind: str  # model_call | tool_call | cost | status | note
    payload: dict
    timestamp: float


@dataclass
class Proposal:
    """One driver step: Lean code, a blueprint edit, or giving up (neither)."""

    code: str | None = None
    edit: RefinementEdit | None = None
    cost: float = 1.0
    note: str = ""


class AgentDriver(Protocol):
    def propose_code(self, goal_id: str, statement: str, context: dict) -> Proposal: ...

    def propose_edit(self, goal_id: str, statement: str, context: dict) -> Proposal: ...


@dataclass
class ProveSession:
    problem_id: str
    mode: str
    budget: Budget
    transcript: list[TranscriptEvent] = field(default_factory=list)
    outcome: str = "failed"  # proved | failed | budget_exhausted
    outcome_detail: str = ""
    solution: str | None = None
    started_at: float = 0.0
    finished_at: float = 0.0

    def log(self, kind: str, timestamp: float, **payload) -> None:
        self.transcript.append(TranscriptEvent(kind=kind, payload=payload,
                                               timestamp=timestamp))


def has_sorry(code: str) -> bool:
    """True when a sorry token survives outside comments and strings."""
    without_comments = strip_lean(code).normalized
    without_strings = re.sub(r'"(?:[^"\\]|\\.)*"', '""', without_comments)
    return re.search(r"\bsorry\b", without_strings) is not None


def extract_lean_code(text: str) -> str:
    """Pull the first fenced lean block out of a model reply, else the text."""
    match = re.search(r"```(?:lean4?)?\n(.*?)```", text, re.DOTALL)
    return match.group(1).strip() if match else text.strip()


class ScriptedDriver:
    """Replay driver: per-goal lists of code attempts plus optional edits.

    Script shape::

        {goal_id: {"attempts": [code, ...],       # returned in order
                   "hinted_attempts": [code, ...],  # used when a hint is given
                   "attempts_by_statement": {substr: [code, ...]},
                   "edit": {kind, target, payload},  # offered when asked
                   "final": code,                  # assembly after subagents
                   "cost": 1.0}}

    ``attempts_by_statement`` matches a substring of the goal's current
    statement, which lets a script react to an applied blueprint edit.
    Attempts past the end of a list return no code (the driver gives up).
    """

    def __init__(self, script: dict):
        self.script = script
        self._cursor: dict[str, int] = {}

    def _entry(self, goal_id: str) -> dict:
        return self.script.get(goal_id, {})

    def propose_code(self, goal_id: str, statement: str, context: dict) -> Proposal:
        entry = self._entry(goal_id)
        cost = float(entry.get("cost", 1.0))
        if context.get("assembly"):
            final = entry.get("final")
            return Proposal(code=final, cost=cost)
        key = goal_id if not context.get("informal_hint") else f"{goal_id}::hinted"
        attempts = entry.get("hinted_attempts" if context.get("informal_hint") else "attempts", [])
        for marker, override in entry.get("attempts_by_statement", {}).items():
            if marker in statement:
                key = f"{goal_id}|{marker}"
                attempts = override
                break
        idx = self._cursor.get(key, 0)
        self._cursor[key] = idx + 1
        if idx < len(attempts):
            return Proposal(code=attempts[idx], cost=cost)
        return Proposal(code=None, cost=cost, note="out of scripted attempts")

    def propose_edit(self, goal_id: str, statement: str, context: dict) -> Proposal:
        entry = self._entry(goal_id)
        edit_spec = entry.get("edit")
        if not edit_spec:
            return Proposal(cost=float(entry.get("cost", 1.0)), note="no scripted edit")
        edit = RefinementEdit(
            kind=edit_spec["kind"],
            target=edit_spec["target"],
            payload=edit_spec.get("payload", {}),
        )
        return Proposal(edit=edit, cost=float(entry.get("cost", 1.0)))


@dataclass
class BudgetGatedClient:
    """Refuses provider calls once the session budget is exhausted.

    Sessions wrap every model client in this gate so the hard-stop
    invariant holds even inside nested loops that the session does not
    drive call by call (e.g. informal refinement).
    """

    inner: ChatClient
    budget: Budget

    def complete(self, messages: list[dict]):
        if self.budget.exhausted or self.budget.remaining <= 0:
            self.budget.exhausted = True
            raise ProviderError("budget exhausted; no further model calls")
        return self.inner.complete(messages)


class LiveDriver:
    """Thin driver that asks one chat endpoint for Lean code or an edit."""

    def __init__(self, client: ChatClient):
        self.client = client

    def propose_code(self, goal_id: str, statement: str, context: dict) -> Proposal:
        parts = [f"Formalize and prove the following statement in Lean 4:\n{statement}\n"]
        if context.get("informal_hint"):
            parts.append(f"A verified informal solution to follow:\n{context['informal_hint']}\n")
        if context.get("subagent_results"):
            parts.append("Proved auxiliary lemmas you may use:\n"
                         + "\n\n".join(context["subagent_results"]) + "\n")
        if context.get("feedback"):
            parts.append(f"The previous attempt failed with:\n{context['feedback']}\n")
        parts.append("Reply with a single fenced ```lean code block.")
        try:
            exchange = self.client.complete([
                {"role": "user", "content": "\n".join(parts)},
            ])
        except ProviderError as exc:
            return Proposal(code=None, cost=0.0, note=f"model failure: {exc}")
        return Proposal(code=extract_lean_code(exchange.response), cost=exchange.cost)

    def propose_edit(self, goal_id: str, statement: str, context: dict) -> Proposal:
        # Blueprint repair suggestions flow through discussion tooling; the
        # thin driver only restates with the accumulated feedback attached.
        feedback = context.get("feedback", "")
        if not feedback:
            return Proposal(note="no feedback to restate from")
        edit = RefinementEdit(
            kind="restate",
            target=goal_id,
            payload={"statement": f"{statement} (reworked: {feedback[:200]})"},
        )
        return Proposal(edit=edit)


def _gate(session: ProveSession, clock: Clock) -> bool:
    """True when the session must stop for budget reasons."""
    if session.budget.exhausted or session.budget.remaining <= 0:
        session.budget.exhausted = True
        session.outcome = "budget_exhausted"
        session.outcome_detail = "budget exhausted"
        session.log("status", clock(), status="budget_exhausted")
        return True
    return False


def _debit(session: ProveSession, endpoint: str, cost: float, clock: Clock) -> bool:
    """Apply a cost; returns False (and flips the session) on exhaustion."""
    event = CostEvent(endpoint=endpoint, cost=cost, timestamp=clock())
    if enforce_budget(session.budget, event) == "exhausted":
        session.outcome = "budget_exhausted"
        session.outcome_detail = "budget exhausted"
        session.log("status", clock(), status="budget_exhausted")
        return False
    session.log("cost", clock(), endpoint=endpoint, cost=cost)
    return True


def _attempt_node(
    session: ProveSession,
    driver: AgentDriver,
    bridge,
    goal_id: str,
    statement: str,
    context: dict,
    attempts: int,
    clock: Clock,
) -> str | None:
    """Drive up to ``attempts`` proposals; returns accepted code or None."""
    last_feedback = ""
    for _ in range(attempts):
        if _gate(session, clock):
            return None
        ctx = dict(context)
        if last_feedback:
            ctx["feedback"] = last_feedback
        proposal = driver.propose_code(goal_id, statement, ctx)
        session.log("model_call", clock(), goal=goal_id, step="propose_code",
                    note=proposal.note)
        if not _debit(session, "agent", proposal.cost, clock):
            return None
        if proposal.code is None:
            return None
        result = bridge.run_code(proposal.code)
        session.log("tool_call", clock(), tool="lean_run_code", goal=goal_id,
                    success=result.success,
                    errors=sum(1 for d in result.diagnostics if d.is_error))
        sorry_free = not has_sorry(proposal.code) and not any(
            "sorry" in d.message for d in result.diagnostics
        )
        if result.success and sorry_free:
            return proposal.code
        last_feedback = "\n".join(
            f"{d.severity}: {d.message}" for d in result.diagnostics
        ) or "elaboration failed"
    return None


def run_prove(
    problem: ProblemSpec,
    mode: str,
    driver: AgentDriver,
    bridge,
    budget: Budget,
    informal_client: ChatClient | None = None,
    subagent_runner=None,
    attempts: int = DEFAULT_ATTEMPTS,
    clock: Clock = time.time,
) -> ProveSession:
    """Prove one standalone problem in the requested mode."""
    if mode not in ("direct", "with_informal", "with_subagents"):
        raise ValueError(f"unknown mode: {mode}")
    session = ProveSession(problem_id=problem.problem_id, mode=mode, budget=budget)
    session.started_at = clock()

    try:
        if _gate(session, clock):
            return session

        hint = None
        if mode in ("with_informal", "with_subagents") and informal_client is not None:
            from ..informal import refine_loop

            def on_exchange(exchange):
                session.log("model_call", clock(), endpoint=exchange.endpoint_id,
                            step="informal")
                _debit(session, exchange.endpoint_id, exchange.cost, clock)

            refinement = refine_loop(problem.statement,
                                     BudgetGatedClient(informal_client, budget),
                                     on_exchange=on_exchange)
            session.log("status", clock(), informal_outcome=refinement.outcome,
                        iterations=len(refinement.iterations))
            if refinement.outcome == "accepted":
                hint = refinement.solution
            if _gate(session, clock):
                return session

        context = {"informal_hint": hint} if hint else {}
        code = _attempt_node(session, driver, bridge, problem.problem_id,
                             problem.stub, context, attempts, clock)
        if code is not None:
            session.outcome = "proved"
            session.solution = code
            return session
        if session.outcome == "budget_exhausted":
            return session

        if mode == "with_subagents" and subagent_runner is not None:
            sub_results = subagent_runner(session, problem)
            if sub_results is not None:
                assembly_ctx = {"assembly": True, "subagent_results": sub_results}
                if hint:
                    assembly_ctx["informal_hint"] = hint
                code = _attempt_node(session, driver, bridge, problem.problem_id,
                                     problem.stub, assembly_ctx, attempts, clock)
                if code is not None:
                    session.outcome = "proved"
                    session.solution = code
                    return session
        if session.outcome != "budget_exhausted":
            session.outcome = "failed"
            session.outcome_detail = session.outcome_detail or "no accepted attempt"
        return session
    finally:
        session.finished_at = clock()
        session.log("status", clock(), final=session.outcome)


def plan_formalize_refine(
    graph: BlueprintGraph,
    driver: AgentDriver,
    bridge,
    budget: Budget,
    failure_threshold: int = DEFAULT_ATTEMPTS,
    edit_retries: int = DEFAULT_EDIT_RETRIES,
    clock: Clock = time.time,
) -> tuple[BlueprintGraph, ProveSession]:
    """Iterate proving order over a blueprint, revising it when stuck.

    Each non-proved node gets driver attempts; after the failure threshold
    a blueprint edit is solicited and applied, and the pass restarts on the
    updated plan.  The loop ends when the root is proved, the budget is
    exhausted, or a full pass makes no progress.
    """
    findings = validate(graph)
    if findings:
        raise ValueError(f"blueprint does not validate: {findings[0].message}")

    session = ProveSession(problem_id=graph.root, mode="blueprint", budget=budget)
    session.started_at = clock()
    proofs: dict[str, str] = {}

    while True:
        if _gate(session, clock):
            break
        progress = False
        order = proving_order(graph)
        restart = False
        for node_id in order:
            node = graph.node(node_id)
            if node.status == STATUS_PROVED:
                continue
            context = {
                "upstream": [graph.node(u).statement for u in node.uses],
                "proved_code": [proofs[u] for u in node.uses if u in proofs],
            }
            code = _attempt_node(session, driver, bridge, node_id, node.statement,
                                 context, failure_threshold, clock)
            if session.outcome == "budget_exhausted":
                restart = True
                break
            if code is not None:
                graph = graph.replace_nodes({node_id: _mark_proved(node)})
                proofs[node_id] = code
                session.log("status", clock(), node=node_id, status="proved")
                progress = True
                continue
            # stuck: solicit a blueprint edit
            edited = False
            for _ in range(edit_retries):
                if _gate(session, clock):
                    restart = True
                    break
                proposal = driver.propose_edit(node_id, node.statement, context)
                if not _debit(session, "agent", proposal.cost, clock):
                    restart = True
                    break
                if proposal.edit is None:
                    break
                try:
                    graph = apply_edit(graph, proposal.edit)
                    session.log("status", clock(), node=node_id,
                                edit=proposal.edit.kind, applied=True)
                    edited = True
                    progress = True
                    break
                except EditError as exc:
                    session.log("note", clock(), node=node_id,
                                edit_rejected=str(exc))
            if restart or edited:
                restart = True
                break
        if session.outcome == "budget_exhausted":
            break
        root_proved = graph.node(graph.root).status == STATUS_PROVED
        if root_proved:
            session.outcome = "proved"
            session.solution = "\n\n".join(
                proofs[nid] for nid in proving_order(graph) if nid in proofs
            )
            break
        if restart:
            continue
        if not progress:
            session.outcome = "failed"
            session.outcome_detail = "no progress over a full pass"
            break

    session.finished_at = clock()
    session.log("status", clock(), final=session.outcome)
    return graph, session


def _mark_proved(node):
    from dataclasses import replace

    if node.lean_name:
        return node.with_status(STATUS_PROVED)
    # a freshly proved node gets its Lean name from its id
    return replace(node, lean_name=node.id, status=STATUS_PROVED)
