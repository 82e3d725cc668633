from .budget import Budget, BudgetExhausted, CostEvent, enforce_budget
from .session import (
    AgentDriver,
    ProblemSpec,
    ProveSession,
    ScriptedDriver,
    plan_formalize_refine,
    run_prove,
)
from .subagent import SubagentTask, decompose, spawn_subagent

__all__ = [
    "AgentDriver",
    "Budget",
    "BudgetExhausted",
    "CostEvent",
    "ProblemSpec",
    "ProveSession",
    "ScriptedDriver",
    "SubagentTask",
    "decompose",
    "enforce_budget",
    "plan_formalize_refine",
    "run_prove",
    "spawn_subagent",
]
