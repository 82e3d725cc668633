"""Agentic theorem-proving toolkit.

An MCP tool server that lets LLM agents drive the Lean prover (goals,
diagnostics, snippet execution, search), plus the orchestration machinery
around it: iterative informal proving, multi-model discussion, blueprint
dependency planning, subagent decomposition, and a budget-bounded
benchmark harness.  Deterministic mock backends make the whole control
flow testable offline.
"""

__version__ = "0.1.0"
