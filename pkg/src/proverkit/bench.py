"""Benchmark harness: manifests, scripted sessions, reports.

A manifest declares the problem set (id, statement file, Lean stub file,
per-problem budget override) and points at a driver script.  Sessions
run strictly sequentially with network off by default; scripted drivers
and scripted model clients make runs deterministic, so two runs of the
same manifest produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .metrics import BenchRecord, bench_report, export_json, strip_lean
from .orchestrator.budget import Budget, CostEvent, enforce_budget
from .orchestrator.session import ProblemSpec, ProveSession, ScriptedDriver, run_prove
from .orchestrator.subagent import decompose, spawn_subagent
from .providers import ScriptedClient

MODES = ("direct", "with_informal", "with_subagents")


class ManifestError(ValueError):
    pass


@dataclass
class BenchProblem:
    problem_id: str
    statement: str
    stub: str
    budget: float


@dataclass
class BenchManifest:
    problems: list[BenchProblem]
    default_mode: str = "with_subagents"
    driver_script: dict = field(default_factory=dict)
    project_root: Path | None = None


class FakeClock:
    """Deterministic clock for replay runs: a fixed step per reading."""

    def __init__(self, start: float = 0.0, step: float = 1.0):
        self.now = start
        self.step = step

    def __call__(self) -> float:
        self.now += self.step
        return self.now


def load_manifest(path: Path) -> BenchManifest:
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    entries = raw.get("problems", [])
    if not entries:
        raise ManifestError("manifest lists no problems")
    base = path.parent
    default_budget = float(raw.get("default_budget", 50.0))
    problems = []
    seen = set()
    for entry in entries:
        pid = str(entry["id"])
        if pid in seen:
            raise ManifestError(f"duplicate problem id: {pid}")
        seen.add(pid)
        statement_path = entry.get("statement")
        stub_path = entry.get("stub")
        statement = (base / statement_path).read_text(encoding="utf-8") if statement_path else pid
        stub = (base / stub_path).read_text(encoding="utf-8") if stub_path else ""
        problems.append(BenchProblem(
            problem_id=pid,
            statement=statement.strip(),
            stub=stub,
            budget=float(entry.get("budget", default_budget)),
        ))
    script = {}
    if raw.get("driver_script"):
        script_path = base / raw["driver_script"]
        if not script_path.is_file():
            raise ManifestError(f"driver script not found: {script_path}")
        script = yaml.safe_load(script_path.read_text(encoding="utf-8")) or {}
    project_root = None
    if raw.get("project_root"):
        project_root = (base / raw["project_root"]).resolve()
    return BenchManifest(
        problems=problems,
        default_mode=str(raw.get("default_mode", "with_subagents")),
        driver_script=script,
        project_root=project_root,
    )


class ScriptedInformalClient:
    """Informal-prover stand-in: accepts or rejects a problem by script."""

    def __init__(self, accept: bool, sketch: str = ""):
        self.accept = accept
        self.sketch = sketch or "Work from the extremal case and bound both sides."
        self.endpoint_id = "mock:informal"

    def complete(self, messages):
        from .providers import _mock_exchange

        prompt = messages[-1]["content"]
        if "VERDICT" in prompt:
            verdict = "VERDICT: CORRECT" if self.accept else "VERDICT: INCORRECT"
            body = ("The chain of reasoning holds." if self.accept
                    else "The bound in the key step is unjustified.")
            return _mock_exchange(self.endpoint_id, messages, f"{body}\n{verdict}",
                                  cost=1.0)
        return _mock_exchange(self.endpoint_id, messages, self.sketch, cost=1.0)


def _scripted_subagent_runner(entry: dict, bridge, clock, slice_limit: float = 10.0):
    """Build a run_prove subagent hook from a script entry.

    The hook decomposes the stub with a scripted decomposition client,
    spawns one subagent per subgoal with scripted hint/prover clients, and
    reflects each slice's spend in the parent budget.
    """
    subgoals = entry.get("subgoals", [])
    codes = entry.get("subagent_codes", {})

    def runner(session: ProveSession, problem: ProblemSpec):
        if not subgoals:
            return None
        decomposition = "\n".join(f"SUBGOAL: {s}" for s in subgoals)
        tasks, fallback = decompose(
            problem.stub,
            ScriptedClient([decomposition], endpoint_id="mock:decompose"),
            hint_model="hint",
            prover_model="prover",
            context="upstream statements: " + problem.statement,
        )
        session.log("note", clock(), decomposed=len(tasks), fallback=fallback)
        results = []
        for task in tasks:
            limit = min(slice_limit, session.budget.remaining)
            task.budget_slice = Budget(limit=limit)
            providers = {
                "hint": ScriptedClient(
                    ["Close the goal by direct evaluation."],
                    endpoint_id="hint", cost_per_call=0.5),
                "prover": ScriptedClient(
                    [f"```lean\n{codes.get(task.goal, 'sorry')}\n```"],
                    endpoint_id="prover", cost_per_call=0.5),
            }
            outcome = spawn_subagent(task, providers, bridge, clock=clock)
            # the parent sees each slice as one cost event
            enforce_budget(session.budget, CostEvent(
                endpoint="subagent", cost=task.budget_slice.spent,
                timestamp=clock(),
            ))
            session.log("note", clock(), subgoal=task.goal,
                        subagent_outcome=outcome.outcome,
                        slice_spent=task.budget_slice.spent)
            if outcome.outcome != "proved":
                return None
            results.append(outcome.code)
        return results

    return runner


def _run_one(problem: BenchProblem, mode: str, mode_script: dict, bridge,
             clock) -> ProveSession:
    entry = mode_script.get(problem.problem_id, {})
    driver = ScriptedDriver({problem.problem_id: entry})
    informal_client = None
    if mode in ("with_informal", "with_subagents"):
        informal_client = ScriptedInformalClient(
            accept=bool(entry.get("informal_accept", False)),
        )
    subagent_runner = None
    if mode == "with_subagents":
        subagent_runner = _scripted_subagent_runner(entry, bridge, clock)
    spec = ProblemSpec(problem_id=problem.problem_id,
                       statement=problem.statement, stub=problem.stub)
    try:
        return run_prove(
            spec, mode, driver, bridge,
            Budget(limit=problem.budget),
            informal_client=informal_client,
            subagent_runner=subagent_runner,
            clock=clock,
        )
    except Exception as exc:  # a crashed session is a failed row, not a dead bench
        session = ProveSession(problem_id=problem.problem_id, mode=mode,
                               budget=Budget(limit=problem.budget))
        session.outcome = "failed"
        session.outcome_detail = f"session crashed: {exc}"
        return session


def run_bench(
    manifest: BenchManifest,
    bridge=None,
    mode: str | None = None,
    out_dir: Path | None = None,
    clock=None,
    parallel: int = 1,
    bridge_factory=None,
) -> tuple[list[BenchRecord], list[ProveSession]]:
    """Run every manifest problem in one mode.

    Sequential by default on a shared bridge.  With ``parallel`` > 1 each
    worker gets its own bridge from ``bridge_factory`` plus its own budget
    and clock, and results come back in manifest order regardless of
    scheduling.
    """
    mode = mode or manifest.default_mode
    if mode not in MODES:
        raise ManifestError(f"unknown mode: {mode}")
    mode_script = (manifest.driver_script.get("modes", {}) or {}).get(mode, {})

    sessions: list[ProveSession]
    if parallel > 1:
        if bridge_factory is None:
            raise ValueError("parallel runs need a bridge_factory")
        from concurrent.futures import ThreadPoolExecutor

        def worker(problem: BenchProblem) -> ProveSession:
            with bridge_factory() as own_bridge:
                return _run_one(problem, mode, mode_script, own_bridge, FakeClock())

        with ThreadPoolExecutor(max_workers=parallel) as pool:
            sessions = list(pool.map(worker, manifest.problems))
    else:
        if bridge is None:
            raise ValueError("sequential runs need a bridge")
        # a fresh clock per problem keeps reports identical across
        # sequential and parallel schedules
        sessions = [
            _run_one(problem, mode, mode_script, bridge,
                     clock if clock is not None else FakeClock())
            for problem in manifest.problems
        ]

    records: list[BenchRecord] = []
    for problem, session in zip(manifest.problems, sessions):
        solved = session.outcome == "proved"
        minutes = max(session.finished_at - session.started_at, 0.0) / 60.0
        records.append(BenchRecord(
            problem_id=problem.problem_id,
            solved=solved,
            wall_minutes=round(minutes, 4),
            line_count=strip_lean(session.solution).line_count if solved else None,
            budget_spent=session.budget.spent,
            mode=mode,
        ))
        if out_dir is not None:
            persist_session(out_dir, session)
    return records, sessions


def persist_session(out_dir: Path, session: ProveSession) -> Path:
    """Write a session's transcript (and solution) under out_dir/<problem>."""
    session_dir = Path(out_dir) / session.problem_id
    session_dir.mkdir(parents=True, exist_ok=True)
    with (session_dir / "transcript.jsonl").open("w", encoding="utf-8") as fh:
        for event in session.transcript:
            fh.write(json.dumps({
                "kind": event.kind,
                "timestamp": event.timestamp,
                **event.payload,
            }, ensure_ascii=False, sort_keys=True) + "\n")
        fh.write(json.dumps({
            "kind": "outcome",
            "outcome": session.outcome,
            "detail": session.outcome_detail,
            "mode": session.mode,
            "budget_limit": session.budget.limit,
            "budget_spent": session.budget.spent,
        }, ensure_ascii=False, sort_keys=True) + "\n")
    if session.solution:
        (session_dir / "solution.lean").write_text(session.solution + "\n",
                                                   encoding="utf-8")
    return session_dir


def report_from_logs(out_dir: Path, problem_order: list[str]) -> tuple[str, dict]:
    """Rebuild a report from persisted session logs and solution files."""
    records = []
    for pid in problem_order:
        session_dir = Path(out_dir) / pid
        transcript = session_dir / "transcript.jsonl"
        if not transcript.is_file():
            records.append(BenchRecord(problem_id=pid, solved=False, wall_minutes=0.0))
            continue
        events = [json.loads(line) for line in
                  transcript.read_text(encoding="utf-8").splitlines() if line.strip()]
        outcome = next((e for e in reversed(events) if e.get("kind") == "outcome"), {})
        timestamps = [e["timestamp"] for e in events if "timestamp" in e]
        minutes = (max(timestamps) - min(timestamps)) / 60.0 if len(timestamps) > 1 else 0.0
        solved = outcome.get("outcome") == "proved"
        line_count = None
        solution = session_dir / "solution.lean"
        if solved and solution.is_file():
            line_count = strip_lean(solution.read_text(encoding="utf-8")).line_count
        records.append(BenchRecord(
            problem_id=pid,
            solved=solved,
            wall_minutes=round(minutes, 4),
            line_count=line_count,
            budget_spent=float(outcome.get("budget_spent", 0.0)),
            mode=str(outcome.get("mode", "")),
        ))
    table, export = bench_report(records)
    return table, export


def write_report(out_dir: Path, table: str, export: dict) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(table + "\n", encoding="utf-8")
    (out_dir / "report.json").write_text(export_json(export) + "\n", encoding="utf-8")
