"""Iterative informal proving: a Generator/Verifier refinement loop.

The generator drafts a detailed solution; the verifier judges it several
times independently and the solution is accepted only when every pass
agrees it is correct.  On rejection the failing feedback is folded into
the next generation prompt.  An independent-sampling mode generates each
candidate from scratch for budget-matched comparisons.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

from .providers import ChatClient, ChatExchange, ProviderError

DEFAULT_MAX_ITERATIONS = 20
DEFAULT_CONSENSUS = 3
DEFAULT_FEEDBACK_BUDGET = 8000

_VERDICT_RE = re.compile(r"^VERDICT:\s*(CORRECT|INCORRECT)\s*$")

GENERATOR_SYSTEM = "You are a careful mathematician writing complete, detailed solutions."
VERIFIER_SYSTEM = "You are a strict verifier of mathematical solutions."


@dataclass
class Verdict:
    passed: bool
    feedback: str
    infrastructure_failure: bool = False

    def __post_init__(self) -> None:
        if not self.feedback:
            raise ValueError("verdicts must carry feedback text")


@dataclass
class IterationRecord:
    solution: str
    verdicts: list[Verdict]
    aggregated_feedback: str = ""
    infrastructure_failure: bool = False
    requests: list[list[dict]] = field(default_factory=list)


@dataclass
class RefinementSession:
    problem: str
    max_iterations: int
    consensus: int
    iterations: list[IterationRecord] = field(default_factory=list)
    outcome: str = "exhausted"  # accepted | exhausted
    solution: str | None = None
    model_calls: int = 0


@dataclass
class SamplingRun:
    problem: str
    n_samples: int
    consensus: int
    samples: list[IterationRecord] = field(default_factory=list)
    outcome: str = "exhausted"
    solution: str | None = None
    model_calls: int = 0


OnExchange = Callable[[ChatExchange], None]


def _generation_messages(problem: str, prior: tuple[str, str] | None) -> list[dict]:
    parts = [f"Problem:\n{problem}\n"]
    if prior is not None:
        prior_solution, prior_feedback = prior
        parts.append(f"Your previous solution:\n{prior_solution}\n")
        parts.append(f"Verifier feedback on it:\n{prior_feedback}\n")
        parts.append("Revise the solution so every point of feedback is addressed.")
    parts.append("Write a complete, rigorous solution.")
    return [
        {"role": "system", "content": GENERATOR_SYSTEM},
        {"role": "user", "content": "\n".join(parts)},
    ]


def _verification_messages(problem: str, solution: str) -> list[dict]:
    prompt = (
        f"Problem:\n{problem}\n\n"
        f"Candidate solution:\n{solution}\n\n"
        "Assess the solution's correctness rigorously, step by step. "
        "End your reply with a final line reading exactly "
        "'VERDICT: CORRECT' or 'VERDICT: INCORRECT'."
    )
    return [
        {"role": "system", "content": VERIFIER_SYSTEM},
        {"role": "user", "content": prompt},
    ]


def generate(
    problem: str,
    prior: tuple[str, str] | None,
    client: ChatClient,
    on_exchange: OnExchange | None = None,
) -> str:
    """One generation call; prior solution and feedback ride along verbatim."""
    if not problem.strip():
        raise ValueError("problem statement must be non-empty")
    exchange = client.complete(_generation_messages(problem, prior))
    if on_exchange:
        on_exchange(exchange)
    if not exchange.response.strip():
        raise ProviderError("generator returned an empty solution")
    return exchange.response


def parse_verdict(response: str) -> Verdict:
    """Fail closed: a missing or malformed verdict line is a rejection."""
    lines = [line for line in response.splitlines() if line.strip()]
    if lines:
        match = _VERDICT_RE.match(lines[-1].strip())
        if match:
            passed = match.group(1) == "CORRECT"
            body = "\n".join(lines[:-1]).strip() or (
                "confirmed correct" if passed else "rejected without details"
            )
            return Verdict(passed=passed, feedback=body)
    return Verdict(passed=False, feedback=response.strip() or "empty verifier response")


def verify_consensus(
    problem: str,
    solution: str,
    client: ChatClient,
    passes: int = DEFAULT_CONSENSUS,
    on_exchange: OnExchange | None = None,
) -> tuple[bool, list[Verdict]]:
    """Run ``passes`` independent verifications; accept only if all pass.

    Every pass sends an identical, conversation-free payload.  A provider
    failure fails the whole consensus closed with an infrastructure-flagged
    verdict (never counted as a mathematical rejection).
    """
    if passes < 1:
        raise ValueError("consensus needs at least one pass")
    verdicts: list[Verdict] = []
    for _ in range(passes):
        try:
            exchange = client.complete(_verification_messages(problem, solution))
        except ProviderError as exc:
            verdicts.append(Verdict(
                passed=False,
                feedback=f"verifier call failed: {exc}",
                infrastructure_failure=True,
            ))
            continue
        if on_exchange:
            on_exchange(exchange)
        verdicts.append(parse_verdict(exchange.response))
    accepted = all(v.passed for v in verdicts)
    return accepted, verdicts


def aggregate_feedback(verdicts: list[Verdict], budget: int = DEFAULT_FEEDBACK_BUDGET) -> str:
    """Concatenate failing feedback in verifier order, capped at ``budget`` chars."""
    failing = [v.feedback for v in verdicts if not v.passed and not v.infrastructure_failure]
    joined = "\n---\n".join(failing)
    return joined[:budget]


def refine_loop(
    problem: str,
    client: ChatClient,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    consensus: int = DEFAULT_CONSENSUS,
    feedback_budget: int = DEFAULT_FEEDBACK_BUDGET,
    on_exchange: OnExchange | None = None,
) -> RefinementSession:
    """Generate, verify, fold feedback back in; stop on acceptance or cap."""
    session = RefinementSession(problem=problem, max_iterations=max_iterations,
                                consensus=consensus)
    request_buffer: list[list[dict]] = []

    def track(exchange: ChatExchange) -> None:
        session.model_calls += 1
        request_buffer.append(exchange.request)
        if on_exchange:
            on_exchange(exchange)

    prior: tuple[str, str] | None = None
    for _ in range(max_iterations):
        request_buffer = []
        try:
            solution = generate(problem, prior, client, on_exchange=track)
        except ProviderError as exc:
            session.iterations.append(IterationRecord(
                solution="", verdicts=[], aggregated_feedback=str(exc),
                infrastructure_failure=True, requests=request_buffer,
            ))
            continue
        accepted, verdicts = verify_consensus(
            problem, solution, client, passes=consensus, on_exchange=track
        )
        feedback = aggregate_feedback(verdicts, budget=feedback_budget)
        record = IterationRecord(
            solution=solution,
            verdicts=verdicts,
            aggregated_feedback=feedback,
            infrastructure_failure=any(v.infrastructure_failure for v in verdicts),
            requests=request_buffer,
        )
        session.iterations.append(record)
        if accepted:
            session.outcome = "accepted"
            session.solution = solution
            return session
        prior = (solution, feedback or "verification could not be completed; "
                                       "rework the argument more carefully")
    session.outcome = "exhausted"
    return session


def independent_sampling(
    problem: str,
    client: ChatClient,
    n_samples: int,
    consensus: int = DEFAULT_CONSENSUS,
    on_exchange: OnExchange | None = None,
) -> SamplingRun:
    """Generate each candidate from scratch (no cross-sample context)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    run = SamplingRun(problem=problem, n_samples=n_samples, consensus=consensus)

    def track(exchange: ChatExchange) -> None:
        run.model_calls += 1
        if on_exchange:
            on_exchange(exchange)

    for _ in range(n_samples):
        try:
            solution = generate(problem, None, client, on_exchange=track)
        except ProviderError as exc:
            run.samples.append(IterationRecord(
                solution="", verdicts=[], aggregated_feedback=str(exc),
                infrastructure_failure=True,
            ))
            continue
        accepted, verdicts = verify_consensus(
            problem, solution, client, passes=consensus, on_exchange=track
        )
        run.samples.append(IterationRecord(solution=solution, verdicts=verdicts))
        if accepted:
            run.outcome = "accepted"
            run.solution = solution
            return run
    run.outcome = "exhausted"
    return run


def save_refinement_session(session: RefinementSession, out_dir) -> None:
    """Persist one session for audit and replay: one directory per session,
    per-iteration solution, verdicts and the requests that produced them."""
    import json
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "problem.txt").write_text(session.problem + "\n", encoding="utf-8")
    (out / "outcome.json").write_text(json.dumps({
        "outcome": session.outcome,
        "iterations": len(session.iterations),
        "max_iterations": session.max_iterations,
        "consensus": session.consensus,
        "model_calls": session.model_calls,
    }, indent=2) + "\n", encoding="utf-8")
    for idx, record in enumerate(session.iterations, start=1):
        it_dir = out / f"iteration_{idx:02d}"
        it_dir.mkdir(exist_ok=True)
        (it_dir / "solution.txt").write_text(record.solution + "\n", encoding="utf-8")
        (it_dir / "verdicts.json").write_text(json.dumps([
            {"passed": v.passed, "feedback": v.feedback,
             "infrastructure_failure": v.infrastructure_failure}
            for v in record.verdicts
        ], ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        with (it_dir / "requests.jsonl").open("w", encoding="utf-8") as fh:
            for request in record.requests:
                fh.write(json.dumps(request, ensure_ascii=False) + "\n")


@dataclass
class ComparisonStats:
    """Seeded iterative-vs-sampling comparison at an equal call budget."""

    iterative_success_rate: float
    sampling_success_rate: float
    iterative_rounds_to_success: list[int]
    sampling_rounds_to_success: list[int]

    @property
    def median_iterative_rounds(self) -> float | None:
        rounds = sorted(self.iterative_rounds_to_success)
        if not rounds:
            return None
        mid = len(rounds) // 2
        if len(rounds) % 2:
            return float(rounds[mid])
        return (rounds[mid - 1] + rounds[mid]) / 2


def simulate_comparison(
    q0: float,
    delta: float,
    rounds: int,
    seeds: int,
    consensus: int = DEFAULT_CONSENSUS,
) -> ComparisonStats:
    """Run both strategies over a family of feedback-sensitive mock models.

    One round is one candidate with its full consensus, so both strategies
    spend rounds * (1 + consensus) calls when nothing is accepted early.
    """
    from .providers import FeedbackSensitiveModel

    iter_rounds: list[int] = []
    sample_rounds: list[int] = []
    iter_successes = 0
    sample_successes = 0
    problem = "Bound the quantity from above and determine when equality holds."
    for seed in range(seeds):
        session = refine_loop(
            problem,
            FeedbackSensitiveModel(q0, delta, seed=seed),
            max_iterations=rounds,
            consensus=consensus,
        )
        if session.outcome == "accepted":
            iter_successes += 1
            iter_rounds.append(len(session.iterations))
        run = independent_sampling(
            problem,
            FeedbackSensitiveModel(q0, delta, seed=10_000_000 + seed),
            n_samples=rounds,
            consensus=consensus,
        )
        if run.outcome == "accepted":
            sample_successes += 1
            sample_rounds.append(len(run.samples))
    return ComparisonStats(
        iterative_success_rate=iter_successes / seeds,
        sampling_success_rate=sample_successes / seeds,
        iterative_rounds_to_success=iter_rounds,
        sampling_rounds_to_success=sample_rounds,
    )
