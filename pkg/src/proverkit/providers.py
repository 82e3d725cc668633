"""Chat-completion providers with cost accounting and record/replay.

Every model exchange flows through ``complete``: in replay mode the
response comes from a cassette keyed by a canonical request hash, in
record mode a live call is made and appended to the cassette, and live
mode calls without recording.  Tests run exclusively on replay or on the
deterministic mock clients at the bottom of this module, so the suite
never needs network access or API keys.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Protocol

if TYPE_CHECKING:
    from .orchestrator.budget import Budget

Message = dict  # {"role": ..., "content": ...}


class ProviderError(RuntimeError):
    pass


class ReplayMiss(ProviderError):
    """A replay lookup found no recorded exchange; tests must never go live."""

    def __init__(self, request_hash: str):
        super().__init__(
            f"no recorded exchange for request hash {request_hash}; "
            "refusing to fall through to a live call in replay mode"
        )
        self.request_hash = request_hash


@dataclass(frozen=True)
class ModelEndpoint:
    """One reachable chat model; auth is an environment variable *name*."""

    id: str
    base_url: str = ""
    model: str = ""
    auth_env: str = ""
    price_in: float = 0.0  # units per input token
    price_out: float = 0.0  # units per output token
    timeout: float = 120.0
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.price_in < 0 or self.price_out < 0:
            raise ValueError("prices must be non-negative")

    def cost_of(self, input_tokens: int, output_tokens: int) -> float:
        return input_tokens * self.price_in + output_tokens * self.price_out


@dataclass
class ChatExchange:
    endpoint_id: str
    request: list[Message]
    response: str
    input_tokens: int
    output_tokens: int
    cost: float
    request_hash: str


def canonical_request(endpoint: ModelEndpoint, messages: list[Message]) -> str:
    """Stable serialization of a request for cassette keying.

    Field order is fixed, line endings are normalized, and the model and
    temperature are part of the key so a config change invalidates hits.
    """
    normalized = [
        {"role": m["role"], "content": str(m["content"]).replace("\r\n", "\n")}
        for m in messages
    ]
    payload = {
        "model": endpoint.model or endpoint.id,
        "temperature": endpoint.temperature,
        "messages": normalized,
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def request_hash(endpoint: ModelEndpoint, messages: list[Message]) -> str:
    return hashlib.sha256(canonical_request(endpoint, messages).encode("utf-8")).hexdigest()


class Cassette:
    """Append-only JSONL store of exchanges, replayed FIFO per request hash.

    Identical requests (e.g. independent verification passes) record one
    line each and replay in recording order.  Recorded lines are never
    rewritten.
    """

    def __init__(self, path: Path, mode: str = "replay"):
        if mode not in ("record", "replay", "live"):
            raise ValueError(f"unknown cassette mode: {mode}")
        self.path = Path(path)
        self.mode = mode
        self._queues: dict[str, list[dict]] = {}
        if mode == "replay":
            self._load()

    def _load(self) -> None:
        if not self.path.exists():
            return
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            self._queues.setdefault(entry["hash"], []).append(entry)

    def lookup(self, key: str) -> dict:
        queue = self._queues.get(key)
        if not queue:
            raise ReplayMiss(key)
        return queue.pop(0)

    def append(self, exchange: ChatExchange) -> None:
        entry = {
            "hash": exchange.request_hash,
            "endpoint": exchange.endpoint_id,
            "request": exchange.request,
            "response": exchange.response,
            "input_tokens": exchange.input_tokens,
            "output_tokens": exchange.output_tokens,
            "cost": exchange.cost,
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


def _http_chat_call(endpoint: ModelEndpoint, messages: list[Message]) -> tuple[str, int, int]:
    """POST an OpenAI-style chat completion; returns (text, tokens in, out)."""
    import requests

    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env:
        key = os.environ.get(endpoint.auth_env, "")
        if not key:
            raise ProviderError(
                f"endpoint {endpoint.id}: auth variable {endpoint.auth_env} is not set"
            )
        headers["Authorization"] = f"Bearer {key}"
    resp = requests.post(
        endpoint.base_url.rstrip("/") + "/chat/completions",
        json={
            "model": endpoint.model,
            "messages": messages,
            "temperature": endpoint.temperature,
        },
        headers=headers,
        timeout=endpoint.timeout,
    )
    resp.raise_for_status()
    data = resp.json()
    text = data["choices"][0]["message"]["content"]
    usage = data.get("usage", {})
    return text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))


def complete(
    endpoint: ModelEndpoint,
    messages: list[Message],
    cassette: Cassette | None = None,
    retries: int = 3,
    backoff: float = 1.0,
    transport: Callable[[ModelEndpoint, list[Message]], tuple[str, int, int]] = _http_chat_call,
) -> ChatExchange:
    """One chat completion through the cassette policy.

    Replay misses are hard errors.  Transport failures in record/live mode
    retry with exponential backoff before surfacing.
    """
    key = request_hash(endpoint, messages)
    if cassette is not None and cassette.mode == "replay":
        entry = cassette.lookup(key)
        return ChatExchange(
            endpoint_id=entry["endpoint"],
            request=messages,
            response=entry["response"],
            input_tokens=entry["input_tokens"],
            output_tokens=entry["output_tokens"],
            cost=entry["cost"],
            request_hash=key,
        )

    last_error: Exception | None = None
    for attempt in range(retries):
        try:
            text, tokens_in, tokens_out = transport(endpoint, messages)
            break
        except Exception as exc:
            last_error = exc
            if attempt + 1 < retries:
                time.sleep(backoff * (2 ** attempt))
    else:
        raise ProviderError(f"endpoint {endpoint.id} failed after {retries} attempts: {last_error}")

    exchange = ChatExchange(
        endpoint_id=endpoint.id,
        request=messages,
        response=text,
        input_tokens=tokens_in,
        output_tokens=tokens_out,
        cost=endpoint.cost_of(tokens_in, tokens_out),
        request_hash=key,
    )
    if cassette is not None and cassette.mode == "record":
        cassette.append(exchange)
    return exchange


def account(budget: "Budget", exchange: ChatExchange, timestamp: float = 0.0) -> str:
    """Debit one exchange against a session budget; returns "ok"/"exhausted"."""
    from .orchestrator.budget import CostEvent, enforce_budget

    event = CostEvent(
        endpoint=exchange.endpoint_id,
        cost=exchange.cost,
        input_tokens=exchange.input_tokens,
        output_tokens=exchange.output_tokens,
        timestamp=timestamp,
    )
    return enforce_budget(budget, event)


class ChatClient(Protocol):
    """Anything that can answer a message list with a ChatExchange."""

    def complete(self, messages: list[Message]) -> ChatExchange: ...


@dataclass
class EndpointClient:
    """Binds an endpoint to a cassette so call sites stay one-liner simple."""

    endpoint: ModelEndpoint
    cassette: Cassette | None = None

    def complete(self, messages: list[Message]) -> ChatExchange:
        return complete(self.endpoint, messages, self.cassette)


# ---------------------------------------------------------------------------
# Deterministic mock backends.  These are part of the shipped toolkit: the
# orchestration stack is exercised offline by driving it with these clients.
# ---------------------------------------------------------------------------


def _mock_exchange(endpoint_id: str, messages: list[Message], response: str,
                   cost: float = 0.0) -> ChatExchange:
    return ChatExchange(
        endpoint_id=endpoint_id,
        request=messages,
        response=response,
        input_tokens=sum(len(str(m["content"]).split()) for m in messages),
        output_tokens=len(response.split()),
        cost=cost,
        request_hash=request_hash(ModelEndpoint(id=endpoint_id), messages),
    )


@dataclass
class ScriptedClient:
    """Replays a fixed list of responses in order; loops on the last one."""

    responses: list[str]
    endpoint_id: str = "mock:scripted"
    cost_per_call: float = 0.0
    calls: list[list[Message]] = field(default_factory=list)

    def complete(self, messages: list[Message]) -> ChatExchange:
        self.calls.append(messages)
        idx = min(len(self.calls) - 1, len(self.responses) - 1)
        if idx < 0:
            raise ProviderError("scripted client has no responses")
        return _mock_exchange(self.endpoint_id, messages, self.responses[idx],
                              self.cost_per_call)


class IndependentPassVerifier:
    """Verifier whose passes succeed independently with probability p.

    Used to measure all-pass consensus acceptance against the analytic
    p**passes rate.  Generation requests return a fixed solution.
    """

    def __init__(self, p: float, seed: int = 0, endpoint_id: str = "mock:iid-verifier"):
        self.p = p
        self.rng = random.Random(seed)
        self.endpoint_id = endpoint_id

    def complete(self, messages: list[Message]) -> ChatExchange:
        prompt = messages[-1]["content"]
        if "VERDICT" in prompt:
            if self.rng.random() < self.p:
                response = "Checked the argument line by line.\nVERDICT: CORRECT"
            else:
                response = "Step 3 does not follow from step 2.\nVERDICT: INCORRECT"
        else:
            response = "Proposed solution: expand, regroup, and bound the remainder."
        return _mock_exchange(self.endpoint_id, messages, response)


class FeedbackSensitiveModel:
    """Generator/verifier pair whose solution quality grows with feedback.

    A freshly generated solution is correct with probability q0; each
    round of verifier feedback folded into the next generation raises the
    probability by delta (capped at 1).  The verifier is a perfect judge
    of the mock's hidden correctness bit, so acceptance mirrors solution
    quality, not verifier noise.  Independent sampling never sees
    feedback, so its per-sample probability stays at q0.
    """

    def __init__(self, q0: float, delta: float, seed: int = 0,
                 endpoint_id: str = "mock:feedback"):
        self.q0 = q0
        self.delta = delta
        self.rng = random.Random(seed)
        self.endpoint_id = endpoint_id

    _DEPTH_RE = re.compile(r"\[refinement-depth: (\d+)\]")

    def complete(self, messages: list[Message]) -> ChatExchange:
        prompt = messages[-1]["content"]
        if "VERDICT" in prompt:
            if "[solution-state: correct]" in prompt:
                response = "The argument is complete.\nVERDICT: CORRECT"
            else:
                response = ("The key inequality in the middle step is not justified; "
                            "tighten the bound.\nVERDICT: INCORRECT")
            return _mock_exchange(self.endpoint_id, messages, response)
        # A prior solution in the prompt carries its own depth; feedback on
        # it makes this generation one round deeper.
        depths = [int(d) for d in self._DEPTH_RE.findall(prompt)]
        rounds = max(depths) + 1 if depths else 0
        q = min(self.q0 + self.delta * rounds, 1.0)
        correct = self.rng.random() < q
        state = "correct" if correct else "flawed"
        response = (
            f"Detailed candidate solution after {rounds} feedback rounds.\n"
            f"[refinement-depth: {rounds}]\n"
            f"[solution-state: {state}]"
        )
        return _mock_exchange(self.endpoint_id, messages, response)
