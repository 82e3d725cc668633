"""Provider layer: cost arithmetic, canonical hashing, cassettes, secrets."""

import json
import os

import pytest

from proverkit.orchestrator.budget import Budget
from proverkit.providers import (
    Cassette,
    ChatExchange,
    ModelEndpoint,
    ProviderError,
    ReplayMiss,
    ScriptedClient,
    account,
    canonical_request,
    complete,
    request_hash,
)

ENDPOINT = ModelEndpoint(id="ep", base_url="https://example.invalid", model="m",
                         auth_env="EP_KEY", price_in=0.000002, price_out=0.000006)

MESSAGES = [{"role": "user", "content": "prove it"}]


def fake_transport(response="fine", tokens=(1000, 500)):
    def transport(endpoint, messages):
        return response, tokens[0], tokens[1]

    return transport


def test_cost_arithmetic():
    # 1000 * 0.000002 + 500 * 0.000006 = 0.005
    assert ENDPOINT.cost_of(1000, 500) == pytest.approx(0.005)


def test_prices_must_be_nonnegative():
    with pytest.raises(ValueError):
        ModelEndpoint(id="x", price_in=-1.0)


def test_canonicalization_normalizes_line_endings():
    a = canonical_request(ENDPOINT, [{"role": "user", "content": "a\r\nb"}])
    b = canonical_request(ENDPOINT, [{"role": "user", "content": "a\nb"}])
    assert a == b


def test_hash_depends_on_model_and_temperature():
    other = ModelEndpoint(id="ep", model="m2")
    assert request_hash(ENDPOINT, MESSAGES) != request_hash(other, MESSAGES)
    warm = ModelEndpoint(id="ep", model="m", temperature=0.2)
    assert request_hash(ENDPOINT, MESSAGES) != request_hash(warm, MESSAGES)


def test_record_then_replay_round_trip(tmp_path):
    cassette = Cassette(tmp_path / "c.jsonl", mode="record")
    recorded = complete(ENDPOINT, MESSAGES, cassette,
                        transport=fake_transport("the proof"))
    assert recorded.cost == pytest.approx(0.005)

    replay = Cassette(tmp_path / "c.jsonl", mode="replay")
    replayed = complete(ENDPOINT, MESSAGES, replay, transport=None)
    assert replayed.response == "the proof"
    assert replayed.cost == recorded.cost
    assert replayed.request_hash == recorded.request_hash


def test_replay_miss_is_hard_error_naming_hash(tmp_path):
    cassette = Cassette(tmp_path / "empty.jsonl", mode="replay")
    with pytest.raises(ReplayMiss) as err:
        complete(ENDPOINT, MESSAGES, cassette, transport=None)
    assert request_hash(ENDPOINT, MESSAGES) in str(err.value)


def test_identical_requests_replay_fifo(tmp_path):
    cassette = Cassette(tmp_path / "c.jsonl", mode="record")
    responses = iter(["first", "second", "third"])

    def transport(endpoint, messages):
        return next(responses), 10, 10

    for _ in range(3):
        complete(ENDPOINT, MESSAGES, cassette, transport=transport)

    replay = Cassette(tmp_path / "c.jsonl", mode="replay")
    got = [complete(ENDPOINT, MESSAGES, replay).response for _ in range(3)]
    assert got == ["first", "second", "third"]
    with pytest.raises(ReplayMiss):
        complete(ENDPOINT, MESSAGES, replay)


def test_cassette_is_append_only_and_diffable(tmp_path):
    path = tmp_path / "c.jsonl"
    cassette = Cassette(path, mode="record")
    complete(ENDPOINT, MESSAGES, cassette, transport=fake_transport("one"))
    first = path.read_text()
    complete(ENDPOINT, [{"role": "user", "content": "other"}], cassette,
             transport=fake_transport("two"))
    assert path.read_text().startswith(first)
    for line in path.read_text().splitlines():
        json.loads(line)


def test_secrets_never_reach_cassette(tmp_path, monkeypatch):
    monkeypatch.setenv("EP_KEY", "sk-super-secret-value")
    cassette = Cassette(tmp_path / "c.jsonl", mode="record")
    complete(ENDPOINT, MESSAGES, cassette, transport=fake_transport())
    assert "sk-super-secret-value" not in (tmp_path / "c.jsonl").read_text()


def test_retries_then_surface_error(tmp_path):
    attempts = []

    def flaky(endpoint, messages):
        attempts.append(1)
        raise ConnectionError("down")

    with pytest.raises(ProviderError, match="after 3 attempts"):
        complete(ENDPOINT, MESSAGES, None, retries=3, backoff=0.0, transport=flaky)
    assert len(attempts) == 3


def test_retry_recovers(tmp_path):
    calls = []

    def flaky_then_fine(endpoint, messages):
        calls.append(1)
        if len(calls) < 2:
            raise ConnectionError("blip")
        return "ok", 5, 5

    exchange = complete(ENDPOINT, MESSAGES, None, retries=3, backoff=0.0,
                        transport=flaky_then_fine)
    assert exchange.response == "ok"


def test_account_delegates_to_budget():
    budget = Budget(limit=50.0)
    exchange = ChatExchange(endpoint_id="ep", request=MESSAGES, response="r",
                            input_tokens=10, output_tokens=10, cost=1.0,
                            request_hash="h")
    for _ in range(3):
        assert account(budget, exchange) == "ok"
    assert budget.spent == 3.0
    assert budget.call_counts == {"ep": 3}


def test_account_zero_cost_replay():
    budget = Budget(limit=50.0)
    exchange = ChatExchange(endpoint_id="ep", request=MESSAGES, response="r",
                            input_tokens=0, output_tokens=0, cost=0.0,
                            request_hash="h")
    account(budget, exchange)
    assert budget.spent == 0.0
    assert budget.call_counts == {"ep": 1}


def test_live_call_requires_auth_env(monkeypatch):
    monkeypatch.delenv("EP_KEY", raising=False)
    from proverkit.providers import _http_chat_call

    with pytest.raises(ProviderError, match="EP_KEY"):
        _http_chat_call(ENDPOINT, MESSAGES)


def test_endpoint_client_binds_cassette(tmp_path):
    from proverkit.providers import EndpointClient

    record = Cassette(tmp_path / "c.jsonl", mode="record")
    complete(ENDPOINT, MESSAGES, record, transport=fake_transport("bound"))
    client = EndpointClient(ENDPOINT, Cassette(tmp_path / "c.jsonl", mode="replay"))
    assert client.complete(MESSAGES).response == "bound"


def test_live_mode_never_records(tmp_path):
    cassette = Cassette(tmp_path / "c.jsonl", mode="live")
    exchange = complete(ENDPOINT, MESSAGES, cassette, transport=fake_transport("x"))
    assert exchange.response == "x"
    assert not (tmp_path / "c.jsonl").exists()


def test_scripted_client_replays_in_order():
    client = ScriptedClient(["a", "b"], cost_per_call=0.5)
    assert client.complete(MESSAGES).response == "a"
    assert client.complete(MESSAGES).response == "b"
    assert client.complete(MESSAGES).response == "b"  # sticks on last
    assert client.complete(MESSAGES).cost == 0.5
