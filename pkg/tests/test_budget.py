"""Budget hard-stop behavior."""

import pytest
from hypothesis import given, settings, strategies as st

from proverkit.orchestrator.budget import Budget, CostEvent, enforce_budget


def test_debits_under_limit_all_ok():
    budget = Budget(limit=50.0)
    for cost in (10.0, 20.0, 19.99):
        assert enforce_budget(budget, CostEvent("m", cost)) == "ok"
    assert budget.spent == pytest.approx(49.99)
    assert not budget.exhausted


def test_boundary_debit_refused_and_spent_untouched():
    budget = Budget(limit=50.0, spent=49.99)
    assert enforce_budget(budget, CostEvent("m", 0.02)) == "exhausted"
    assert budget.spent == 49.99
    assert budget.exhausted


def test_exact_fit_is_allowed():
    budget = Budget(limit=50.0)
    assert enforce_budget(budget, CostEvent("m", 50.0)) == "ok"
    assert budget.spent == 50.0


def test_zero_limit_exhausts_on_first_nonzero_event():
    budget = Budget(limit=0.0)
    assert enforce_budget(budget, CostEvent("m", 0.01)) == "exhausted"
    assert budget.spent == 0.0


def test_zero_cost_event_increments_tallies_only():
    budget = Budget(limit=50.0)
    assert enforce_budget(budget, CostEvent("replay", 0.0)) == "ok"
    assert budget.spent == 0.0
    assert budget.call_counts == {"replay": 1}


def test_exhaustion_is_terminal():
    budget = Budget(limit=1.0)
    enforce_budget(budget, CostEvent("m", 2.0))
    assert budget.exhausted
    assert enforce_budget(budget, CostEvent("m", 0.0)) == "exhausted"
    assert budget.call_counts == {}


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        CostEvent("m", -1.0)


def test_spent_is_sum_of_recorded_events():
    budget = Budget(limit=100.0)
    costs = [1.5, 2.25, 0.0, 96.25]
    for cost in costs:
        enforce_budget(budget, CostEvent("m", cost))
    assert budget.spent == sum(e.cost for e in budget.events)
    assert budget.spent == pytest.approx(100.0)


@given(
    limit=st.sampled_from([0.0, 50.0, 300.0, 1000.0]),
    costs=st.lists(st.floats(min_value=0.0, max_value=120.0,
                             allow_nan=False, allow_infinity=False),
                   max_size=200),
)
@settings(max_examples=150, deadline=None)
def test_fuzzed_streams_never_exceed_limit(limit, costs):
    budget = Budget(limit=limit)
    for cost in costs:
        enforce_budget(budget, CostEvent("m", cost))
        assert budget.spent <= budget.limit
    assert budget.spent == sum(e.cost for e in budget.events)
