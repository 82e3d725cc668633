"""Blueprint status resolution against the fixture project."""

from dataclasses import replace

import pytest

from conftest import FIXTURES, make_mock_bridge
from proverkit.blueprint import parse_blueprint, status_report
from proverkit.blueprint.status import STATUS_UNKNOWN

STATUSPROJ = FIXTURES / "statusproj"


@pytest.fixture(scope="module")
def graph():
    return parse_blueprint(
        (FIXTURES / "blueprints" / "band.tex").read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def bridge():
    with make_mock_bridge(STATUSPROJ) as b:
        yield b


def test_fixture_statuses(graph, bridge):
    statuses, findings = status_report(graph, STATUSPROJ, bridge)
    assert statuses == {
        "d:horizon": "proved",
        "l:lower": "proved",
        "l:upper": "sorried",  # direct sorry
        "t:main": "sorried",  # transitively references upper_bound
    }
    assert findings == []


def test_node_without_lean_name_is_unstated(graph, bridge):
    node = replace(graph.node("l:lower"), lean_name=None, status="unstated")
    modified = graph.replace_nodes({"l:lower": node})
    statuses, findings = status_report(modified, STATUSPROJ, bridge)
    assert statuses["l:lower"] == "unstated"
    assert findings == []


def test_missing_declaration_is_unstated_with_finding(graph, bridge):
    node = replace(graph.node("l:lower"), lean_name="Toy.ghost_bound")
    modified = graph.replace_nodes({"l:lower": node})
    statuses, findings = status_report(modified, STATUSPROJ, bridge)
    assert statuses["l:lower"] == "unstated"
    assert any("Toy.ghost_bound" in f.message for f in findings)


def test_bridge_failure_degrades_to_unknown(graph):
    class BrokenBridge:
        def diagnostics(self, path):
            raise RuntimeError("server unavailable")

    statuses, findings = status_report(graph, STATUSPROJ, BrokenBridge())
    # nodes with declarations present degrade to unknown, never crash
    assert statuses["l:lower"] == STATUS_UNKNOWN
    assert statuses["l:upper"] == STATUS_UNKNOWN
    assert statuses["d:horizon"] == STATUS_UNKNOWN
