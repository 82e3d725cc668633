"""Blueprint parsing, validation, ordering and refinement edits."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from proverkit.blueprint import (
    BlueprintGraph,
    BlueprintNode,
    BlueprintParseError,
    EditError,
    RefinementEdit,
    apply_edit,
    parse_blueprint,
    proving_order,
    serialize_blueprint,
    validate,
)
from proverkit.blueprint.model import STATUS_PROVED, STATUS_STATED


def test_parse_fixture(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    assert len(graph.nodes) == 4
    assert graph.root == "t:main"
    assert graph.node("t:main").uses == ("l:lower", "l:upper")
    assert graph.node("l:lower").uses == ("d:horizon",)
    edge_count = sum(len(n.uses) for n in graph.nodes.values())
    assert edge_count == 4
    assert graph.node("d:horizon").status == STATUS_PROVED  # \lean + \leanok
    assert graph.node("l:lower").status == STATUS_STATED  # \lean only


def test_parse_empty_document_needs_root():
    with pytest.raises(BlueprintParseError, match="no root theorem"):
        parse_blueprint("just prose, no environments\n")


def test_parse_duplicate_label_names_both_locations():
    doc = """\\begin{lemma}
\\label{l:a}
first
\\end{lemma}
\\begin{theorem}
\\label{l:a}
second
\\end{theorem}
"""
    with pytest.raises(BlueprintParseError, match="line 6.*first defined at line 2"):
        parse_blueprint(doc)


def test_parse_malformed_uses_has_line_number():
    doc = """\\begin{theorem}
\\label{t}
\\uses{a,, b}
text
\\end{theorem}
"""
    with pytest.raises(BlueprintParseError, match="line 3"):
        parse_blueprint(doc)


def test_dangling_use_is_validation_finding(blueprint_text):
    doc = blueprint_text.replace("\\uses{l:lower, l:upper}",
                                 "\\uses{l:lower, l:missing}")
    graph = parse_blueprint(doc)
    findings = validate(graph)
    assert any(f.kind == "dangling" and "l:missing" in f.message for f in findings)


def test_validate_clean_fixture(blueprint_text):
    assert validate(parse_blueprint(blueprint_text)) == []


def _node(nid, uses=(), kind="lemma", order=0, status="unstated", lean=None):
    return BlueprintNode(id=nid, kind=kind, statement=f"statement {nid}",
                        lean_name=lean, uses=tuple(uses), status=status,
                        doc_order=order)


def _graph(nodes, root):
    return BlueprintGraph(nodes={n.id: n for n in nodes}, root=root)


def test_cycle_reported_with_witness():
    graph = _graph([
        _node("A", uses=["B"], order=0),
        _node("B", uses=["A"], order=1),
        _node("T", uses=["A"], kind="theorem", order=2),
    ], root="T")
    findings = validate(graph)
    cycles = [f for f in findings if f.kind == "cycle"]
    assert len(cycles) == 1
    assert set(cycles[0].nodes) == {"A", "B"}


def test_unreachable_node_flagged():
    graph = _graph([
        _node("T", kind="theorem", order=0),
        _node("island", order=1),
    ], root="T")
    findings = validate(graph)
    assert any(f.kind == "unreachable" and f.nodes == ("island",) for f in findings)


def test_missing_root_flagged():
    graph = _graph([_node("L", order=0)], root="T")
    assert any(f.kind == "missing_root" for f in validate(graph))


def test_proving_order_fixture(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    order = proving_order(graph)
    assert order == ["d:horizon", "l:lower", "l:upper", "t:main"]


def test_proving_order_single_node():
    graph = _graph([_node("T", kind="theorem")], root="T")
    assert proving_order(graph) == ["T"]


def test_proving_order_chain_is_forced():
    nodes = [_node("T", uses=["d"], kind="theorem", order=0)]
    prev = "T"
    for i, nid in enumerate(("d", "c", "b", "a")):
        uses = [chr(ord(nid[0]) - 1)] if nid != "a" else []
        nodes.append(_node(nid, uses=uses, order=i + 1))
    graph = _graph(nodes, root="T")
    assert proving_order(graph) == ["a", "b", "c", "d", "T"]


def test_proving_order_rejects_invalid_graph():
    graph = _graph([
        _node("A", uses=["B"]), _node("B", uses=["A"]),
        _node("T", uses=["A"], kind="theorem"),
    ], root="T")
    with pytest.raises(ValueError):
        proving_order(graph)


def test_insert_lemma_rewires_target(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    edit = RefinementEdit(kind="insert_lemma", target="t:main", payload={
        "id": "l:glue", "statement": "The two bounds are compatible.",
        "uses": ["l:lower"],
    })
    updated = apply_edit(graph, edit)
    assert "l:glue" in updated.node("t:main").uses
    order = proving_order(updated)
    assert order.index("l:glue") < order.index("t:main")
    # original untouched
    assert "l:glue" not in graph.nodes


def test_strengthen_downgrades_status(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    graph = graph.replace_nodes({
        "l:upper": graph.node("l:upper").with_status(STATUS_PROVED)})
    edit = RefinementEdit(kind="strengthen_assumptions", target="l:upper", payload={
        "statement": "Assuming the band is nonempty, the value never exceeds "
                     "twice the horizon.",
    })
    updated = apply_edit(graph, edit)
    assert updated.node("l:upper").status == STATUS_STATED
    assert "nonempty" in updated.node("l:upper").statement


def test_restate_unstated_node_stays_unstated():
    graph = _graph([
        _node("T", uses=["L"], kind="theorem", order=0),
        _node("L", order=1),
    ], root="T")
    updated = apply_edit(graph, RefinementEdit(
        kind="restate", target="L", payload={"statement": "sharper form"}))
    assert updated.node("L").status == "unstated"


def test_edit_creating_cycle_rejected_and_graph_unchanged(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    edit = RefinementEdit(kind="insert_lemma", target="l:lower", payload={
        "id": "l:circular", "statement": "cyclic", "uses": ["t:main"],
    })
    with pytest.raises(EditError):
        apply_edit(graph, edit)
    assert "l:circular" not in graph.nodes
    assert validate(graph) == []


def test_split_preserves_edges(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    edit = RefinementEdit(kind="split", target="l:upper", payload={"nodes": [
        {"id": "l:upper_a", "statement": "bound below twice", "uses": ["d:horizon"]},
        {"id": "l:upper_b", "statement": "bound is tight", "uses": []},
    ]})
    updated = apply_edit(graph, edit)
    assert "l:upper" not in updated.nodes
    assert set(updated.node("t:main").uses) == {"l:lower", "l:upper_a", "l:upper_b"}
    assert validate(updated) == []


def test_split_that_would_orphan_rejected(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    edit = RefinementEdit(kind="split", target="l:upper", payload={"nodes": [
        {"id": "a", "statement": "x", "uses": ["d:horizon"]},
        {"id": "b", "statement": "y", "uses": ["l:ghost"]},
    ]})
    with pytest.raises(EditError):
        apply_edit(graph, edit)


def test_structured_dict_roundtrip(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    data = graph.to_dict()
    assert data["root"] == "t:main"
    assert [n["id"] for n in data["nodes"]] == \
           ["d:horizon", "l:lower", "l:upper", "t:main"]
    rebuilt = BlueprintGraph.from_dict(data)
    assert rebuilt.root == graph.root
    for nid, node in graph.nodes.items():
        other = rebuilt.node(nid)
        assert (other.kind, other.statement, other.lean_name, other.uses,
                other.status) == (node.kind, node.statement, node.lean_name,
                                  node.uses, node.status)


def test_roundtrip_fixture(blueprint_text):
    graph = parse_blueprint(blueprint_text)
    reparsed = parse_blueprint(serialize_blueprint(graph))
    assert reparsed.root == graph.root
    assert set(reparsed.nodes) == set(graph.nodes)
    for nid, node in graph.nodes.items():
        other = reparsed.node(nid)
        assert (other.kind, other.statement, other.lean_name, other.uses) == \
               (node.kind, node.statement, node.lean_name, node.uses)


# -- randomized properties (small versions; the acceptance suite scales up) --


def random_dag(rng, n):
    nodes = []
    for i in range(n):
        uses = [f"n{j}" for j in range(i) if rng.random() < 0.3]
        kind = "theorem" if i == n - 1 else "lemma"
        nodes.append(_node(f"n{i}", uses=uses, kind=kind, order=i))
    # root must reach everything: wire unreferenced nodes into the root
    referenced = {u for node in nodes for u in node.uses}
    root = nodes[-1]
    extra = [f"n{j}" for j in range(n - 1)
             if f"n{j}" not in referenced and f"n{j}" not in root.uses]
    nodes[-1] = _node(root.id, uses=list(root.uses) + extra, kind="theorem",
                     order=root.doc_order)
    return _graph(nodes, root=root.id)


def brute_force_has_cycle(graph):
    """Path-enumeration oracle: is any node reachable from itself?"""

    def reachable(start):
        seen, frontier = set(), [start]
        while frontier:
            cur = frontier.pop()
            for dep in graph.nodes[cur].uses:
                if dep == start:
                    return True
                if dep in graph.nodes and dep not in seen:
                    seen.add(dep)
                    frontier.append(dep)
        return False

    return any(reachable(nid) for nid in graph.nodes)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_cycle_detection_matches_brute_force(seed):
    rng = random.Random(seed)
    graph = random_dag(rng, rng.randint(2, 12))
    if rng.random() < 0.5 and len(graph.nodes) > 2:
        # inject one random back edge
        ids = sorted(graph.nodes)
        a, b = rng.sample(ids, 2)
        lo, hi = (a, b) if graph.nodes[a].doc_order < graph.nodes[b].doc_order else (b, a)
        node = graph.nodes[lo]
        graph = graph.replace_nodes({
            lo: _node(node.id, uses=list(node.uses) + [hi], kind=node.kind,
                     order=node.doc_order)})
    found_cycle = any(f.kind == "cycle" for f in validate(graph))
    assert found_cycle == brute_force_has_cycle(graph)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_proving_order_respects_all_edges(seed):
    rng = random.Random(seed)
    graph = random_dag(rng, rng.randint(1, 12))
    if validate(graph):
        return
    order = proving_order(graph)
    position = {nid: i for i, nid in enumerate(order)}
    assert sorted(order) == sorted(graph.nodes)  # permutation of reachable set
    for node in graph.nodes.values():
        for dep in node.uses:
            assert position[dep] < position[node.id]
