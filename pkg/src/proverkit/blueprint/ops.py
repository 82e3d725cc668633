"""Graph operations: validation, proving order, refinement edits."""

from __future__ import annotations

from dataclasses import replace

from .model import (
    STATUS_STATED,
    STATUS_UNSTATED,
    BlueprintGraph,
    BlueprintNode,
    Finding,
    RefinementEdit,
)


class EditError(ValueError):
    """Edit rejected; carries the findings that made the result ill-formed."""

    def __init__(self, message: str, findings: list[Finding] | None = None):
        super().__init__(message)
        self.findings = findings or []


def validate(graph: BlueprintGraph) -> list[Finding]:
    """Report cycles, dangling uses, unreachable nodes and a missing root.

    An empty list means the graph is well-formed.
    """
    findings: list[Finding] = []

    root_node = graph.nodes.get(graph.root)
    if root_node is None:
        findings.append(Finding("missing_root", f"root {graph.root!r} not in graph"))
    elif root_node.kind != "theorem":
        findings.append(Finding(
            "missing_root", f"root {graph.root!r} has kind {root_node.kind}, not theorem"
        ))

    for node in graph.in_document_order():
        for dep in node.uses:
            if dep not in graph.nodes:
                findings.append(Finding(
                    "dangling", f"{node.id} uses unknown node {dep!r}", (node.id, dep)
                ))

    cycle = _find_cycle(graph)
    if cycle:
        findings.append(Finding(
            "cycle", "dependency cycle: " + " -> ".join(cycle + [cycle[0]]), tuple(cycle)
        ))

    if root_node is not None and not cycle:
        reachable = _reachable_from(graph, graph.root)
        for node in graph.in_document_order():
            if node.id not in reachable:
                findings.append(Finding(
                    "unreachable", f"{node.id} is not reachable from root", (node.id,)
                ))

    return findings


def _find_cycle(graph: BlueprintGraph) -> list[str] | None:
    """Iterative DFS returning one witness cycle as a node list, or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node_id: WHITE for node_id in graph.nodes}
    parent: dict[str, str] = {}
    for start in graph.nodes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node_id, edge_idx = stack[-1]
            deps = [d for d in graph.nodes[node_id].uses if d in graph.nodes]
            if edge_idx < len(deps):
                stack[-1] = (node_id, edge_idx + 1)
                dep = deps[edge_idx]
                if color[dep] == GREY:
                    # unwind the grey path from node_id back to dep
                    cycle = [node_id]
                    cur = node_id
                    while cur != dep:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle
                if color[dep] == WHITE:
                    color[dep] = GREY
                    parent[dep] = node_id
                    stack.append((dep, 0))
            else:
                color[node_id] = BLACK
                stack.pop()
    return None


def _reachable_from(graph: BlueprintGraph, start: str) -> set[str]:
    seen = {start}
    frontier = [start]
    while frontier:
        node_id = frontier.pop()
        for dep in graph.nodes[node_id].uses:
            if dep in graph.nodes and dep not in seen:
                seen.add(dep)
                frontier.append(dep)
    return seen


def proving_order(graph: BlueprintGraph) -> list[str]:
    """Topological order of the nodes reachable from the root.

    Every node appears after everything it uses; among ready nodes,
    document order breaks ties.  The graph must validate cleanly first.
    """
    findings = validate(graph)
    if findings:
        raise ValueError(f"graph does not validate: {findings[0].message}")
    reachable = _reachable_from(graph, graph.root)
    pending = {
        node_id: {d for d in graph.nodes[node_id].uses if d in reachable}
        for node_id in reachable
    }
    by_doc = sorted(reachable, key=lambda nid: graph.nodes[nid].doc_order)
    order: list[str] = []
    done: set[str] = set()
    while len(order) < len(reachable):
        progressed = False
        for node_id in by_doc:
            if node_id in done:
                continue
            if pending[node_id] <= done:
                order.append(node_id)
                done.add(node_id)
                progressed = True
        if not progressed:  # unreachable given acyclicity, kept as a guard
            raise ValueError("no topological order exists")
    return order


def apply_edit(graph: BlueprintGraph, edit: RefinementEdit) -> BlueprintGraph:
    """Apply a refinement edit, returning a new graph.

    The result must validate; an edit that would introduce a cycle or a
    dangling reference is rejected and the original graph is unchanged.
    Statement-changing edits downgrade the touched node to stated at best.
    """
    if edit.kind == "insert_lemma":
        new_graph = _insert_lemma(graph, edit)
    elif edit.kind in ("restate", "strengthen_assumptions"):
        new_graph = _restate(graph, edit)
    elif edit.kind == "split":
        new_graph = _split(graph, edit)
    else:  # unreachable: RefinementEdit validates its kind
        raise EditError(f"unknown edit kind: {edit.kind}")

    findings = validate(new_graph)
    if findings:
        raise EditError(
            f"edit rejected, result does not validate: {findings[0].message}", findings
        )
    return new_graph


def _require_target(graph: BlueprintGraph, edit: RefinementEdit) -> BlueprintNode:
    node = graph.nodes.get(edit.target)
    if node is None:
        raise EditError(f"edit target {edit.target!r} not in graph")
    return node


def _next_doc_order(graph: BlueprintGraph) -> int:
    return 1 + max((n.doc_order for n in graph.nodes.values()), default=-1)


def _node_from_payload(payload: dict, doc_order: int, default_kind: str = "lemma") -> BlueprintNode:
    node_id = payload.get("id")
    if not node_id:
        raise EditError("edit payload needs a node id")
    status = STATUS_STATED if payload.get("lean_name") else STATUS_UNSTATED
    return BlueprintNode(
        id=node_id,
        kind=payload.get("kind", default_kind),
        statement=payload.get("statement", ""),
        lean_name=payload.get("lean_name"),
        uses=tuple(payload.get("uses", ())),
        status=status,
        doc_order=doc_order,
    )


def _insert_lemma(graph: BlueprintGraph, edit: RefinementEdit) -> BlueprintGraph:
    target = _require_target(graph, edit)
    new_node = _node_from_payload(edit.payload, _next_doc_order(graph))
    if new_node.id in graph.nodes:
        raise EditError(f"node id {new_node.id!r} already exists")
    updated_target = replace(target, uses=target.uses + (new_node.id,))
    return graph.replace_nodes({new_node.id: new_node, target.id: updated_target})


def _restate(graph: BlueprintGraph, edit: RefinementEdit) -> BlueprintGraph:
    target = _require_target(graph, edit)
    statement = edit.payload.get("statement")
    if not statement:
        raise EditError("restate edit needs a new statement")
    updated = replace(target, statement=statement).downgraded()
    return graph.replace_nodes({target.id: updated})


def _split(graph: BlueprintGraph, edit: RefinementEdit) -> BlueprintGraph:
    target = _require_target(graph, edit)
    payload_nodes = edit.payload.get("nodes", [])
    if len(payload_nodes) < 2:
        raise EditError("split needs at least two replacement nodes")
    if target.id == graph.root:
        raise EditError("cannot split the root theorem")
    base_order = _next_doc_order(graph)
    new_nodes = [
        _node_from_payload(p, base_order + i, default_kind=target.kind)
        for i, p in enumerate(payload_nodes)
    ]
    new_ids = [n.id for n in new_nodes]
    if len(set(new_ids)) != len(new_ids):
        raise EditError("split nodes must have distinct ids")
    for node in new_nodes:
        if node.id != target.id and node.id in graph.nodes:
            raise EditError(f"node id {node.id!r} already exists")
    external_uses = {u for n in new_nodes for u in n.uses if u not in new_ids}
    if external_uses != set(target.uses):
        raise EditError("split must preserve the union of the target's outgoing edges")

    changes: dict[str, BlueprintNode | None] = {target.id: None}
    for node in new_nodes:
        changes[node.id] = node
    # Every former dependent now uses all replacement nodes.
    for dep_id in graph.dependents_of(target.id):
        dependent = graph.nodes[dep_id]
        rewired = tuple(u for u in dependent.uses if u != target.id) + tuple(new_ids)
        changes[dep_id] = replace(dependent, uses=rewired)
    return graph.replace_nodes(changes)
