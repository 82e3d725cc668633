"""Blueprint data model: nodes, the dependency graph, refinement edits.

Graphs are immutable values; operations that change a graph return a new
one.  A node's ``uses`` list records which other nodes its statement or
proof depends on, forming a DAG that fixes proving order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

NODE_KINDS = ("definition", "lemma", "theorem")

# Proving-status lattice, low to high.  Edits never raise a status.
STATUS_UNSTATED = "unstated"
STATUS_STATED = "stated"
STATUS_SORRIED = "sorried"
STATUS_PROVED = "proved"
STATUS_ORDER = {
    STATUS_UNSTATED: 0,
    STATUS_STATED: 1,
    STATUS_SORRIED: 2,
    STATUS_PROVED: 3,
}

EDIT_KINDS = ("insert_lemma", "restate", "strengthen_assumptions", "split")


@dataclass(frozen=True)
class BlueprintNode:
    id: str
    kind: str
    statement: str
    lean_name: str | None = None
    uses: tuple[str, ...] = ()
    status: str = STATUS_UNSTATED
    doc_order: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind: {self.kind}")
        if self.status not in STATUS_ORDER:
            raise ValueError(f"unknown status: {self.status}")
        if self.status == STATUS_PROVED and not self.lean_name:
            raise ValueError(f"node {self.id}: proved status requires a lean name")

    def with_status(self, status: str) -> "BlueprintNode":
        return replace(self, status=status)

    def downgraded(self) -> "BlueprintNode":
        """Cap status at 'stated': a changed statement invalidates verification."""
        if STATUS_ORDER[self.status] > STATUS_ORDER[STATUS_STATED]:
            return self.with_status(STATUS_STATED)
        return self


@dataclass(frozen=True)
class BlueprintGraph:
    nodes: dict[str, BlueprintNode]
    root: str

    def node(self, node_id: str) -> BlueprintNode:
        return self.nodes[node_id]

    def in_document_order(self) -> list[BlueprintNode]:
        return sorted(self.nodes.values(), key=lambda n: n.doc_order)

    def dependents_of(self, node_id: str) -> list[str]:
        return [n.id for n in self.in_document_order() if node_id in n.uses]

    def replace_nodes(self, changes: dict[str, BlueprintNode | None]) -> "BlueprintGraph":
        """New graph with nodes replaced (or removed when mapped to None)."""
        nodes = dict(self.nodes)
        for node_id, node in changes.items():
            if node is None:
                nodes.pop(node_id, None)
            else:
                nodes[node_id] = node
        return BlueprintGraph(nodes=nodes, root=self.root)

    def to_dict(self) -> dict:
        """Structured form (nodes, edges, statuses) for machine consumers."""
        return {
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "statement": n.statement,
                    "lean_name": n.lean_name,
                    "uses": list(n.uses),
                    "status": n.status,
                }
                for n in self.in_document_order()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BlueprintGraph":
        nodes = {}
        for order, spec in enumerate(data["nodes"]):
            nodes[spec["id"]] = BlueprintNode(
                id=spec["id"],
                kind=spec["kind"],
                statement=spec.get("statement", ""),
                lean_name=spec.get("lean_name"),
                uses=tuple(spec.get("uses", ())),
                status=spec.get("status", STATUS_UNSTATED),
                doc_order=order,
            )
        return cls(nodes=nodes, root=data["root"])


@dataclass(frozen=True)
class Finding:
    """One validation problem; an empty finding list means well-formed."""

    kind: str  # cycle | dangling | unreachable | missing_root
    message: str
    nodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class RefinementEdit:
    """A structural revision applied to a blueprint graph.

    kinds:
      insert_lemma           payload = the new node's fields; target gains it
      restate                payload["statement"] replaces the target's text
      strengthen_assumptions same as restate, semantically an added hypothesis
      split                  payload["nodes"] = two or more replacement nodes
    """

    kind: str
    target: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in EDIT_KINDS:
            raise ValueError(f"unknown edit kind: {self.kind}")
