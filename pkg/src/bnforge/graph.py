"""The belief network: variable nodes joined by pform hyperedges.

A pform is a hyperedge from an ordered list of parent nodes to one child node
carrying (possibly symbolic) conditional probability entries.  A node's parent
set is the ordered union of the parents of all pforms attached to it; the
graph never contains an arc that does not come from some pform.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import (
    ConflictingEvidence,
    CycleCreated,
    DuplicateEntry,
    DuplicateNode,
    StateMismatch,
    UnknownNode,
    UnknownState,
)
from .inference import d_connected

BOOLEAN_STATES = ("t", "f")


@dataclass(frozen=True)
class Entry:
    """One conditional entry ``P(child_state | parent_states) = expr``."""

    child_state: str
    parent_states: tuple
    expr: object

    def __str__(self):
        return f"(({self.child_state} | {' '.join(self.parent_states)}) {self.expr})"


@dataclass(frozen=True)
class PForm:
    parents: tuple
    child: int
    entries: tuple = ()
    active: Optional[tuple] = None  # per-parent active state; None = state 0

    def entry(self, child_state: str, parent_states: tuple) -> Optional[Entry]:
        for e in self.entries:
            if e.child_state == child_state and e.parent_states == parent_states:
                return e
        return None


@dataclass(eq=False)
class Node:
    id: int
    statement: object
    states: tuple
    evidence: Optional[str] = None
    committed: Optional[str] = None
    rejected: bool = False
    pforms: list = field(default_factory=list)
    parents: list = field(default_factory=list)

    @property
    def name(self) -> str:
        return str(self.statement)

    @property
    def is_boolean(self) -> bool:
        return len(self.states) == 2

    @property
    def observed(self) -> Optional[str]:
        """The state this node is clamped to, by evidence or commitment."""
        return self.evidence if self.evidence is not None else self.committed

    def __repr__(self):
        return f"<Node {self.id} {self.name}>"


def _nid(n) -> int:
    return n.id if isinstance(n, Node) else n


def _normalize_state(node: Node, state) -> str:
    state = str(state)
    if state in node.states:
        return state
    # keyword spelling :present names the state present
    if state.startswith(":") and state[1:] in node.states:
        return state[1:]
    raise UnknownState(f"{state!r} is not a state of {node.name} {node.states}")


class BeliefGraph:
    def __init__(self):
        self.nodes: dict = {}
        self._by_statement: dict = {}
        self._children: dict = {}
        self._next_id = 0
        self.version = 0

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes.values())

    def __contains__(self, n):
        return _nid(n) in self.nodes

    def node(self, n) -> Node:
        try:
            return self.nodes[_nid(n)]
        except KeyError:
            raise UnknownNode(f"no node {n!r}") from None

    def node_for(self, statement) -> Optional[Node]:
        nid = self._by_statement.get(statement)
        return None if nid is None else self.nodes[nid]

    def find(self, name: str) -> Node:
        """Look a node up by its statement text, e.g. ``"(genotype A)"``."""
        for n in self.nodes.values():
            if n.name == name:
                return n
        raise UnknownNode(f"no node named {name}")

    # -- mutation ----------------------------------------------------------

    def add_node(self, statement, states: Iterable = BOOLEAN_STATES) -> Node:
        if statement in self._by_statement:
            raise DuplicateNode(f"{statement} already has a node")
        states = tuple(str(s) for s in states)
        if len(states) < 2 or len(set(states)) != len(states):
            raise StateMismatch(f"bad state space {states} for {statement}")
        node = Node(self._next_id, statement, states)
        self._next_id += 1
        self.nodes[node.id] = node
        self._children[node.id] = []
        self._by_statement[statement] = node.id
        self.version += 1
        return node

    def attach_pform(self, pf: PForm) -> bool:
        """Attach ``pf``; returns False when an identical pform is present."""
        child = self.node(pf.child)
        parents = [self.node(p) for p in pf.parents]
        if pf in child.pforms:
            return False
        self._check_entries(pf, child, parents)
        if any(p.id == child.id or p.id in self.descendants(child.id) for p in parents):
            raise CycleCreated(
                f"pform {[p.name for p in parents]} -> {child.name} would close a cycle"
            )
        child.pforms.append(pf)
        for p in parents:
            if p.id not in child.parents:
                child.parents.append(p.id)
                self._children[p.id].append(child.id)
        self.version += 1
        return True

    def _check_entries(self, pf, child, parents):
        if pf.active is not None:
            if len(pf.active) != len(parents):
                raise StateMismatch("active-state list does not match the parents")
            for p, s in zip(parents, pf.active):
                if s not in p.states:
                    raise StateMismatch(f"active state {s!r} not a state of {p.name}")
        seen = set()
        for e in pf.entries:
            if len(e.parent_states) != len(parents):
                raise StateMismatch(
                    f"entry {e} names {len(e.parent_states)} parent states, "
                    f"pform has {len(parents)} parents"
                )
            if e.child_state not in child.states:
                raise StateMismatch(f"{e.child_state!r} is not a state of {child.name}")
            for p, s in zip(parents, e.parent_states):
                if s not in p.states:
                    raise StateMismatch(f"{s!r} is not a state of {p.name}")
            key = (e.child_state, e.parent_states)
            if key in seen:
                raise DuplicateEntry(f"entry {e} given twice")
            seen.add(key)

    def add_evidence(self, n, state) -> None:
        node = self.node(n)
        state = _normalize_state(node, state)
        if node.evidence is not None:
            if node.evidence != state:
                raise ConflictingEvidence(
                    f"{node.name} already observed as {node.evidence}, not {state}"
                )
            return
        node.evidence = state
        self.version += 1

    def commit(self, n, state, rejected: bool = False) -> None:
        node = self.node(n)
        node.committed = _normalize_state(node, state)
        node.rejected = rejected
        self.version += 1

    def remove_nodes(self, ids: Iterable) -> None:
        ids = {_nid(i) for i in ids}
        for nid in ids:
            node = self.nodes.pop(nid)
            del self._by_statement[node.statement]
            del self._children[nid]
        for node in self.nodes.values():
            if any(p in ids for p in node.parents):
                node.pforms = [pf for pf in node.pforms if not ids.intersection(pf.parents)]
                node.parents = list(dict.fromkeys(p for pf in node.pforms for p in pf.parents))
        self._children = {nid: [] for nid in self.nodes}
        for node in self.nodes.values():
            for p in node.parents:
                self._children[p].append(node.id)
        self.version += 1

    # -- structure ---------------------------------------------------------

    def parents(self, n) -> list:
        return list(self.node(n).parents)

    def children(self, n) -> list:
        return list(self._children[_nid(n)])

    def arcs(self) -> list:
        return [(p, n.id) for n in self.nodes.values() for p in n.parents]

    def descendants(self, n) -> set:
        out, stack = set(), [_nid(n)]
        while stack:
            for c in self._children[stack.pop()]:
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def ancestors(self, ns) -> set:
        """Ancestral closure of ``ns`` (the nodes themselves included)."""
        out = set()
        stack = [_nid(n) for n in ns]
        while stack:
            nid = stack.pop()
            if nid in out:
                continue
            out.add(nid)
            stack.extend(self.nodes[nid].parents)
        return out

    def topological_order(self) -> list:
        indeg = {nid: len(n.parents) for nid, n in self.nodes.items()}
        queue = deque(sorted(nid for nid, d in indeg.items() if d == 0))
        order = []
        while queue:
            nid = queue.popleft()
            order.append(nid)
            for c in self._children[nid]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.nodes):
            raise CycleCreated("graph contains a directed cycle")
        return order

    def evidence_nodes(self) -> set:
        return {nid for nid, n in self.nodes.items() if n.observed is not None}

    def d_connected_set(self, changed: Iterable, evidence: Optional[Iterable] = None) -> set:
        """Nodes reachable from ``changed`` along active trails.  ``evidence``
        defaults to every node with evidence or a commitment."""
        observed = self.evidence_nodes() if evidence is None else {_nid(e) for e in evidence}
        parents = {nid: n.parents for nid, n in self.nodes.items()}
        return d_connected(parents, {_nid(c) for c in changed}, observed)

    def snapshot(self) -> "BeliefGraph":
        """Deep copy safe to hand to another thread for evaluation."""
        return copy.deepcopy(self)

    def to_dot(self) -> str:
        lines = ["digraph belief_network {"]
        for n in self.nodes.values():
            label = n.name.replace('"', '\\"')
            attrs = [f'label="{label}"']
            if n.evidence is not None:
                attrs.append('style=filled fillcolor="gray70"')
            elif n.committed is not None:
                attrs.append('style=filled fillcolor="gray90"')
            lines.append(f"  n{n.id} [{' '.join(attrs)}];")
        for p, c in self.arcs():
            lines.append(f"  n{p} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"
