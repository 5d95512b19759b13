"""Exact inference over discrete belief networks.

Three independent routes compute posterior marginals:

* :func:`enumerate_marginals` sums the full joint (the test oracle),
* :func:`variable_elimination` eliminates with a min-fill ordering,
* :func:`junction_tree_evaluate` propagates over a clique tree and returns
  every marginal in one pass.

All three work on a :class:`Network`, a plain numeric view of a belief graph
whose CPTs are already built.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ImpossibleEvidence, TooLarge

MAX_JOINT_STATES = 10**6


@dataclass
class Network:
    """Numeric network.  ``cpts[v]`` has axes ``(*parents[v], v)``;
    ``evidence[v]`` is an observed state index."""

    variables: list
    states: dict
    parents: dict
    cpts: dict
    evidence: dict = field(default_factory=dict)

    def card(self, v) -> int:
        return len(self.states[v])

    def ancestors(self, vs: Iterable) -> set:
        out, stack = set(), list(vs)
        while stack:
            v = stack.pop()
            if v not in out:
                out.add(v)
                stack.extend(self.parents[v])
        return out

    def restrict(self, keep: Iterable) -> "Network":
        """Sub-network on ``keep``, which must be closed under parents."""
        keep = set(keep)
        for v in keep:
            missing = set(self.parents[v]) - keep
            if missing:
                raise ValueError(f"restriction drops parents {missing} of {v}")
        vs = [v for v in self.variables if v in keep]
        return Network(
            vs,
            {v: self.states[v] for v in vs},
            {v: tuple(self.parents[v]) for v in vs},
            {v: self.cpts[v] for v in vs},
            {v: s for v, s in self.evidence.items() if v in keep},
        )


class Factor:
    """Dense non-negative table over an ordered scope of variables."""

    __slots__ = ("scope", "values")

    def __init__(self, scope: Sequence, values):
        self.scope = tuple(scope)
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != len(self.scope):
            raise ValueError(f"factor over {self.scope} given {self.values.ndim}-d table")

    def __repr__(self):
        return f"Factor({self.scope}, shape={self.values.shape})"

    def _aligned(self, scope: tuple, cards: dict) -> np.ndarray:
        perm = sorted(range(len(self.scope)), key=lambda i: scope.index(self.scope[i]))
        vals = np.transpose(self.values, perm)
        shape = [cards[v] if v in self.scope else 1 for v in scope]
        return vals.reshape(shape)

    def __mul__(self, other: "Factor") -> "Factor":
        scope = self.scope + tuple(v for v in other.scope if v not in self.scope)
        cards = dict(zip(self.scope, self.values.shape))
        cards.update(zip(other.scope, other.values.shape))
        return Factor(scope, self._aligned(scope, cards) * other._aligned(scope, cards))

    def marginalize(self, vs: Iterable) -> "Factor":
        """Sum out ``vs``."""
        vs = set(vs)
        axes = tuple(i for i, v in enumerate(self.scope) if v in vs)
        return Factor([v for v in self.scope if v not in vs], self.values.sum(axis=axes))

    def project(self, keep: Iterable) -> "Factor":
        keep = set(keep)
        return self.marginalize(v for v in self.scope if v not in keep)

    def reduce(self, evidence: dict) -> "Factor":
        """Fix observed variables, dropping them from the scope."""
        idx = tuple(evidence[v] if v in evidence else slice(None) for v in self.scope)
        return Factor([v for v in self.scope if v not in evidence], self.values[idx])

    def normalized(self) -> "Factor":
        z = self.values.sum()
        if z <= 0:
            raise ImpossibleEvidence("evidence has probability zero")
        return Factor(self.scope, self.values / z)


def cpt_factors(net: Network, variables: Optional[Iterable] = None) -> list:
    vs = net.variables if variables is None else [v for v in net.variables if v in set(variables)]
    return [Factor(tuple(net.parents[v]) + (v,), net.cpts[v]) for v in vs]


def _delta(card: int, index: int) -> np.ndarray:
    out = np.zeros(card)
    out[index] = 1.0
    return out


# ---------------------------------------------------------------------------
# oracle


def enumerate_marginals(net: Network, targets: Optional[Iterable] = None,
                        max_states: int = MAX_JOINT_STATES) -> dict:
    """Posterior marginals by building the whole joint table.

    Deliberately shares no code with the factor machinery: each CPT is read
    by fancy-indexing with open index grids over the full joint.
    """
    targets = list(net.variables if targets is None else targets)
    shape = tuple(net.card(v) for v in net.variables)
    if int(np.prod(shape, dtype=float)) > max_states:
        raise TooLarge(f"joint has {int(np.prod(shape, dtype=float))} states (> {max_states})")
    pos = {v: i for i, v in enumerate(net.variables)}
    grid = np.ix_(*[np.arange(n) for n in shape])
    joint = np.ones(shape)
    for v in net.variables:
        idx = tuple(grid[pos[u]] for u in (*net.parents[v], v))
        joint = joint * net.cpts[v][idx]
    for v, s in net.evidence.items():
        joint = joint * (grid[pos[v]] == s)
    z = joint.sum()
    if z <= 0:
        raise ImpossibleEvidence("evidence has probability zero")
    out = {}
    for t in targets:
        axes = tuple(i for i in range(len(shape)) if i != pos[t])
        out[t] = joint.sum(axis=axes) / z
    return out


# ---------------------------------------------------------------------------
# elimination orderings


def _interaction_graph(scopes: Iterable) -> dict:
    adj: dict = {}
    for scope in scopes:
        for v in scope:
            adj.setdefault(v, set()).update(u for u in scope if u != v)
    return adj


def _fill_in(adj: dict, v) -> int:
    nbrs = sorted(adj[v], key=repr)
    return sum(1 for i, a in enumerate(nbrs) for b in nbrs[i + 1:] if b not in adj[a])


def _sort_key(v):
    return (0, v) if isinstance(v, (int, np.integer)) else (1, repr(v))


def elimination_order(adj: dict, variables: Iterable, heuristic: str = "min-fill") -> list:
    """Greedy ordering of ``variables``; ties broken by variable id."""
    adj = {v: set(n) for v, n in adj.items()}
    todo = set(variables)
    order = []
    while todo:
        if heuristic == "min-fill":
            v = min(todo, key=lambda u: (_fill_in(adj, u), _sort_key(u)))
        elif heuristic == "min-degree":
            v = min(todo, key=lambda u: (len(adj[u]), _sort_key(u)))
        else:
            raise ValueError(f"unknown ordering heuristic {heuristic!r}")
        nbrs = adj.pop(v)
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
        todo.discard(v)
        order.append(v)
    return order


# ---------------------------------------------------------------------------
# variable elimination


def variable_elimination(net: Network, targets: Optional[Iterable] = None,
                         order_heuristic="min-fill") -> dict:
    """Posterior marginal of each target by summing out all other variables.

    ``order_heuristic`` is ``"min-fill"``, ``"min-degree"`` or an explicit
    list (variables absent from the list are eliminated last, by id).
    """
    targets = list(net.variables if targets is None else targets)
    out = {}
    for t in targets:
        if t in net.evidence:
            out[t] = _delta(net.card(t), net.evidence[t])
            continue
        relevant = net.ancestors([t, *net.evidence])
        factors = [f.reduce(net.evidence) for f in cpt_factors(net, relevant)]
        hidden = {v for v in relevant if v != t and v not in net.evidence}
        if isinstance(order_heuristic, str):
            adj = _interaction_graph(f.scope for f in factors)
            for v in hidden:
                adj.setdefault(v, set())
            order = elimination_order(adj, hidden, order_heuristic)
        else:
            given = [v for v in order_heuristic if v in hidden]
            order = given + sorted(hidden - set(given), key=_sort_key)
        for v in order:
            touching = [f for f in factors if v in f.scope]
            if not touching:
                continue
            factors = [f for f in factors if v not in f.scope]
            prod = touching[0]
            for f in touching[1:]:
                prod = prod * f
            factors.append(prod.marginalize([v]))
        result = Factor([t], np.ones(net.card(t)))
        for f in factors:
            result = result * f
        out[t] = result.project([t]).normalized().values
    return out


# ---------------------------------------------------------------------------
# junction tree


@dataclass
class JunctionTree:
    cliques: list
    edges: list  # (i, j, separator)
    order: list

    def neighbours(self, i) -> list:
        out = []
        for a, b, sep in self.edges:
            if a == i:
                out.append((b, sep))
            elif b == i:
                out.append((a, sep))
        return out


def build_junction_tree(net: Network, heuristic: str = "min-fill") -> JunctionTree:
    """Moralize, triangulate by greedy elimination, join maximal cliques by a
    maximum-weight spanning tree on separator size."""
    moral = {v: set() for v in net.variables}
    for v in net.variables:
        family = [*net.parents[v], v]
        for a in family:
            moral[a].update(b for b in family if b != a)
    order = elimination_order(moral, net.variables, heuristic)
    adj = {v: set(n) for v, n in moral.items()}
    cliques = []
    for v in order:
        nbrs = adj.pop(v)
        clique = frozenset(nbrs | {v})
        if not any(clique <= c for c in cliques):
            cliques = [c for c in cliques if not c <= clique] + [clique]
        for a in nbrs:
            adj[a].discard(v)
            adj[a].update(nbrs - {a})
    candidates = sorted(
        ((len(cliques[i] & cliques[j]), i, j) for i in range(len(cliques))
         for j in range(i + 1, len(cliques))),
        key=lambda x: (-x[0], x[1], x[2]),
    )
    root = list(range(len(cliques)))

    def find(i):
        while root[i] != i:
            root[i] = root[root[i]]
            i = root[i]
        return i

    edges = []
    for _, i, j in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            root[ri] = rj
            edges.append((i, j, cliques[i] & cliques[j]))
    return JunctionTree(cliques, edges, order)


def junction_tree_evaluate(net: Network, targets: Optional[Iterable] = None,
                           heuristic: str = "min-fill") -> dict:
    """Posterior marginals of every variable (or just ``targets``) by two-pass
    message passing on a junction tree."""
    if not net.variables:
        return {}
    jt = build_junction_tree(net, heuristic)
    n = len(jt.cliques)
    scopes = [tuple(sorted(c, key=_sort_key)) for c in jt.cliques]
    potentials = [Factor(s, np.ones(tuple(net.card(v) for v in s))) for s in scopes]

    def home(vs):
        vs = set(vs)
        return min((i for i in range(n) if vs <= jt.cliques[i]), key=lambda i: (len(scopes[i]), i))

    for f in cpt_factors(net):
        i = home(f.scope)
        potentials[i] = potentials[i] * f
    for v, s in net.evidence.items():
        i = home([v])
        potentials[i] = potentials[i] * Factor([v], _delta(net.card(v), s))

    nbrs = [jt.neighbours(i) for i in range(n)]
    parent = {0: None}
    preorder, stack = [], [0]
    while stack:
        i = stack.pop()
        preorder.append(i)
        for j, _ in nbrs[i]:
            if j not in parent:
                parent[j] = i
                stack.append(j)
    messages = {}

    def send(i, j, sep):
        f = potentials[i]
        for k, _ in nbrs[i]:
            if k != j:
                f = f * messages[(k, i)]
        m = f.project(sep)
        z = m.values.sum()
        messages[(i, j)] = Factor(m.scope, m.values / z if z > 0 else m.values)

    for i in reversed(preorder):
        if parent[i] is not None:
            send(i, parent[i], _sep(jt, i, parent[i]))
    for i in preorder:
        for j, sep in nbrs[i]:
            if parent.get(j) == i:
                send(i, j, sep)

    beliefs = []
    for i in range(n):
        f = potentials[i]
        for k, _ in nbrs[i]:
            f = f * messages[(k, i)]
        beliefs.append(f)
    targets = list(net.variables if targets is None else targets)
    out = {}
    for t in targets:
        i = home([t])
        out[t] = beliefs[i].project([t]).normalized().values
    return out


def _sep(jt, i, j):
    for a, b, sep in jt.edges:
        if (a, b) in ((i, j), (j, i)):
            return sep
    raise KeyError((i, j))


# ---------------------------------------------------------------------------


def d_connected(parents: dict, changed: Iterable, observed: Iterable) -> set:
    """Nodes reachable from ``changed`` along active trails (Bayes ball).

    The ball leaves every changed node towards both its parents and its
    children, which over-approximates the reach of a CPT change or an
    evidence change at that node.
    """
    observed = set(observed)
    children = {v: [] for v in parents}
    for v in sorted(parents, key=_sort_key):
        for p in parents[v]:
            children[p].append(v)
    start = {c for c in changed if c in parents}
    reached = set(start)
    queue = deque()  # (node, arrived_from_child)
    for s in sorted(start, key=_sort_key):
        queue.extend((p, True) for p in parents[s])
        queue.extend((c, False) for c in children[s])
    visited = set()
    while queue:
        v, from_child = queue.popleft()
        if (v, from_child) in visited:
            continue
        visited.add((v, from_child))
        reached.add(v)
        up = (from_child and v not in observed) or (not from_child and v in observed)
        down = v not in observed
        if up:
            queue.extend((p, True) for p in parents[v])
        if down:
            queue.extend((c, False) for c in children[v])
    return reached


def affected_nodes(net: Network, changed: Iterable, previous_evidence: Optional[dict] = None) -> set:
    """Nodes whose posterior may differ after ``changed`` CPTs were edited and
    the evidence moved from ``previous_evidence`` to ``net.evidence``."""
    changed = set(changed)
    if previous_evidence is not None:
        keys = set(previous_evidence) | set(net.evidence)
        changed |= {v for v in keys if previous_evidence.get(v) != net.evidence.get(v)}
    reached = d_connected(net.parents, changed, net.evidence)
    if previous_evidence is not None:
        reached |= d_connected(net.parents, changed, previous_evidence)
    return reached


def evaluate_subset(net: Network, targets: Iterable, heuristic: str = "min-fill") -> dict:
    """Marginals of ``targets`` computed on their ancestral closure together
    with the evidence; everything else is barren and dropped."""
    targets = set(targets)
    if not targets:
        return {}
    needed = net.ancestors(targets | set(net.evidence))
    return junction_tree_evaluate(net.restrict(needed), sorted(targets, key=_sort_key), heuristic)


def random_network(rng: np.random.Generator, max_nodes: int = 12, min_states: int = 2,
                   max_states: int = 3, max_parents: int = 3, evidence_prob: float = 0.25,
                   n_nodes: Optional[int] = None) -> Network:
    """Random DAG with Dirichlet CPTs and random evidence, for cross-checks."""
    n = int(rng.integers(1, max_nodes + 1)) if n_nodes is None else n_nodes
    variables = list(range(n))
    states, parents, cpts = {}, {}, {}
    for v in variables:
        k = int(rng.integers(min_states, max_states + 1))
        states[v] = tuple(f"s{i}" for i in range(k))
        npar = int(rng.integers(0, min(v, max_parents) + 1))
        parents[v] = tuple(sorted(rng.choice(v, size=npar, replace=False).tolist())) if npar else ()
        shape = tuple(len(states[p]) for p in parents[v])
        cpts[v] = rng.dirichlet(np.ones(k), size=shape) if shape else rng.dirichlet(np.ones(k))
    evidence = {}
    for v in variables:
        if rng.random() < evidence_prob:
            evidence[v] = int(rng.integers(len(states[v])))
    return Network(variables, states, parents, cpts, evidence)
