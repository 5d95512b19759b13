"""Incremental construct / evaluate / commit loop.

Each external input is asserted and forward-chained.  Statements that become
hypothesis nodes are held back from further expansion until the network has
been evaluated once with them in it; a hypothesis whose probability of being
true falls to ``tau_reject`` or below is clamped false, its uncommitted
descendants are pruned and its expansion never happens.  A hypothesis that
stays at or above ``tau_accept`` for ``commit_delay_rounds`` consecutive rounds
is committed at its most probable state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from typing import Iterable, Optional

import numpy as np

from .errors import BadOption, MaxRoundsExceeded
from .inference import affected_nodes, evaluate_subset, junction_tree_evaluate
from .rules import DEFAULT_DEPTH_LIMIT, Engine

log = logging.getLogger(__name__)


@dataclass
class SessionOptions:
    tau_accept: float = 0.99
    tau_reject: float = 0.01
    commit_delay_rounds: int = 2
    max_rounds: int = 100
    depth_limit: int = DEFAULT_DEPTH_LIMIT

    def validate(self) -> None:
        # tau_accept above 1 is allowed and switches commitment off
        if not 0.0 <= self.tau_reject < self.tau_accept:
            raise BadOption(f"need 0 <= tau_reject < tau_accept, got {self.tau_reject}, {self.tau_accept}")
        if self.commit_delay_rounds < 1 or self.max_rounds < 1 or self.depth_limit < 1:
            raise BadOption("commit_delay_rounds, max_rounds and depth_limit must be positive")

    @classmethod
    def names(cls) -> list:
        return [f.name for f in fields(cls)]


@dataclass
class CommitEvent:
    round: int
    statement: str
    action: str  # "accept" | "reject"
    state: str
    probability: float


@dataclass
class LoopResult:
    graph: object
    marginals: dict
    commits: list = field(default_factory=list)


class Session:
    """An engine plus the policy state of the iterative loop."""

    def __init__(self, engine: Optional[Engine] = None, options: Optional[SessionOptions] = None, **kw):
        self.options = options or SessionOptions(**kw)
        self.options.validate()
        self.engine = engine or Engine(depth_limit=self.options.depth_limit)
        self.marginals: dict = {}
        self.ages: dict = {}
        self.commits: list = []
        self.round = 0
        self._evidence: dict = {}

    @property
    def graph(self):
        return self.engine.graph

    def set_option(self, name: str, value) -> None:
        name = name.replace("-", "_")
        if name not in SessionOptions.names():
            raise BadOption(f"unknown option {name!r}; options are {SessionOptions.names()}")
        kind = type(getattr(self.options, name))
        old = getattr(self.options, name)
        setattr(self.options, name, kind(value))
        try:
            self.options.validate()
        except BadOption:
            setattr(self.options, name, old)
            raise
        if name == "depth_limit":
            self.engine.depth_limit = self.options.depth_limit

    # -- evaluation --------------------------------------------------------

    def changes(self) -> set:
        """Rebuild CPTs and report nodes whose table changed or that are new.
        Evidence moves are picked up by :meth:`evaluate_affected`."""
        changed = self.engine.build_cpts()
        for nid in set(self.marginals) - set(self.graph.nodes):
            del self.marginals[nid]
        return changed

    def evaluate_affected(self, changed: Iterable) -> dict:
        """Re-evaluate the part of the network a change can reach.

        Only nodes d-connected to ``changed`` (or to a node whose evidence
        moved since the last evaluation) are recomputed, and only on the
        ancestral closure of those nodes and the evidence.  Cached marginals
        of every other node are kept.  CPTs must be current.
        """
        net = self.engine.network(build=False)
        previous = {v: s for v, s in self._evidence.items() if v in self.graph.nodes}
        affected = affected_nodes(net, {c for c in changed if c in self.graph.nodes}, previous)
        self._evidence = dict(net.evidence)
        result = evaluate_subset(net, affected)
        self.marginals.update(result)
        return result

    def evaluate_all(self) -> dict:
        self.changes()
        net = self.engine.network(build=False)
        self._evidence = dict(net.evidence)
        self.marginals = junction_tree_evaluate(net)
        return self.marginals

    # -- policy ------------------------------------------------------------

    def _apply_policy(self) -> bool:
        opts = self.options
        acted = False
        for nid in list(self.graph.nodes):
            if nid not in self.graph.nodes:
                continue  # pruned earlier in this pass
            node = self.graph.nodes[nid]
            if node.observed is not None:
                continue
            dist = self.marginals[nid]
            if node.is_boolean and dist[0] <= opts.tau_reject:
                self._reject(node, float(dist[0]))
                acted = True
                continue
            top = int(np.argmax(dist))
            if dist[top] >= opts.tau_accept:
                self.ages[nid] = self.ages.get(nid, 0) + 1
                if self.ages[nid] >= opts.commit_delay_rounds:
                    self.graph.commit(node, node.states[top])
                    self.commits.append(CommitEvent(self.round, node.name, "accept",
                                                    node.states[top], float(dist[top])))
                    acted = True
            else:
                self.ages[nid] = 0
        return acted

    def _reject(self, node, p_true: float) -> None:
        self.graph.commit(node, node.states[1], rejected=True)
        self.commits.append(CommitEvent(self.round, node.name, "reject", node.states[1], p_true))
        clamped = self.graph.evidence_nodes()
        desc = self.graph.descendants(node.id)
        keep = {d for d in desc if d in clamped or self.graph.descendants(d) & clamped}
        doomed = desc - keep
        node.statement.pruned = True
        for nid in doomed:
            st = self.graph.nodes[nid].statement
            st.pruned = True
            st.network_linked = False
            self.ages.pop(nid, None)
        if doomed:
            self.graph.remove_nodes(doomed)
        log.info("rejected %s (P=%.3g), pruned %d descendants", node.name, p_true, len(doomed))

    # -- loop --------------------------------------------------------------

    def step(self, term) -> None:
        """Run one external input through the loop until nothing changes."""
        self.engine.defer_expansion = True
        try:
            self._step(term)
        finally:
            self.engine.defer_expansion = False

    def _step(self, term) -> None:
        self.engine.assert_fact(term)
        rounds = 0
        while True:
            rounds += 1
            if rounds > self.options.max_rounds:
                raise MaxRoundsExceeded(f"no quiescence after {self.options.max_rounds} rounds on {term}")
            self.round += 1
            grew = self.engine.saturate()
            self.evaluate_affected(self.changes())
            acted = self._apply_policy()
            pending = [st for st in self.engine.pending if not st.pruned]
            self.engine.pending = []
            effects = self.engine.release(pending) if pending else []
            grew = grew or any(e.kind in ("node", "pform") for e in effects)
            if not (grew or acted):
                break
        self.changes()

    def run_loop(self, inputs: Iterable) -> LoopResult:
        for term in inputs:
            self.step(term)
        # evaluate whatever the last release added
        self.evaluate_affected(self.changes())
        return LoopResult(self.graph, dict(self.marginals), list(self.commits))
