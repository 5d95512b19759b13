"""Rule engine: forward (``->``), backward (``<-``) and combined (``-><-``)
chaining over the statement database, building the belief graph as a side
effect of forward firings.

Forward and combined rules carry pform templates.  Label variables in a rule
bind to statement handles; when a pform template is instantiated its labels
name the parent and child nodes.  No arc is drawn except through a pform.
"""

from __future__ import annotations

import enum
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .dists import BUILTIN_FUNCTIONS, CPT, DistContext, DistDeclaration, build_cpt
from .errors import (
    DepthLimitExceeded,
    MalformedRule,
    NonGroundAssertion,
    StateMismatch,
    UnknownAction,
)
from .graph import BOOLEAN_STATES, BeliefGraph, Entry, Node, PForm
from .inference import Network
from .terms import (
    Compound,
    Database,
    Number,
    Statement,
    Term,
    Variable,
    is_ground,
    predicate_of,
    rename_apart,
    resolve,
    restrict,
    substitute,
    unify,
    unify_into,
    variables,
)

DEFAULT_DEPTH_LIMIT = 64
DEPTH_ENV = "BNFORGE_DEPTH_LIMIT"


class Mode(enum.Enum):
    FORWARD = "->"
    BACKWARD = "<-"
    COMBINED = "-><-"


@dataclass(frozen=True)
class Pattern:
    term: Term
    label: Optional[Variable] = None


@dataclass(frozen=True)
class EntryTemplate:
    child_state: Term
    parent_states: tuple
    expr: Term


@dataclass(frozen=True)
class PFormTemplate:
    parent_labels: tuple
    child_label: Variable
    entries: tuple = ()
    active: Optional[tuple] = None


@dataclass(frozen=True)
class Rule:
    """A chaining rule.

    For backward rules ``trigger`` is the query head and ``antecedents`` the
    body goals.  For combined rules ``antecedents`` are retrieved after the
    trigger fires, once per answer.
    """

    mode: Mode
    trigger: Pattern
    consequents: tuple = ()
    antecedents: tuple = ()
    pforms: tuple = ()
    location: Optional[tuple] = field(default=None, compare=False)

    @property
    def labels(self) -> dict:
        """label variable -> ("trigger" | "antecedent" | "consequent", index)."""
        out = {}
        if self.trigger.label is not None:
            out[self.trigger.label] = ("trigger", 0)
        for role, pats in (("antecedent", self.antecedents), ("consequent", self.consequents)):
            for i, p in enumerate(pats):
                if p.label is not None:
                    out[p.label] = (role, i)
        return out


@dataclass(frozen=True)
class Fact:
    term: Term


@dataclass(frozen=True)
class IndexForm:
    term: Term


@dataclass(frozen=True)
class StatesDeclaration:
    predicate: str
    states: tuple


@dataclass(frozen=True)
class AssertActionBinding:
    predicate: str
    action: str


@dataclass(frozen=True)
class PriorParam:
    name: str
    value: Number


@dataclass(frozen=True)
class Effect:
    kind: str  # "assert" | "node" | "pform" | "evidence"
    subject: object


def rule_problems(rule: Rule) -> list:
    """``(kind, message)`` for every violated rule invariant; kind is
    ``"unbound-label"`` or ``"malformed"``."""
    problems = []
    declared = []
    for p in (rule.trigger, *rule.antecedents, *rule.consequents):
        if p.label is not None:
            declared.append(p.label)
    if len(set(declared)) != len(declared):
        problems.append(("malformed", "a label variable is declared twice"))
    if rule.mode is Mode.BACKWARD:
        if rule.pforms:
            problems.append(("malformed", "backward rules carry no pforms"))
        if declared:
            problems.append(("malformed", "backward rules carry no labels"))
        if rule.consequents:
            problems.append(("malformed", "backward rules have no consequents"))
        return problems
    if rule.mode is Mode.COMBINED and not rule.antecedents:
        problems.append(("malformed", "combined rule without antecedents"))
    if rule.mode is Mode.FORWARD and rule.antecedents:
        problems.append(("malformed", "forward rule with antecedents; use -><-"))
    labels = set(declared)
    for tpl in rule.pforms:
        for lbl in (*tpl.parent_labels, tpl.child_label):
            if lbl not in labels:
                problems.append(("unbound-label", f"label {lbl} is not declared by any :label"))
        if not tpl.parent_labels:
            problems.append(("malformed", "pform needs at least one parent"))
        if tpl.active is not None and len(tpl.active) != len(tpl.parent_labels):
            problems.append(("malformed", "active-state list length differs from parent count"))
        for e in tpl.entries:
            if len(e.parent_states) != len(tpl.parent_labels):
                problems.append(
                    ("malformed", f"entry lists {len(e.parent_states)} parent states for "
                                  f"{len(tpl.parent_labels)} parents")
                )
    return problems


def _anonymize(rule: Rule) -> Rule:
    """Give every ``?_`` its own variable so anonymous slots never co-refer."""
    count = iter(range(1, 10**9))

    def fix(t):
        if isinstance(t, Variable) and t.name == "?_":
            return Variable(f"?_{next(count)}")
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(fix(a) for a in t.args))
        return t

    def pat(p):
        return Pattern(fix(p.term), p.label)

    return Rule(
        rule.mode, pat(rule.trigger), tuple(map(pat, rule.consequents)),
        tuple(map(pat, rule.antecedents)), rule.pforms, rule.location,
    )


def _state_name(t) -> str:
    return str(t)


# ---------------------------------------------------------------------------
# assert actions


def _assert_observation(engine: "Engine", t: Term) -> list:
    """``(pred <statement> <state>)``: mark the statement's node as observed."""
    if not isinstance(t, Compound) or len(t.args) != 2:
        raise MalformedRule(f"observation action expects (pred statement state), got {t}")
    target, state = t.args
    st = engine.db.lookup(target)
    effects = []
    if st is None:
        st, _ = engine.db.assert_statement(target)
        effects.append(Effect("assert", st))
        engine._schedule(st)
    node = engine.ensure_node(st)
    engine.graph.add_evidence(node, _state_name(state))
    effects.append(Effect("evidence", (node.id, node.evidence)))
    return effects


ASSERT_ACTIONS = {
    "assert-observation": _assert_observation,
    "add-evidence": _assert_observation,
    "instantiate-observation": _assert_observation,
}


class Engine:
    """Logical database, rule set, declarations and the belief graph they build."""

    def __init__(self, depth_limit: Optional[int] = None):
        if depth_limit is None:
            depth_limit = int(os.environ.get(DEPTH_ENV, DEFAULT_DEPTH_LIMIT))
        self.depth_limit = depth_limit
        self.db = Database()
        self.db.prover = self._prove_rules
        self.graph = BeliefGraph()
        self.rules: list = []
        self.declarations: dict = {}
        self.state_spaces: dict = {}
        self.actions: dict = {}
        self.params: dict = {}
        self.functions: dict = dict(BUILTIN_FUNCTIONS)
        self.cpts: dict = {}
        self.defer_expansion = False
        self.pending: list = []
        self._agenda = deque()
        self._fired: set = set()
        self._answers: set = set()
        self._effects: list = []

    # -- loading -----------------------------------------------------------

    def load(self, items: Iterable) -> None:
        """Load parsed ruleset items (rules, facts, declarations ...).

        Rules and action bindings are checked up front so that a bad item
        leaves the engine untouched."""
        items = list(items)
        for item in items:
            if isinstance(item, Rule) and rule_problems(item):
                raise MalformedRule("; ".join(msg for _, msg in rule_problems(item)))
            if isinstance(item, AssertActionBinding) and item.action not in ASSERT_ACTIONS:
                raise UnknownAction(f"no built-in assert action {item.action!r}")
        for item in items:
            if isinstance(item, Rule):
                self.load_rule(item)
            elif isinstance(item, Fact):
                self.assert_fact(item.term)
            elif isinstance(item, IndexForm):
                self.index(item.term)
            elif isinstance(item, DistDeclaration):
                self.declare_dist(item)
            elif isinstance(item, StatesDeclaration):
                self.declare_states(item.predicate, item.states)
            elif isinstance(item, AssertActionBinding):
                self.bind_action(item.predicate, item.action)
            elif isinstance(item, PriorParam):
                self.set_param(item.name, item.value)
            else:
                raise TypeError(f"cannot load {item!r}")

    def load_rule(self, rule: Rule) -> int:
        problems = rule_problems(rule)
        if problems:
            raise MalformedRule("; ".join(msg for _, msg in problems))
        rule = _anonymize(rule)
        self.rules.append(rule)
        idx = len(self.rules) - 1
        if rule.mode is not Mode.BACKWARD:
            for st in list(self.db.statements):
                if not st.pruned:
                    self._agenda.append((idx, st))
            self._run_agenda()
        return idx

    def declare_dist(self, decl: DistDeclaration) -> None:
        self.declarations[decl.predicate] = decl
        self._link_predicate(decl.predicate)

    def declare_states(self, predicate: str, states) -> None:
        states = tuple(str(s) for s in states)
        for n in self.graph:
            if predicate_of(n.statement.term) == predicate and n.states != states:
                raise StateMismatch(f"{n.name} already has states {n.states}")
        self.state_spaces[predicate] = states
        self._link_predicate(predicate)

    def bind_action(self, predicate: str, action: str) -> None:
        if action not in ASSERT_ACTIONS:
            raise UnknownAction(f"no built-in assert action {action!r}")
        self.actions[predicate] = action

    def set_param(self, name: str, value) -> None:
        self.params[name] = float(value.value if isinstance(value, Number) else value)

    def register_function(self, name: str, fn) -> None:
        """Register a pure scalar function ``fn(ctx, *ground_terms) -> float``
        callable from pform entry expressions."""
        self.functions[name] = fn

    def is_registered(self, predicate: str) -> bool:
        return predicate in self.declarations or predicate in self.state_spaces

    def states_for(self, predicate: str) -> tuple:
        return self.state_spaces.get(predicate, BOOLEAN_STATES)

    def _link_predicate(self, predicate: str) -> None:
        for st in self.db.statements:
            if predicate_of(st.term) == predicate and not st.pruned:
                self.ensure_node(st)

    # -- database ----------------------------------------------------------

    def ensure_node(self, st: Statement) -> Node:
        node = self.graph.node_for(st)
        if node is None:
            node = self.graph.add_node(st, self.states_for(predicate_of(st.term)))
            st.network_linked = True
            self._effects.append(Effect("node", node.id))
        return node

    def index(self, t: Term):
        return self.db.index_statement(t)

    def assert_fact(self, t: Term) -> list:
        """Assert an external fact and fire forward rules to quiescence.

        Returns the list of effects (new statements, nodes, pforms, evidence).
        """
        self._effects = []
        pred = predicate_of(t)
        if pred in self.actions:
            self._effects.extend(self.run_assert_action(t))
        else:
            st, new = self._assert(t)
            if new:
                self._schedule(st, from_rule=False)
        self._run_agenda()
        return self._effects

    def _assert(self, t: Term):
        st, new = self.db.assert_statement(t)
        if new:
            self._effects.append(Effect("assert", st))
            if self.is_registered(predicate_of(t)):
                self.ensure_node(st)
        return st, new

    def run_assert_action(self, t: Term) -> list:
        pred = predicate_of(t)
        action = self.actions.get(pred)
        if action is None:
            st, new = self._assert(t)
            if new:
                self._schedule(st)
            return [Effect("assert", st)] if new else []
        return ASSERT_ACTIONS[action](self, t)

    def retrieve(self, pattern: Term):
        return self.db.retrieve(pattern)

    # -- forward chaining --------------------------------------------------

    def _schedule(self, st: Statement, from_rule: bool = True) -> None:
        if (from_rule and self.defer_expansion and st.network_linked
                and self.graph.node_for(st) is not None
                and self.graph.node_for(st).observed is None):
            self.pending.append(st)
            return
        for idx, rule in enumerate(self.rules):
            if rule.mode is not Mode.BACKWARD:
                self._agenda.append((idx, st))

    def release(self, statements: Iterable) -> list:
        """Let deferred statements trigger their forward rules."""
        self._effects = []
        for st in statements:
            if not st.pruned:
                for idx, rule in enumerate(self.rules):
                    if rule.mode is not Mode.BACKWARD:
                        self._agenda.append((idx, st))
        self._run_agenda()
        return self._effects

    def fire_forward(self, st: Statement) -> list:
        """Fire every forward/combined rule whose trigger matches ``st`` (and,
        transitively, everything those firings assert)."""
        self._effects = []
        self._schedule(st, from_rule=False)
        self._run_agenda()
        return self._effects

    def _run_agenda(self) -> None:
        while self._agenda:
            idx, st = self._agenda.popleft()
            self._fire(idx, st)

    def _fire(self, idx: int, st: Statement) -> None:
        if (idx, st.id) in self._fired or st.pruned:
            return
        rule = self.rules[idx]
        s = unify(rule.trigger.term, st.term)
        if s is None:
            return
        self._fired.add((idx, st.id))
        labels = {}
        if rule.trigger.label is not None:
            labels[rule.trigger.label] = st
            s[rule.trigger.label] = st.term
        if rule.mode is Mode.COMBINED:
            self._fire_combined(idx, st, s, labels)
        else:
            self._instantiate(rule, s, labels)

    def _fire_combined(self, idx, st, s, labels) -> int:
        rule = self.rules[idx]
        answers = list(self._solve(list(rule.antecedents), s, labels))
        fresh = 0
        for s2, labels2 in answers:
            key = (idx, st.id, tuple(substitute(p.term, s2) for p in rule.antecedents))
            if key in self._answers:
                continue
            self._answers.add(key)
            fresh += 1
            self._instantiate(rule, resolve(s2), labels2)
        return fresh

    def _solve(self, patterns: list, s: dict, labels: dict) -> Iterator:
        if not patterns:
            yield s, labels
            return
        p, rest = patterns[0], patterns[1:]
        for entry, s2 in self._match(p.term, s):
            labels2 = labels
            if p.label is not None:
                if not isinstance(entry, Statement):
                    entry, new = self._assert(substitute(p.term, s2))
                    if new:
                        self._schedule(entry)
                labels2 = {**labels, p.label: entry}
                s2 = {**s2, p.label: entry.term}
            yield from self._solve(rest, s2, labels2)

    def _match(self, pattern: Term, s: dict) -> Iterator:
        yield from self.db.match_facts(pattern, s)
        seen = set()
        for s2 in self._prove([(pattern, 0)], s, facts_first_goal=False):
            answer = substitute(pattern, s2)
            if answer not in seen:
                seen.add(answer)
                yield None, s2

    def _instantiate(self, rule: Rule, s: dict, labels: dict) -> None:
        s = dict(s)
        labels = dict(labels)
        new = []
        for p in rule.consequents:
            t = substitute(p.term, s)
            if not is_ground(t):
                raise NonGroundAssertion(f"consequent {t} is not ground after binding")
            if predicate_of(t) in self.actions:
                self._effects.extend(self.run_assert_action(t))
                continue
            st, is_new = self._assert(t)
            if is_new:
                new.append(st)
            if p.label is not None:
                labels[p.label] = st
                s[p.label] = st.term
        for tpl in rule.pforms:
            parents = [labels[lbl] for lbl in tpl.parent_labels]
            child = labels[tpl.child_label]
            if child.pruned or any(p.pruned for p in parents):
                continue
            pnodes = [self.ensure_node(p) for p in parents]
            cnode = self.ensure_node(child)
            entries = tuple(
                Entry(
                    _state_name(substitute(e.child_state, s)),
                    tuple(_state_name(substitute(x, s)) for x in e.parent_states),
                    substitute(e.expr, s),
                )
                for e in tpl.entries
            )
            active = None
            if tpl.active is not None:
                active = tuple(_state_name(substitute(a, s)) for a in tpl.active)
            pf = PForm(tuple(n.id for n in pnodes), cnode.id, entries, active)
            if self.graph.attach_pform(pf):
                self._effects.append(Effect("pform", pf))
        for st in new:
            self._schedule(st)

    def saturate(self) -> bool:
        """Run the agenda, then re-run combined rules against their earlier
        triggers until no new antecedent answers appear.  Returns True if
        anything new was derived."""
        changed = False
        while True:
            self._run_agenda()
            fresh = 0
            for idx, rule in enumerate(self.rules):
                if rule.mode is not Mode.COMBINED:
                    continue
                for st in list(self.db.statements):
                    if (idx, st.id) not in self._fired or st.pruned:
                        continue
                    s = unify(rule.trigger.term, st.term)
                    labels = {}
                    if rule.trigger.label is not None:
                        labels[rule.trigger.label] = st
                        s[rule.trigger.label] = st.term
                    fresh += self._fire_combined(idx, st, s, labels)
            if not fresh and not self._agenda:
                return changed
            changed = True

    # -- backward chaining -------------------------------------------------

    def answer_query(self, q: Term) -> Iterator[dict]:
        """Substitutions for the query variables, by SLD resolution over stored
        facts and backward rules (duplicates suppressed)."""
        qvars = list(dict.fromkeys(variables(q)))
        seen = set()
        for s in self._prove([(q, 0)], {}):
            answer = substitute(q, s)
            if answer in seen:
                continue
            seen.add(answer)
            yield restrict(s, qvars)

    def _prove_rules(self, pattern: Term, facts: bool = False) -> Iterator[dict]:
        return self._prove([(pattern, 0)], {}, facts_first_goal=facts)

    def _prove(self, goals: list, s: dict, facts_first_goal: bool = True) -> Iterator[dict]:
        if not goals:
            yield s
            return
        (goal, depth), rest = goals[0], goals[1:]
        goal_term = substitute(goal, s)
        if isinstance(goal_term, Compound) and goal_term.functor == "and":
            yield from self._prove([(g, depth) for g in goal_term.args] + rest, s)
            return
        if facts_first_goal:
            for _, s2 in self.db.match_facts(goal, s):
                yield from self._prove(rest, s2)
        for rule in self.rules:
            if rule.mode is not Mode.BACKWARD:
                continue
            mapping = {}
            head = rename_apart(rule.trigger.term, mapping)
            s2 = unify_into(goal, head, s)
            if s2 is None:
                continue
            if depth + 1 > self.depth_limit:
                raise DepthLimitExceeded(f"backward chaining deeper than {self.depth_limit} on {goal_term}")
            body = [(rename_apart(p.term, mapping), depth + 1) for p in rule.antecedents]
            yield from self._prove(body + rest, s2)

    # -- CPTs --------------------------------------------------------------

    def dist_context(self) -> DistContext:
        return DistContext(self.graph, self.declarations, self.params, self.functions, self.db)

    def build_cpts(self) -> set:
        """Rebuild every CPT; returns the ids of nodes whose table changed."""
        ctx = self.dist_context()
        changed = set()
        cpts = {}
        for nid in self.graph.topological_order():
            node = self.graph.node(nid)
            cpt = build_cpt(node, ctx.declaration_for(node), ctx)
            if not cpt.same_as(self.cpts.get(nid)):
                changed.add(nid)
            cpts[nid] = cpt
        self.cpts = cpts
        return changed

    def network(self, build: bool = True) -> Network:
        if build:
            self.build_cpts()
        ids = sorted(self.graph.nodes)
        nodes = self.graph.nodes
        return Network(
            ids,
            {i: nodes[i].states for i in ids},
            {i: tuple(self.cpts[i].parent_order) for i in ids},
            {i: self.cpts[i].table for i in ids},
            {i: nodes[i].states.index(nodes[i].observed) for i in ids if nodes[i].observed is not None},
        )

    def cpt(self, name: str) -> CPT:
        self.build_cpts()
        return self.cpts[self.graph.find(name).id]
