"""CPT synthesis from pforms.

Each predicate may declare a prior function (used when its node is a root)
and a posterior function (a combinator that turns the node's pforms into a
distribution for every conditioning case).  Pform entries are symbolic
probability expressions, evaluated here.
"""

from __future__ import annotations

import itertools
import logging
import operator
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AsymmetricTransmission,
    BadExpression,
    CombinerError,
    DivisionByZero,
    IncompleteTable,
    MissingDeclaration,
    MultiplePFormsForFullTable,
    NonBooleanChild,
    OutOfRange,
    UnknownFunction,
)
from .graph import BeliefGraph, Node, PForm
from .terms import Compound, Number, Symbol, Variable, compound, predicate_of, substitute

log = logging.getLogger(__name__)

ROW_TOL = 1e-9
DEFAULT_PRIOR = 0.01
DEFAULT_PRIOR_PARAM = "default-prior"


@dataclass(frozen=True)
class FnSpec:
    """A function reference with literal arguments, e.g. ``(hardy-weinberg 0.5)``."""

    name: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.name
        return "(" + " ".join([self.name, *map(str, self.args)]) + ")"


@dataclass(frozen=True)
class DistDeclaration:
    predicate: str
    prior_fn: Optional[FnSpec] = None
    posterior_fn: Optional[FnSpec] = None


@dataclass(eq=False)
class CPT:
    """``table[i_1, ..., i_k, j] = P(child = states[j] | parents = (i_1..i_k))``."""

    child: int
    parent_order: tuple
    states: tuple
    parent_states: tuple
    table: np.ndarray

    def prob(self, child_state: str, parent_vector=()) -> float:
        idx = tuple(ps.index(s) for ps, s in zip(self.parent_states, parent_vector))
        return float(self.table[idx + (self.states.index(child_state),)])

    def distribution(self, parent_vector=()) -> tuple:
        idx = tuple(ps.index(s) for ps, s in zip(self.parent_states, parent_vector))
        return tuple(float(x) for x in self.table[idx])

    def rows(self):
        for vec in itertools.product(*self.parent_states):
            yield vec, self.distribution(vec)

    def same_as(self, other: Optional["CPT"]) -> bool:
        return (
            other is not None
            and self.parent_order == other.parent_order
            and self.states == other.states
            and self.table.shape == other.table.shape
            and np.array_equal(self.table, other.table)
        )


@dataclass
class DistContext:
    """Everything a CPT build may read: graph, declarations, parameters,
    registered scalar functions and the logical database."""

    graph: BeliefGraph
    declarations: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    db: object = None

    def param(self, name: str) -> float:
        if name == DEFAULT_PRIOR_PARAM and name not in self.params:
            return DEFAULT_PRIOR
        try:
            return float(self.params[name])
        except KeyError:
            raise BadExpression(f"unknown parameter {name!r}") from None

    def declaration_for(self, node: Node) -> DistDeclaration:
        pred = predicate_of(getattr(node.statement, "term", node.statement)) or ""
        decl = self.declarations.get(pred)
        if decl is None:
            decl = default_declaration(pred, node)
        return decl

    def prior_p(self, node: Node) -> float:
        """Value of ``:p``: the prior of the node's first state as if it were a root."""
        decl = self.declaration_for(node)
        if decl.prior_fn is None:
            return self.param(DEFAULT_PRIOR_PARAM)
        return float(call_prior(decl.prior_fn, node, self)[0])


def default_declaration(predicate: str, node: Node) -> DistDeclaration:
    if node.is_boolean:
        return DistDeclaration(predicate, FnSpec("bernoulli", (Symbol(DEFAULT_PRIOR_PARAM),)), FnSpec("xor-dist"))
    return DistDeclaration(predicate, None, FnSpec("simple-pform"))


# ---------------------------------------------------------------------------
# probability expressions

_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


def eval_prob_expr(e, ctx: DistContext, node: Optional[Node] = None) -> float:
    """Evaluate an entry expression and clamp it into [0, 1]."""
    value = _eval(e, ctx, node)
    if not 0.0 <= value <= 1.0:
        clamped = min(1.0, max(0.0, value))
        log.warning("probability %s = %r clamped to %r", e, value, clamped)
        value = clamped
    return value


def _eval(e, ctx, node) -> float:
    if isinstance(e, (int, float)):
        return float(e)
    if isinstance(e, Number):
        return float(e.value)
    if isinstance(e, Symbol):
        if e.name == ":p":
            if node is None:
                raise BadExpression(":p needs a child node")
            return ctx.prior_p(node)
        return ctx.param(e.name)
    if isinstance(e, Variable):
        raise BadExpression(f"unbound variable {e} in probability expression")
    if isinstance(e, Compound):
        if e.functor in _ARITH:
            if len(e.args) != 2:
                raise BadExpression(f"{e.functor} takes two operands: {e}")
            a, b = (_eval(x, ctx, node) for x in e.args)
            if e.functor == "/" and b == 0:
                raise DivisionByZero(f"division by zero in {e}")
            return _ARITH[e.functor](a, b)
        fn = ctx.functions.get(e.functor)
        if fn is None:
            raise UnknownFunction(f"no registered function {e.functor!r}")
        return float(fn(ctx, *e.args))
    raise BadExpression(f"cannot evaluate {e!r}")


def lookup(ctx: DistContext, pred, *args) -> float:
    """Registered function ``(lookup pred a ...)``: the number ``v`` in the first
    stored fact ``(pred a ... v)``."""
    if ctx.db is None:
        raise BadExpression("lookup needs a database")
    probe = Variable("?lookup-value")
    pattern = compound(str(pred), *args, probe)
    for _, s in ctx.db.retrieve(pattern):
        v = substitute(probe, s)
        if isinstance(v, Number):
            return float(v.value)
    raise BadExpression(f"no numeric fact matches {pattern}")


BUILTIN_FUNCTIONS = {"lookup": lookup}


# ---------------------------------------------------------------------------
# priors


def hardy_weinberg(p: float) -> tuple:
    """Genotype priors (p^2, 2pq, q^2) for allele frequency ``p``."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"allele frequency {p} outside [0, 1]")
    q = 1.0 - p
    return (p * p, 2.0 * p * q, q * q)


def _prior_hardy_weinberg(node, args):
    if len(node.states) != 3:
        raise CombinerError(f"hardy-weinberg needs a 3-state node, {node.name} has {node.states}")
    if len(args) != 1:
        raise CombinerError("hardy-weinberg takes one argument, the allele frequency")
    return hardy_weinberg(args[0])


def _prior_bernoulli(node, args):
    if not node.is_boolean:
        raise NonBooleanChild(f"bernoulli prior on non-boolean {node.name}")
    if len(args) != 1:
        raise CombinerError("bernoulli takes one argument")
    q = args[0]
    if not 0.0 <= q <= 1.0:
        raise OutOfRange(f"probability {q} outside [0, 1]")
    return (q, 1.0 - q)


def _prior_uniform(node, args):
    return tuple(1.0 / len(node.states) for _ in node.states)


def _prior_table(node, args):
    if len(args) != len(node.states):
        raise CombinerError(f"table prior for {node.name} needs {len(node.states)} values")
    return tuple(args)


PRIOR_FUNCTIONS = {
    "hardy-weinberg": _prior_hardy_weinberg,
    "bernoulli": _prior_bernoulli,
    "uniform": _prior_uniform,
    "table": _prior_table,
}


def _fn_arg(a, ctx) -> float:
    if isinstance(a, Number):
        return float(a.value)
    if isinstance(a, Symbol):
        return ctx.param(a.name)
    if isinstance(a, (int, float)):
        return float(a)
    raise BadExpression(f"bad function argument {a!r}")


def call_prior(spec: FnSpec, node: Node, ctx: DistContext) -> tuple:
    fn = PRIOR_FUNCTIONS.get(spec.name)
    if fn is None:
        raise UnknownFunction(f"no prior function {spec.name!r}")
    return fn(node, [_fn_arg(a, ctx) for a in spec.args])


# ---------------------------------------------------------------------------
# posterior combinators


def active_states(pf: PForm, graph: BeliefGraph) -> tuple:
    if pf.active is not None:
        return pf.active
    return tuple(graph.node(p).states[0] for p in pf.parents)


def pform_satisfied(pf: PForm, cc: dict, graph: BeliefGraph) -> bool:
    """True iff every parent of ``pf`` sits at its active state in ``cc``."""
    return all(cc[p] == a for p, a in zip(pf.parents, active_states(pf, graph)))


def _prob_true(pf, parent_vector, node, ctx) -> Optional[float]:
    e = pf.entry(node.states[0], parent_vector)
    if e is not None:
        return eval_prob_expr(e.expr, ctx, node)
    e = pf.entry(node.states[1], parent_vector)
    if e is not None:
        return 1.0 - eval_prob_expr(e.expr, ctx, node)
    return None


def _leak(pf, node, ctx) -> Optional[float]:
    """P(true) from the pform's entry with every parent inactive, if it has one."""
    act = active_states(pf, ctx.graph)
    for e in pf.entries:
        if all(s != a for s, a in zip(e.parent_states, act)):
            return _prob_true(pf, e.parent_states, node, ctx)
    return None


def _weight(pf, node, ctx) -> float:
    q = _prob_true(pf, active_states(pf, ctx.graph), node, ctx)
    return 1.0 if q is None else q


def _require_boolean(node, name):
    if not node.is_boolean:
        raise NonBooleanChild(f"{name} needs a boolean child; {node.name} has {node.states}")


def xor_dist(node: Node, pforms, cc: dict, ctx: DistContext, *args) -> tuple:
    """Exactly one satisfied pform explains the node.

    With entry-free pforms this is the deterministic 1-if-exactly-one rule;
    entries turn it noisy: the satisfied pform's active entry when one pform
    holds, the first declared all-inactive entry when none does.
    """
    _require_boolean(node, "xor-dist")
    sat = [pf for pf in pforms if pform_satisfied(pf, cc, ctx.graph)]
    if len(sat) == 1:
        p = _weight(sat[0], node, ctx)
    elif not sat:
        p = 0.0
        for pf in pforms:
            leak = _leak(pf, node, ctx)
            if leak is not None:
                p = leak
                break
    else:
        p = 0.0
    return (p, 1.0 - p)


def noisy_or(node: Node, pforms, cc: dict, ctx: DistContext, *args) -> tuple:
    _require_boolean(node, "noisy-or")
    leak = 0.0
    for pf in pforms:
        v = _leak(pf, node, ctx)
        if v is not None:
            leak = v
            break
    p_false = 1.0 - leak
    for pf in pforms:
        if pform_satisfied(pf, cc, ctx.graph):
            p_false *= 1.0 - _weight(pf, node, ctx)
    return (1.0 - p_false, p_false)


def noisy_and(node: Node, pforms, cc: dict, ctx: DistContext, *args) -> tuple:
    _require_boolean(node, "noisy-and")
    p = 1.0
    for pf in pforms:
        if pform_satisfied(pf, cc, ctx.graph):
            p *= _weight(pf, node, ctx)
        else:
            leak = _leak(pf, node, ctx)
            p *= 0.0 if leak is None else leak
    return (p, 1.0 - p)


def full_table(node: Node, pforms, cc: dict, ctx: DistContext, *args) -> tuple:
    """Read the distribution straight from the single pform's entries.

    A row may leave exactly one child state unspecified, which then takes the
    remaining mass; any other unspecified states must be zero.
    """
    if len(pforms) != 1:
        raise MultiplePFormsForFullTable(
            f"{node.name} has {len(pforms)} pforms; simple-pform needs exactly one"
        )
    pf = pforms[0]
    vec = tuple(cc[p] for p in pf.parents)
    given = {e.child_state: eval_prob_expr(e.expr, ctx, node) for e in pf.entries if e.parent_states == vec}
    if not given:
        raise IncompleteTable(f"{node.name}: no entries for parent states {vec}")
    missing = [s for s in node.states if s not in given]
    total = sum(given.values())
    if len(missing) == 1:
        rest = 1.0 - total
        if rest < -ROW_TOL:
            raise IncompleteTable(f"{node.name}: row {vec} sums to {total} > 1")
        given[missing[0]] = max(rest, 0.0)
    elif abs(total - 1.0) > ROW_TOL:
        raise IncompleteTable(
            f"{node.name}: row {vec} sums to {total} with states {missing} unspecified"
        )
    return tuple(given.get(s, 0.0) for s in node.states)


def transmission(node: Node, pforms, cc: dict, ctx: DistContext, *args) -> tuple:
    """Full table over two 3-state parents that must not care about parent order."""
    if len(pforms) != 1:
        raise MultiplePFormsForFullTable(f"{node.name} has {len(pforms)} pforms")
    pf = pforms[0]
    if len(pf.parents) != 2:
        raise CombinerError(f"transmission needs two parents, {node.name} has {len(pf.parents)}")
    p1, p2 = (ctx.graph.node(p) for p in pf.parents)
    if not (len(p1.states) == len(p2.states) == len(node.states) == 3) or p1.states != p2.states:
        raise CombinerError("transmission needs three-state genotype parents and child")
    dist = full_table(node, pforms, cc, ctx)
    swapped = dict(cc)
    swapped[p1.id], swapped[p2.id] = cc[p2.id], cc[p1.id]
    mirror = full_table(node, pforms, swapped, ctx)
    if any(abs(a - b) > 1e-12 for a, b in zip(dist, mirror)):
        raise AsymmetricTransmission(
            f"{node.name}: P(.|{cc[p1.id]},{cc[p2.id]}) != P(.|{cc[p2.id]},{cc[p1.id]})"
        )
    return dist


POSTERIOR_FUNCTIONS = {
    "xor-dist": xor_dist,
    "noisy-or": noisy_or,
    "noisy-and": noisy_and,
    "simple-pform": full_table,
    "full-table": full_table,
    "transmission": transmission,
}


# ---------------------------------------------------------------------------


def build_cpt(node: Node, decl: Optional[DistDeclaration], ctx: DistContext) -> CPT:
    """Complete, row-normalised CPT for ``node`` from its pforms and declaration."""
    if decl is None:
        decl = ctx.declaration_for(node)
    graph = ctx.graph
    parents = tuple(node.parents)
    pstates = tuple(graph.node(p).states for p in parents)
    table = np.zeros(tuple(len(s) for s in pstates) + (len(node.states),))
    if not parents:
        if decl.prior_fn is None:
            raise MissingDeclaration(f"root node {node.name} has no prior function")
        rows = [((), call_prior(decl.prior_fn, node, ctx))]
    else:
        spec = decl.posterior_fn or default_declaration(decl.predicate, node).posterior_fn
        fn = POSTERIOR_FUNCTIONS.get(spec.name)
        if fn is None:
            raise UnknownFunction(f"no posterior function {spec.name!r}")
        args = [_fn_arg(a, ctx) for a in spec.args]
        rows = []
        for vec in itertools.product(*pstates):
            cc = dict(zip(parents, vec))
            rows.append((vec, fn(node, list(node.pforms), cc, ctx, *args)))
    for vec, dist in rows:
        dist = np.asarray(dist, dtype=float)
        if dist.shape != (len(node.states),):
            raise CombinerError(f"{node.name}: combinator returned {dist.shape[0]} values")
        if np.any(dist < -ROW_TOL) or np.any(dist > 1 + ROW_TOL) or abs(dist.sum() - 1.0) > ROW_TOL:
            raise CombinerError(f"{node.name}: row {vec} = {dist.tolist()} is not a distribution")
        idx = tuple(ps.index(s) for ps, s in zip(pstates, vec))
        table[idx] = np.clip(dist, 0.0, 1.0)
    return CPT(node.id, parents, node.states, pstates, table)
