"""First-order terms, unification and the statement database.

Terms are immutable and hashable, so structural identity of ground terms is
plain ``==``.  Substitutions are ordinary dicts mapping :class:`Variable` to
:class:`Term`.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Union

from .errors import NonGroundAssertion


@dataclass(frozen=True)
class Symbol:
    name: str

    def __str__(self):
        return self.name

    @property
    def is_keyword(self) -> bool:
        return self.name.startswith(":")


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self):
        if not self.name.startswith("?"):
            raise ValueError(f"variable names begin with '?': {self.name!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Number:
    """Exact rational constant.  Floats are read through their decimal repr."""

    value: Fraction

    def __post_init__(self):
        v = self.value
        if isinstance(v, bool):
            raise TypeError("booleans are not numbers here")
        if isinstance(v, float):
            v = Fraction(repr(v))
        elif not isinstance(v, Fraction):
            v = Fraction(v)
        object.__setattr__(self, "value", v)

    def __float__(self):
        return float(self.value)

    def __str__(self):
        return format_number(self.value)


@dataclass(frozen=True)
class String:
    value: str

    def __str__(self):
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError(f"compound ({self.functor}) needs at least one argument")

    def __str__(self):
        return "(" + " ".join([self.functor, *map(str, self.args)]) + ")"


Term = Union[Symbol, Variable, Number, String, Compound]
Substitution = dict


def format_number(value: Fraction) -> str:
    """Shortest exact spelling of a rational: integer, finite decimal or n/d."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = abs(value) * 10 ** digits
    assert scaled.denominator == 1
    text = str(scaled.numerator).rjust(digits + 1, "0")
    text = text[:-digits] + "." + text[-digits:]
    return ("-" if value < 0 else "") + text


def compound(functor: str, *args) -> Compound:
    """Build a compound, coercing Python strings and numbers to terms."""
    return Compound(functor, tuple(as_term(a) for a in args))


def as_term(x) -> Term:
    if isinstance(x, (Symbol, Variable, Number, String, Compound)):
        return x
    if isinstance(x, str):
        return Variable(x) if x.startswith("?") else Symbol(x)
    if isinstance(x, (int, float, Fraction)) and not isinstance(x, bool):
        return Number(x)
    raise TypeError(f"cannot convert {x!r} to a term")


def predicate_of(t: Term) -> Optional[str]:
    if isinstance(t, Compound):
        return t.functor
    if isinstance(t, Symbol):
        return t.name
    return None


def variables(t: Term) -> Iterator[Variable]:
    if isinstance(t, Variable):
        yield t
    elif isinstance(t, Compound):
        for a in t.args:
            yield from variables(a)


def is_ground(t: Term) -> bool:
    return next(variables(t), None) is None


def walk(t: Term, s: Substitution) -> Term:
    while isinstance(t, Variable) and t in s:
        t = s[t]
    return t


def substitute(t: Term, s: Substitution) -> Term:
    """Apply ``s`` fully, following chains of bindings."""
    t = walk(t, s)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(substitute(a, s) for a in t.args))
    return t


def _occurs(v: Variable, t: Term, s: Substitution) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Compound):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def unify_into(a: Term, b: Term, s: Substitution) -> Optional[Substitution]:
    """Extend triangular substitution ``s`` so that ``a`` and ``b`` unify.

    Returns a new dict, or None on clash / occurs-check failure.  ``s`` itself
    is never mutated.
    """
    s = dict(s)
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x, s), walk(y, s)
        if x == y:
            continue
        if isinstance(x, Variable):
            if _occurs(x, y, s):
                return None
            s[x] = y
        elif isinstance(y, Variable):
            if _occurs(y, x, s):
                return None
            s[y] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        else:
            return None
    return s


def resolve(s: Substitution) -> Substitution:
    """Idempotent form of a triangular substitution."""
    return {v: substitute(t, s) for v, t in s.items()}


def unify(a: Term, b: Term) -> Optional[Substitution]:
    """Most general unifier of ``a`` and ``b`` (occurs-check on), or None."""
    s = unify_into(a, b, {})
    return None if s is None else resolve(s)


_fresh = itertools.count(1)


def rename_apart(t: Term, mapping: Optional[dict] = None) -> Term:
    """Copy ``t`` with every variable replaced by a fresh one.

    Pass the same ``mapping`` dict to rename several terms consistently.
    """
    if mapping is None:
        mapping = {}
    if isinstance(t, Variable):
        if t not in mapping:
            base = t.name.split("#", 1)[0]
            mapping[t] = Variable(f"{base}#{next(_fresh)}")
        return mapping[t]
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_apart(a, mapping) for a in t.args))
    return t


def restrict(s: Substitution, vs: Iterable[Variable]) -> Substitution:
    return {v: substitute(v, s) for v in vs if v in s}


# ---------------------------------------------------------------------------
# database


@dataclass(eq=False)
class Statement:
    """A ground statement.  Doubles as the handle for a network node."""

    term: Term
    id: int
    network_linked: bool = False
    pruned: bool = False

    def __str__(self):
        return str(self.term)

    def __repr__(self):
        return f"<Statement {self.id} {self.term}>"


@dataclass(eq=False)
class IndexedFact:
    """A fact (possibly non-ground) stored for retrieval only, never a node."""

    term: Term
    id: int

    def __repr__(self):
        return f"<IndexedFact {self.id} {self.term}>"


def _key(t: Term):
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    if isinstance(t, Symbol):
        return (t.name, 0)
    return None


@dataclass
class Database:
    """Indexed store of asserted statements and indexed facts.

    ``prover`` is an optional callable ``pattern -> iterator of substitutions``
    used by :meth:`retrieve` to add answers derived by backward rules.
    """

    statements: list = field(default_factory=list)
    indexed: list = field(default_factory=list)
    prover: Optional[Callable] = None

    def __post_init__(self):
        self._by_term: dict = {}
        self._indexed_by_term: dict = {}
        self._by_key = defaultdict(list)
        self._seq = itertools.count()

    def __len__(self):
        return len(self.statements)

    def __contains__(self, t: Term):
        return t in self._by_term

    def lookup(self, t: Term) -> Optional[Statement]:
        return self._by_term.get(t)

    def assert_statement(self, t: Term) -> tuple:
        """Store ground term ``t``.  Returns ``(statement, is_new)``."""
        if not is_ground(t):
            raise NonGroundAssertion(f"cannot assert non-ground statement {t}")
        st = self._by_term.get(t)
        if st is not None:
            return st, False
        st = Statement(t, len(self.statements))
        self.statements.append(st)
        self._by_term[t] = st
        self._by_key[_key(t)].append((next(self._seq), st))
        return st, True

    def index_statement(self, t: Term) -> IndexedFact:
        fact = self._indexed_by_term.get(t)
        if fact is None:
            fact = IndexedFact(t, len(self.indexed))
            self.indexed.append(fact)
            self._indexed_by_term[t] = fact
            self._by_key[_key(t)].append((next(self._seq), fact))
        return fact

    def _candidates(self, pattern: Term):
        key = _key(pattern)
        if key is None:
            # bare variable: everything, in storage order
            items = [x for lst in self._by_key.values() for x in lst]
            items.sort(key=lambda x: x[0])
            return [x[1] for x in items]
        return [x[1] for x in self._by_key.get(key, ())]

    def match_facts(self, pattern: Term, s: Optional[Substitution] = None):
        """Yield ``(entry, triangular_subst)`` for stored facts only."""
        s = {} if s is None else s
        for entry in self._candidates(substitute(pattern, s)):
            term = entry.term
            if isinstance(entry, IndexedFact) and not is_ground(term):
                term = rename_apart(term)
            s2 = unify_into(pattern, term, s)
            if s2 is not None:
                yield entry, s2

    def retrieve(self, pattern: Term) -> Iterator[tuple]:
        """Yield ``(entry, substitution)`` for every fact unifying with ``pattern``.

        Stored facts come first in assertion order, then answers derived by
        the backward-rule prover (``entry`` is None for those).
        """
        pvars = list(dict.fromkeys(variables(pattern)))
        for entry, s in self.match_facts(pattern):
            yield entry, restrict(s, pvars)
        if self.prover is not None:
            seen = set()
            for s in self.prover(pattern, facts=False):
                answer = substitute(pattern, s)
                if answer in seen:
                    continue
                seen.add(answer)
                yield None, restrict(s, pvars)
