"""Reader, parser and serializer for ``.bnr`` rule files.

Top-level forms::

    (-> TRIGGER [:label ?L] BODY [:prob PFORM]...)   forward / combined rule
    (<- QUERY ANTECEDENT...)                           backward rule
    (defpreddist PRED PRIOR-FN POSTERIOR-FN)           also spelled defpredist
    (defstates PRED STATE...)
    (defparam NAME NUMBER)
    (index TERM)
    (assert-function PRED ACTION)
    (PRED ARG...)                                      ground fact

``BODY`` is a pattern, ``(and PAT [:label ?L] ...)`` or
``(-><- ANTECEDENTS CONSEQUENTS)``.  A pform is
``((?P1 ... -> ?C) [:active (STATE...)] ((CHILD | PARENT...) EXPR)...)``.
``;`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .dists import DistDeclaration, FnSpec
from .errors import ParseError, UnboundLabel, UnknownFormHead
from .rules import (
    AssertActionBinding,
    EntryTemplate,
    Fact,
    IndexForm,
    Mode,
    Pattern,
    PFormTemplate,
    PriorParam,
    Rule,
    StatesDeclaration,
    rule_problems,
)
from .terms import Compound, Number, String, Symbol, Variable, is_ground

_NUMBER = re.compile(r"[+-]?(?:\d+/\d+|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)$")

ARROW = "->"
BACK = "<-"
COMBINED = "-><-"
RESERVED_HEADS = {"and", COMBINED, "|", "setf", "defun", "lambda", "let"}


@dataclass
class SAtom:
    kind: str  # symbol | variable | keyword | number | string | bar
    value: object
    line: int
    col: int

    def __str__(self):
        return str(self.value)


@dataclass
class SList:
    items: list
    line: int
    col: int


SExpr = Union[SAtom, SList]


# ---------------------------------------------------------------------------
# reader


def read(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    forms = []
    stack: list = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k=1):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    def emit(x):
        if stack:
            stack[-1].items.append(x)
        else:
            forms.append(x)

    while i < n:
        c = text[i]
        if c.isspace():
            advance()
        elif c == ";":
            while i < n and text[i] != "\n":
                advance()
        elif c == "(":
            stack.append(SList([], line, col))
            advance()
        elif c == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            lst = stack.pop()
            advance()
            emit(lst)
        elif c == "|":
            emit(SAtom("bar", "|", line, col))
            advance()
        elif c == '"':
            l0, c0 = line, col
            advance()
            buf = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string", l0, c0)
                ch = text[i]
                if ch == "\\" and i + 1 < n:
                    advance()
                    buf.append(text[i])
                    advance()
                elif ch == '"':
                    advance()
                    break
                else:
                    buf.append(ch)
                    advance()
            emit(SAtom("string", "".join(buf), l0, c0))
        else:
            l0, c0 = line, col
            start = i
            while i < n and not text[i].isspace() and text[i] not in "()|;\"":
                advance()
            emit(_atom(text[start:i], l0, c0))
    if stack:
        lst = stack[-1]
        raise ParseError("unbalanced '(' (list never closed)", lst.line, lst.col)
    return forms


def _atom(tok: str, line: int, col: int) -> SAtom:
    if _NUMBER.match(tok):

        return SAtom("number", Fraction(tok), line, col)
    if tok.startswith("?"):
        if len(tok) == 1:
            raise ParseError("bare '?' is not a variable", line, col)
        return SAtom("variable", tok, line, col)
    if tok.startswith(":"):
        return SAtom("keyword", tok, line, col)
    return SAtom("symbol", tok, line, col)


# ---------------------------------------------------------------------------
# s-expressions -> terms


def to_term(x: SExpr):
    if isinstance(x, SAtom):
        if x.kind == "number":
            return Number(x.value)
        if x.kind == "variable":
            return Variable(x.value)
        if x.kind == "string":
            return String(x.value)
        if x.kind == "bar":
            raise ParseError("'|' outside a pform entry", x.line, x.col)
        return Symbol(x.value)
    if not x.items:
        raise ParseError("empty list is not a term", x.line, x.col)
    head = x.items[0]
    if not isinstance(head, SAtom) or head.kind not in ("symbol", "keyword"):
        raise ParseError("compound term must start with a symbol", x.line, x.col)
    if len(x.items) < 2:
        raise ParseError(f"({head.value}) needs at least one argument", x.line, x.col)
    return Compound(head.value, tuple(to_term(a) for a in x.items[1:]))


def _is_atom(x, kind=None, value=None) -> bool:
    return (isinstance(x, SAtom) and (kind is None or x.kind == kind)
            and (value is None or x.value == value))


def _head(x) -> Optional[str]:
    if isinstance(x, SList) and x.items and _is_atom(x.items[0]) and x.items[0].kind in ("symbol", "keyword"):
        return x.items[0].value
    return None


def _loc(x):
    return x.line, x.col


def _labelled(items: list, start: int, what: str):
    """Parse ``PAT [:label ?V]`` groups from ``items[start:]`` until a keyword
    other than :label.  Returns (patterns, next_index)."""
    pats = []
    i = start
    while i < len(items):
        x = items[i]
        if _is_atom(x, "keyword"):
            if x.value == ":label":
                raise ParseError(f":label with nothing to label in {what}", *_loc(x))
            break
        term = to_term(x)
        label = None
        i += 1
        if i < len(items) and _is_atom(items[i], "keyword", ":label"):
            if i + 1 >= len(items) or not _is_atom(items[i + 1], "variable"):
                raise ParseError(":label must be followed by a ?variable", *_loc(items[i]))
            label = Variable(items[i + 1].value)
            i += 2
        pats.append(Pattern(term, label))
    return pats, i


def _conjunction(x: SExpr, what: str) -> list:
    """A single labelled pattern or an (and ...) group, as a list of Patterns."""
    if _head(x) == "and":
        pats, i = _labelled(x.items, 1, what)
        if i != len(x.items) or not pats:
            raise ParseError(f"malformed (and ...) in {what}", *_loc(x))
        return pats
    return [Pattern(to_term(x))]


def _body_groups(items: list, what: str) -> list:
    """Split ``items`` into ``(sexpr, patterns)`` groups: a labelled pattern,
    an (and ...) conjunction, or a (-><- ...) form (patterns None)."""
    groups = []
    i = 0
    while i < len(items):
        x = items[i]
        if _is_atom(x, "keyword"):
            raise ParseError(f"unexpected {x.value} in {what}", *_loc(x))
        label = None
        if i + 1 < len(items) and _is_atom(items[i + 1], "keyword", ":label"):
            if i + 2 >= len(items) or not _is_atom(items[i + 2], "variable"):
                raise ParseError(":label must be followed by a ?variable", *_loc(items[i + 1]))
            label = Variable(items[i + 2].value)
            i += 3
        else:
            i += 1
        head = _head(x)
        if head in ("and", COMBINED) and label is not None:
            raise ParseError(f"cannot label a ({head} ...) form", *_loc(x))
        if head == "and":
            groups.append((x, _conjunction(x, what)))
        elif head == COMBINED:
            groups.append((x, None))
        else:
            groups.append((x, [Pattern(to_term(x), label)]))
    return groups


# ---------------------------------------------------------------------------
# pforms


def _is_header(x) -> bool:
    return (isinstance(x, SList) and all(isinstance(a, SAtom) for a in x.items)
            and sum(1 for a in x.items if _is_atom(a, "symbol", ARROW)) == 1)


def _has_inline_arrow(x) -> bool:
    return isinstance(x, SList) and any(_is_atom(a, "symbol", ARROW) for a in x.items)


def _is_entry(x) -> bool:
    return (isinstance(x, SList) and len(x.items) == 2 and isinstance(x.items[0], SList)
            and any(_is_atom(a, "bar") for a in x.items[0].items))


def _parse_header(atoms: list, where) -> tuple:
    k = next(j for j, a in enumerate(atoms) if _is_atom(a, "symbol", ARROW))
    parents, child = atoms[:k], atoms[k + 1:]
    if len(child) != 1:
        raise ParseError("pform header needs exactly one child label after '->'", *where)
    for a in (*parents, *child):
        if a.kind != "variable":
            raise ParseError(f"pform labels must be ?variables, got {a.value}", *_loc(a))
    return tuple(Variable(a.value) for a in parents), Variable(child[0].value)


def _parse_entry(x: SList) -> EntryTemplate:
    cond, expr = x.items
    bars = [j for j, a in enumerate(cond.items) if _is_atom(a, "bar")]
    if len(bars) != 1:
        raise ParseError("entry condition needs exactly one '|'", *_loc(cond))
    left, right = cond.items[:bars[0]], cond.items[bars[0] + 1:]
    if len(left) != 1:
        raise ParseError("entry names exactly one child state before '|'", *_loc(cond))
    for a in (*left, *right):
        if not isinstance(a, SAtom):
            raise ParseError("entry states must be atoms", *_loc(a))
    return EntryTemplate(to_term(left[0]), tuple(to_term(a) for a in right), to_term(expr))


def _parse_pform_body(items: list, where) -> tuple:
    active = None
    entries = []
    i = 0
    while i < len(items):
        x = items[i]
        if _is_atom(x, "keyword", ":active"):
            if i + 1 >= len(items) or not isinstance(items[i + 1], SList):
                raise ParseError(":active needs a list of states", *_loc(x))
            active = tuple(to_term(a) for a in items[i + 1].items)
            i += 2
            continue
        if _is_entry(x):
            entries.append(_parse_entry(x))
        elif isinstance(x, SList) and x.items and all(_is_entry(e) for e in x.items):
            entries.extend(_parse_entry(e) for e in x.items)
        else:
            raise ParseError("expected a pform entry ((child | parents...) expr)", *_loc(x))
        i += 1
    return tuple(entries), active


def _parse_pform(x: SList) -> PFormTemplate:
    if x.items and _is_header(x.items[0]):
        parents, child = _parse_header(x.items[0].items, _loc(x.items[0]))
        entries, active = _parse_pform_body(x.items[1:], _loc(x))
    elif _has_inline_arrow(x):
        k = next(j for j, a in enumerate(x.items) if _is_atom(a, "symbol", ARROW))
        parents, child = _parse_header(x.items[:k + 2], _loc(x))
        entries, active = _parse_pform_body(x.items[k + 2:], _loc(x))
    else:
        raise ParseError("pform must start with (?PARENT... -> ?CHILD)", *_loc(x))
    return PFormTemplate(parents, child, entries, active)


def _parse_prob(x: SExpr) -> list:
    if not isinstance(x, SList) or not x.items:
        raise ParseError(":prob needs a pform list", *_loc(x))
    if _is_header(x.items[0]) or _has_inline_arrow(x):
        return [_parse_pform(x)]
    if all(isinstance(p, SList) for p in x.items):
        return [_parse_pform(p) for p in x.items]
    raise ParseError("cannot read :prob argument", *_loc(x))


# ---------------------------------------------------------------------------
# forms


def _check_rule(rule: Rule, where) -> Rule:
    for kind, msg in rule_problems(rule):
        if kind == "unbound-label":
            raise UnboundLabel(msg, *where)
        raise ParseError(msg, *where)
    return rule


def _parse_forward(x: SList) -> Rule:
    items = x.items[1:]
    where = _loc(x)
    split = next((j for j, a in enumerate(items) if _is_atom(a, "keyword", ":prob")), len(items))
    head_items, tail = items[:split], items[split:]
    if not head_items:
        raise ParseError("forward rule needs a trigger", *where)
    groups = _body_groups(head_items, "forward rule")
    if len(groups) != 2 or groups[0][1] is None or len(groups[0][1]) != 1:
        raise ParseError("forward rule is (-> TRIGGER [:label ?L] BODY :prob ...)", *where)
    trigger = groups[0][1][0]
    body_x, body = groups[1]
    mode, antecedents, consequents = Mode.FORWARD, (), tuple(body or ())
    if body is None:
        inner = _body_groups(body_x.items[1:], COMBINED)
        if len(inner) != 2 or any(p is None for _, p in inner):
            raise ParseError("(-><- ANTECEDENTS CONSEQUENTS) takes two parts", *_loc(body_x))
        mode, antecedents, consequents = Mode.COMBINED, tuple(inner[0][1]), tuple(inner[1][1])
    pforms = []
    j = 0
    while j < len(tail):
        kw = tail[j]
        if not _is_atom(kw, "keyword", ":prob"):
            raise ParseError(f"unexpected {kw} in forward rule", *_loc(kw))
        if j + 1 >= len(tail):
            raise ParseError(":prob needs an argument", *_loc(kw))
        pforms.extend(_parse_prob(tail[j + 1]))
        j += 2
    rule = Rule(mode, trigger, consequents, antecedents, tuple(pforms), where)
    return _check_rule(rule, where)


def _parse_backward(x: SList) -> Rule:
    items = x.items[1:]
    where = _loc(x)
    if len(items) < 2:
        raise ParseError("backward rule is (<- QUERY ANTECEDENT...)", *where)
    query = Pattern(to_term(items[0]))
    ants = []
    for a in items[1:]:
        if _is_atom(a, "keyword"):
            raise ParseError(f"unexpected {a.value} in backward rule", *_loc(a))
        ants.extend(_conjunction(a, "backward rule"))
    return _check_rule(Rule(Mode.BACKWARD, query, (), tuple(ants)), where)


def _fn_spec(x: SExpr) -> Optional[FnSpec]:
    if _is_atom(x, "symbol"):
        return None if x.value == "nil" else FnSpec(x.value)
    if isinstance(x, SList) and _head(x):
        args = []
        for a in x.items[1:]:
            if not isinstance(a, SAtom) or a.kind not in ("number", "symbol"):
                raise ParseError("function arguments are numbers or parameter names", *_loc(a))
            args.append(to_term(a))
        return FnSpec(x.items[0].value, tuple(args))
    raise ParseError("expected nil, a function name or (name arg...)", *_loc(x))


def _symbol_arg(x, what) -> str:
    if not _is_atom(x, "symbol"):
        raise ParseError(f"{what} must be a symbol", *_loc(x))
    return x.value


def parse_form(x: SExpr):
    if not isinstance(x, SList):
        raise ParseError(f"top-level atom {x.value!r}; expected a parenthesized form", *_loc(x))
    if not x.items:
        raise ParseError("empty form", *_loc(x))
    head = x.items[0]
    if not isinstance(head, SAtom) or head.kind != "symbol":
        raise UnknownFormHead("form head must be a symbol", *_loc(x))
    name = head.value
    args = x.items[1:]
    if name == ARROW:
        return _parse_forward(x)
    if name == BACK:
        return _parse_backward(x)
    if name in ("defpreddist", "defpredist"):
        if len(args) != 3:
            raise ParseError("(defpreddist PRED PRIOR-FN POSTERIOR-FN)", *_loc(x))
        return DistDeclaration(_symbol_arg(args[0], "predicate"), _fn_spec(args[1]), _fn_spec(args[2]))
    if name == "defstates":
        if len(args) == 2 and isinstance(args[1], SList):
            states = args[1].items
        else:
            states = args[1:]
        if len(states) < 2:
            raise ParseError("a state space needs at least two states", *_loc(x))
        return StatesDeclaration(
            _symbol_arg(args[0], "predicate"), tuple(_symbol_arg(s, "state") for s in states)
        )
    if name == "defparam":
        if len(args) != 2 or not _is_atom(args[1], "number"):
            raise ParseError("(defparam NAME NUMBER)", *_loc(x))
        return PriorParam(_symbol_arg(args[0], "parameter name"), Number(args[1].value))
    if name == "index":
        if len(args) != 1:
            raise ParseError("(index TERM)", *_loc(x))
        return IndexForm(to_term(args[0]))
    if name == "assert-function":
        if len(args) != 2:
            raise ParseError("(assert-function PREDICATE ACTION)", *_loc(x))
        return AssertActionBinding(_symbol_arg(args[0], "predicate"), _symbol_arg(args[1], "action"))
    if name in RESERVED_HEADS or name.startswith("def"):
        raise UnknownFormHead(f"unknown form ({name} ...)", *_loc(x))
    term = to_term(x)
    if not is_ground(term):
        raise ParseError(f"fact {term} has variables; use (index ...) for patterns", *_loc(x))
    return Fact(term)


def parse_ruleset(text: str) -> list:
    """Parse a whole file.  Any error aborts before anything is returned."""
    return [parse_form(x) for x in read(text)]


def parse_term(text: str):
    forms = read(text)
    if len(forms) != 1:
        raise ParseError(f"expected one term, found {len(forms)}", 1, 1)
    return to_term(forms[0])


# ---------------------------------------------------------------------------
# serializer


def _pattern(p: Pattern) -> str:
    return str(p.term) if p.label is None else f"{p.term} :label {p.label}"


def _group(pats) -> str:
    if len(pats) == 1:
        return _pattern(pats[0])
    return "(and " + " ".join(_pattern(p) for p in pats) + ")"


def _pform(tpl: PFormTemplate, indent: str) -> str:
    header = "(" + " ".join([*map(str, tpl.parent_labels), ARROW, str(tpl.child_label)]) + ")"
    parts = [header]
    if tpl.active is not None:
        parts.append(":active (" + " ".join(map(str, tpl.active)) + ")")
    for e in tpl.entries:
        cond = " ".join([str(e.child_state), "|", *map(str, e.parent_states)])
        parts.append(f"(({cond}) {e.expr})")
    return "(" + ("\n" + indent + " ").join(parts) + ")"


def serialize_item(item) -> str:
    if isinstance(item, Fact):
        return str(item.term)
    if isinstance(item, IndexForm):
        return f"(index {item.term})"
    if isinstance(item, DistDeclaration):
        prior = "nil" if item.prior_fn is None else str(item.prior_fn)
        post = "nil" if item.posterior_fn is None else str(item.posterior_fn)
        return f"(defpreddist {item.predicate} {prior} {post})"
    if isinstance(item, StatesDeclaration):
        return f"(defstates {item.predicate} {' '.join(item.states)})"
    if isinstance(item, AssertActionBinding):
        return f"(assert-function {item.predicate} {item.action})"
    if isinstance(item, PriorParam):
        return f"(defparam {item.name} {item.value})"
    if isinstance(item, Rule):
        if item.mode is Mode.BACKWARD:
            return f"({BACK} {item.trigger.term} {_group(item.antecedents)})"
        lines = [f"({ARROW} {_pattern(item.trigger)}"]
        if item.mode is Mode.COMBINED:
            lines.append(f"    ({COMBINED} {_group(item.antecedents)}")
            lines.append(f"      {_group(item.consequents)})")
        else:
            lines.append(f"    {_group(item.consequents)}")
        for tpl in item.pforms:
            lines.append("    :prob " + _pform(tpl, "          "))
        return "\n".join(lines) + ")"
    raise TypeError(f"cannot serialize {item!r}")


def serialize(items) -> str:
    """Canonical text for parsed items; ``parse_ruleset`` inverts it."""
    return "".join(serialize_item(x) + "\n" for x in items)
