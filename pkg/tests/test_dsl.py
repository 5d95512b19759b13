import pytest

from bnforge import Engine, load_bundled, parse_ruleset, serialize
from bnforge.dists import DistDeclaration
from bnforge.dsl import parse_term, read, serialize_item
from bnforge.errors import ParseError, UnboundLabel, UnknownFormHead
from bnforge.rules import (
    AssertActionBinding, Fact, IndexForm, Mode, PriorParam, Rule, StatesDeclaration,
)

SHIPPED = ("genetics", "condition", "wordsense", "pronoun", "kinship")

MALFORMED = {
    "((unbalanced": (1, 2),
    "(child C A B))": (1, 14),
    "(-> (a ?x)\n    (b ?x) :prob ((?u -> ?v) ((t|t) 1)))": (1, 1),
    "(setf x 1)": (1, 1),
    '(fact "open string': (1, 7),
    "\n\n  (child ?x A B)": (3, 3),
    "(-> (a ?x) :label)": (1, 12),
    "(defstates colour)": (1, 1),
    "(-> (a ?x) :label ?A (b ?x) :label ?B :prob ((?A -> ?B) ((t | t t) 1)))": (1, 1),
}


@pytest.mark.parametrize("name", SHIPPED)
def test_round_trip(name):
    items = load_bundled(name)
    text = serialize(items)
    again = parse_ruleset(text)
    assert again == items
    assert serialize(again) == text


def test_genetics_contents():
    items = load_bundled("genetics")
    rules = [i for i in items if isinstance(i, Rule)]
    facts = [i for i in items if isinstance(i, Fact)]
    assert len(rules) == 2 and len(facts) == 1
    assert all(r.mode is Mode.FORWARD for r in rules[:1]) and rules[1].mode is Mode.COMBINED
    assert {type(i) for i in items} == {Rule, Fact, DistDeclaration, StatesDeclaration, PriorParam,
                                        AssertActionBinding}
    assert str(facts[0].term) == "(penetrance-prob 1)"


def test_unbound_label():
    with pytest.raises(UnboundLabel) as exc:
        parse_ruleset("(-> (a ?x) (b ?x) :prob ((?u -> ?v) ((t|t) 1)))")
    assert exc.value.line == 1


def test_unbalanced_reports_line_one():
    with pytest.raises(ParseError) as exc:
        parse_ruleset("((unbalanced")
    assert exc.value.line == 1


@pytest.mark.parametrize("text,where", MALFORMED.items())
def test_malformed_inputs_are_located_and_load_nothing(text, where):
    engine = Engine()
    with pytest.raises(ParseError) as exc:
        engine.load(parse_ruleset(text))
    assert (exc.value.line, exc.value.col) == where
    assert str(exc.value).startswith(f"line {where[0]}, column {where[1]}:")
    assert engine.db.statements == [] and engine.rules == []


def test_failing_file_loads_nothing_even_after_good_forms():
    engine = Engine()
    with pytest.raises(ParseError):
        engine.load(parse_ruleset("(good fact)\n(-> (a ?x) (b ?x) :prob ((?u -> ?v) ((t|t) 1)))"))
    assert engine.db.statements == []


def test_unknown_head():
    with pytest.raises(UnknownFormHead):
        parse_ruleset("(defun foo (x) x)")


def test_empty_serialization():
    assert serialize([]) == ""


def test_fact_is_one_line():
    [fact] = parse_ruleset("(child C A B)")
    assert serialize_item(fact) == "(child C A B)"
    assert serialize([fact]) == "(child C A B)\n"


def test_form_kinds():
    items = parse_ruleset("""
        (defstates genotype a1a1 a1a2 a2a2)
        (defstates phenotype (present absent))
        (defpredist genotype (hardy-weinberg 0.5) transmission)
        (index (word-sense went go1 0.9))
        (assert-function see assert-observation)
        (defparam default-prior 0.02)
        (<- (parent ?p ?c) (child ?c ?p ?_))
    """)
    kinds = [type(i) for i in items]
    assert kinds == [StatesDeclaration, StatesDeclaration, DistDeclaration, IndexForm,
                     AssertActionBinding, PriorParam, Rule]
    assert items[1].states == ("present", "absent")
    assert items[-1].mode is Mode.BACKWARD


def test_inline_pform_spelling_matches_canonical():
    a = parse_ruleset("(-> (c ?x) :label ?C (e ?x) :label ?E :prob ((?E -> ?C) ((t | t) 0.9) ((t | f) :p)))")
    b = parse_ruleset("(-> (c ?x) :label ?C (e ?x) :label ?E :prob (?E -> ?C ((t | t) 0.9) ((t | f) :p)))")
    assert a == b


def test_reader_atoms():
    [x] = read('(f ?x :p 1/2 -3 2.5e-1 "s t" |)')
    kinds = [a.kind for a in x.items]
    assert kinds == ["symbol", "variable", "keyword", "number", "number", "number", "string", "bar"]
    t = parse_term("(f 2.5e-1)")
    assert str(t) == "(f 0.25)"


def test_comments_ignored():
    assert parse_ruleset("; nothing here\n(a b) ; trailing\n") == parse_ruleset("(a b)")
