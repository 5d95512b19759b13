"""Rule-driven construction and exact evaluation of belief networks."""

from .dists import CPT, DistDeclaration, FnSpec, build_cpt
from .dsl import parse_ruleset, parse_term, serialize
from .errors import BNForgeError
from .graph import BeliefGraph, Entry, Node, PForm
from .inference import (
    Network,
    enumerate_marginals,
    evaluate_subset,
    junction_tree_evaluate,
    random_network,
    variable_elimination,
)
from .rules import Engine, Rule
from .session import LoopResult, Session, SessionOptions
from .terms import Compound, Number, String, Symbol, Variable, unify


def load_bundled(name: str) -> list:
    """Parse one of the shipped rulesets (``genetics``, ``wordsense`` ...)."""
    from importlib.resources import files

    stem = name[:-4] if name.endswith(".bnr") else name
    return parse_ruleset(files("bnforge.rulesets").joinpath(stem + ".bnr").read_text(encoding="utf-8"))


__all__ = [
    "BNForgeError", "BeliefGraph", "CPT", "Compound", "DistDeclaration", "Engine", "Entry", "FnSpec",
    "LoopResult", "Network", "Node", "Number", "PForm", "Rule", "Session", "SessionOptions", "String",
    "Symbol", "Variable", "build_cpt", "enumerate_marginals", "evaluate_subset", "junction_tree_evaluate",
    "load_bundled", "parse_ruleset", "parse_term", "random_network", "serialize", "unify",
    "variable_elimination",
]
