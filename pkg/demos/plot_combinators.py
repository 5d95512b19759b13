"""
CPT combinators side by side
============================

One boolean child with two single-parent pforms, built four ways.  Rows are
indexed by the parents' states in the order the pforms introduced them.
"""

import itertools

from bnforge import Engine, parse_ruleset, parse_term
from bnforge.dists import DistContext, DistDeclaration, FnSpec, build_cpt
from bnforge.graph import BeliefGraph, Entry, PForm

g = BeliefGraph()
a = g.add_node(parse_term("(cause a)"))
b = g.add_node(parse_term("(cause b)"))
v = g.add_node(parse_term("(effect v)"))
g.attach_pform(PForm((a.id,), v.id, (Entry("t", ("t",), parse_term("0.9")), Entry("t", ("f",), parse_term("0.05")))))
g.attach_pform(PForm((b.id,), v.id, (Entry("t", ("t",), parse_term("0.8")),)))

for name in ("xor-dist", "noisy-or", "noisy-and"):
    decl = DistDeclaration("effect", None, FnSpec(name))
    cpt = build_cpt(v, decl, DistContext(g, {"effect": decl}))
    print(name)
    for vec in itertools.product("tf", repeat=2):
        print(f"  a={vec[0]} b={vec[1]}  P(v=t)={cpt.prob('t', vec):.4f}")

# a full table is read straight off a single pform; one state per row may be
# left out and takes the remaining mass
engine = Engine()
engine.load(parse_ruleset("""
(defstates weather sun rain snow)
(defpreddist forecast (bernoulli 0.3) xor-dist)
(-> (forecast ?d) :label ?F
    (weather ?d) :label ?W
    :prob ((?F -> ?W) ((sun | t) 0.7) ((rain | t) 0.2) ((sun | f) 0.1) ((rain | f) 0.6)))
"""))
engine.assert_fact(parse_term("(forecast monday)"))
cpt = engine.cpt("(weather monday)")
for vec, row in cpt.rows():
    print(f"  forecast={vec[0]}  " + "  ".join(f"{s}={x:.2f}" for s, x in zip(cpt.states, row)))
