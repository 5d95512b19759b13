"""
Collecting candidate referents for a pronoun
============================================

Every known instance whose frame is gender-compatible with the pronoun
becomes a parent of the pronoun's has-referent node.  The probability that a
frame is referred to by a pronoun comes from a host function registered on
the engine.
"""

from bnforge import Engine, junction_tree_evaluate, load_bundled, parse_term

engine = Engine()
engine.load(load_bundled("pronoun"))
engine.register_function("ref-prob", lambda ctx, frame, pronoun: {"man": 0.6, "boy": 0.3}.get(frame.name, 0.1))

for f in ["(inst j1 man)", "(inst b1 boy)", "(inst g1 girl)", "(heard w3 he)"]:
    engine.assert_fact(parse_term(f))

ref = engine.graph.find("(has-referent w3)")
print("candidates:", [engine.graph.nodes[p].name for p in ref.parents])

marginals = junction_tree_evaluate(engine.network())
for nid, dist in sorted(marginals.items()):
    print(f"  {engine.graph.nodes[nid].name:20s} P(t)={dist[0]:.4f}")
