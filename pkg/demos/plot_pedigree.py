"""
Genotype posteriors in a small pedigree
=======================================

Founders A, B and F; C is a child of A and B, D a child of B and F, and E a
child of C and D.  E shows a recessive condition.  The rules build the
network as the facts arrive; we then read off every genotype posterior for
two allele frequencies.
"""

from bnforge import Engine, junction_tree_evaluate, load_bundled, parse_term

facts = ["(child C A B)", "(child D B F)", "(child E C D)", "(observed-phenotype E present)"]

for p in (0.5, 0.01):
    engine = Engine()
    engine.load(load_bundled("genetics"))
    engine.set_param("allele-p", p)
    for f in facts:
        engine.assert_fact(parse_term(f))

    marginals = junction_tree_evaluate(engine.network())
    print(f"allele frequency p = {p}")
    for nid in sorted(marginals):
        node = engine.graph.nodes[nid]
        pairs = "  ".join(f"{s}={x:.4f}" for s, x in zip(node.states, marginals[nid]))
        print(f"  {node.name:16s} {pairs}")

# the structure: six genotype nodes, one phenotype node
print(engine.graph.to_dot())

# B is a grandparent of E twice over, which is why B's posterior moves most
engine.load(load_bundled("kinship"))
print([str(s[parse_term("?g")]) for s in engine.answer_query(parse_term("(grandparent ?g E)"))])
