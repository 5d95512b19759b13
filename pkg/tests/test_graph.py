import pytest

from bnforge.errors import ConflictingEvidence, CycleCreated, DuplicateEntry, DuplicateNode, StateMismatch
from bnforge.graph import BeliefGraph, Entry, PForm

GENO = ("a1a1", "a1a2", "a2a2")


def boolean_graph(*names):
    g = BeliefGraph()
    return g, {n: g.add_node(n) for n in names}


def arc(g, nodes, parents, child, entries=()):
    return g.attach_pform(PForm(tuple(nodes[p].id for p in parents), nodes[child].id, tuple(entries)))


def test_add_nodes_with_state_spaces():
    g = BeliefGraph()
    a = g.add_node("(genotype A)", GENO)
    e = g.add_node("(phenotype E)", ("present", "absent"))
    assert a.states == GENO and not a.parents
    assert e.is_boolean and not a.is_boolean
    with pytest.raises(DuplicateNode):
        g.add_node("(genotype A)", GENO)


def test_two_pforms_union_of_parents():
    g, n = boolean_graph("a", "b", "c", "d", "e", "v")
    arc(g, n, "abc", "v")
    arc(g, n, "de", "v")
    assert [g.nodes[p].name for p in n["v"].parents] == list("abcde")
    assert len(n["v"].pforms) == 2


def test_cycle_rejected_and_graph_unchanged():
    g, n = boolean_graph("x", "y", "z")
    arc(g, n, "x", "y")
    arc(g, n, "y", "z")
    before = (list(g.arcs()), [list(x.pforms) for x in g])
    with pytest.raises(CycleCreated):
        arc(g, n, "z", "x")
    with pytest.raises(CycleCreated):
        arc(g, n, "x", "x")
    assert (list(g.arcs()), [list(x.pforms) for x in g]) == before


def test_duplicate_pform_is_noop():
    g, n = boolean_graph("x", "y")
    assert arc(g, n, "x", "y", [Entry("t", ("t",), 0.5)])
    assert not arc(g, n, "x", "y", [Entry("t", ("t",), 0.5)])
    assert len(n["y"].pforms) == 1


def test_entry_validation():
    g, n = boolean_graph("x", "y")
    with pytest.raises(DuplicateEntry):
        arc(g, n, "x", "y", [Entry("t", ("t",), 0.5), Entry("t", ("t",), 0.6)])
    with pytest.raises(StateMismatch):
        arc(g, n, "x", "y", [Entry("maybe", ("t",), 0.5)])
    with pytest.raises(StateMismatch):
        arc(g, n, "x", "y", [Entry("t", ("t", "f"), 0.5)])


def test_evidence():
    g = BeliefGraph()
    e = g.add_node("(phenotype E)", ("present", "absent"))
    g.add_evidence(e, "present")
    assert e.observed == "present"
    g.add_evidence(e, ":present")
    with pytest.raises(ConflictingEvidence):
        g.add_evidence(e, "absent")


def test_dsep_chain_blocked_by_observed_middle():
    g, n = boolean_graph("X", "Y", "Z")
    arc(g, n, "X", "Y")
    arc(g, n, "Y", "Z")
    got = g.d_connected_set({n["X"].id}, evidence={n["Y"].id})
    assert {g.nodes[i].name for i in got} == {"X", "Y"}


def test_dsep_unobserved_collider_blocks():
    g, n = boolean_graph("X", "Y", "Z")
    arc(g, n, "XY", "Z")
    got = g.d_connected_set({n["X"].id}, evidence=set())
    assert {g.nodes[i].name for i in got} == {"X", "Z"}


def test_dsep_collider_opened_by_observed_descendant():
    g, n = boolean_graph("X", "Y", "Z", "W")
    arc(g, n, "XY", "Z")
    arc(g, n, "Z", "W")
    got = g.d_connected_set({n["X"].id}, evidence={n["W"].id})
    assert {g.nodes[i].name for i in got} == {"X", "Y", "Z", "W"}


def test_dsep_pedigree_reaches_everything(pedigree):
    g = pedigree.graph
    got = g.d_connected_set({g.find("(genotype A)").id}, evidence={g.find("(phenotype E)").id})
    assert got == set(g.nodes)


def test_pedigree_structure(pedigree):
    g = pedigree.graph
    names = sorted(n.name for n in g)
    assert names == sorted([f"(genotype {x})" for x in "ABCDEF"] + ["(phenotype E)"])
    arcs = {(g.nodes[p].name, g.nodes[c].name) for p, c in g.arcs()}
    G = "(genotype {})".format
    assert arcs == {(G("A"), G("C")), (G("B"), G("C")), (G("B"), G("D")), (G("F"), G("D")),
                    (G("C"), G("E")), (G("D"), G("E")), (G("E"), "(phenotype E)")}


def test_remove_nodes_recomputes_parents():
    g, n = boolean_graph("a", "b", "c")
    arc(g, n, "a", "c")
    arc(g, n, "b", "c")
    g.remove_nodes({n["a"].id})
    assert n["c"].parents == [n["b"].id]
    assert len(n["c"].pforms) == 1


def test_snapshot_is_independent(pedigree):
    snap = pedigree.graph.snapshot()
    snap.add_evidence(snap.find("(genotype A)"), "a1a1")
    assert pedigree.graph.find("(genotype A)").evidence is None
    assert snap.node_for(snap.find("(genotype B)").statement) is snap.find("(genotype B)")


def test_dot_export(pedigree):
    dot = pedigree.graph.to_dot()
    assert dot.count("->") == 7
    assert dot.count("label=") == 7
    assert 'fillcolor="gray70"' in dot
