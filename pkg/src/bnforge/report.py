"""Text and structured renderings of a belief graph and its marginals."""

from __future__ import annotations

import json

from .graph import BeliefGraph, Node


def _fmt_prob(x: float) -> str:
    s = f"{float(x):.9f}"
    return "0.000000000" if s == "-0.000000000" else s


def marginal_line(node: Node, dist) -> str:
    """``(genotype A) :: a1a1=0.250000000 a1a2=0.500000000 a2a2=0.250000000``
    followed by ``[evidence=s]``, ``[committed=s]`` or ``[rejected=s]``."""
    pairs = " ".join(f"{s}={_fmt_prob(p)}" for s, p in zip(node.states, dist))
    line = f"{node.name} :: {pairs}"
    if node.evidence is not None:
        line += f" [evidence={node.evidence}]"
    elif node.committed is not None:
        line += f" [{'rejected' if node.rejected else 'committed'}={node.committed}]"
    return line


def export_dict(graph: BeliefGraph, cpts: dict, marginals: dict) -> dict:
    nodes = sorted(graph.nodes.values(), key=lambda n: n.id)
    pforms = [pf for n in nodes for pf in n.pforms]
    return {
        "nodes": [
            {
                "id": n.id,
                "statement": n.name,
                "states": list(n.states),
                "evidence": n.evidence,
                "committed": n.committed,
            }
            for n in nodes
        ],
        "pforms": [
            {
                "parents": list(pf.parents),
                "child": pf.child,
                "entries": [
                    {"child_state": e.child_state, "parent_states": list(e.parent_states), "expr": str(e.expr)}
                    for e in pf.entries
                ],
            }
            for pf in pforms
        ],
        "cpts": [
            {
                "child": n.id,
                "parent_order": list(cpts[n.id].parent_order),
                "rows": [
                    {"parent_states": list(ps), "probs": [float(p) for p in row]}
                    for ps, row in cpts[n.id].rows()
                ],
            }
            for n in nodes
            if n.id in cpts
        ],
        "marginals": {
            n.name: {s: float(p) for s, p in zip(n.states, marginals[n.id])}
            for n in nodes
            if n.id in marginals
        },
    }


def export_json(graph: BeliefGraph, cpts: dict, marginals: dict) -> str:
    return json.dumps(export_dict(graph, cpts, marginals), indent=2) + "\n"
