"""Stand-alone reference computations shared by the tests.

Nothing here imports the package: each oracle is a direct, exact transcription
of the model it checks, using fractions and explicit loops.
"""

from fractions import Fraction
from itertools import product

GENOTYPES = ("a1a1", "a1a2", "a2a2")
ALLELES = {"a1a1": ("a1", "a1"), "a1a2": ("a1", "a2"), "a2a2": ("a2", "a2")}


def hardy_weinberg(p):
    p = Fraction(p)
    return {"a1a1": p * p, "a1a2": 2 * p * (1 - p), "a2a2": (1 - p) ** 2}


def mendel(child, mother, father):
    """P(child genotype | parents) by drawing one allele from each parent."""
    total = Fraction(0)
    for a in ALLELES[mother]:
        for b in ALLELES[father]:
            if tuple(sorted((a, b))) == ALLELES[child]:
                total += Fraction(1, 4)
    return total


def pedigree_posteriors(p, penetrance=1, evidence=True):
    """Genotype marginals for founders A, B, F; C=child(A,B), D=child(B,F),
    E=child(C,D), with E's phenotype observed present (present iff a1a1,
    with the given penetrance) when ``evidence`` is true."""
    prior = hardy_weinberg(p)
    names = ("A", "B", "F", "C", "D", "E")
    acc = {n: {g: Fraction(0) for g in GENOTYPES} for n in names}
    z = Fraction(0)
    for a, b, f, c, d, e in product(GENOTYPES, repeat=6):
        w = prior[a] * prior[b] * prior[f]
        w *= mendel(c, a, b) * mendel(d, b, f) * mendel(e, c, d)
        if evidence:
            w *= Fraction(penetrance) if e == "a1a1" else 0
        if w == 0:
            continue
        z += w
        for n, g in zip(names, (a, b, f, c, d, e)):
            acc[n][g] += w
    return {n: {g: v / z for g, v in acc[n].items()} for n in names}


def xor_dist_reference(pform_parents, states):
    """Line-by-line transcription of the deterministic exclusive-or procedure.

    ``pform_parents`` lists, per pform, the parent names it mentions; a pform
    is satisfied when all of those parents are true.  ``states`` maps each
    parent name to True/False.  Returns (P(true), P(false)).
    """
    number_true = sum(1 for parents in pform_parents if all(states[q] for q in parents))
    prob = {}
    for node_case in ("true", "false"):
        if node_case == "true":
            prob[node_case] = 1 if number_true == 1 else 0
        else:
            prob[node_case] = 0 if number_true == 1 else 1
    return prob["true"], prob["false"]


def word_sense_posteriors(senses, prior, leak_scale=100):
    """Two or more sense nodes, each a root with the given prior, explaining
    one observed word node under exclusive-or: exactly one true sense s gives
    P(word)=freq[s]; no true sense gives prior/leak_scale; more than one
    gives 0."""
    names = list(senses)
    post = {n: Fraction(0) for n in names}
    z = Fraction(0)
    for vals in product((True, False), repeat=len(names)):
        w = Fraction(1)
        for v in vals:
            w *= Fraction(prior) if v else 1 - Fraction(prior)
        on = [n for n, v in zip(names, vals) if v]
        if len(on) == 1:
            w *= Fraction(senses[on[0]])
        elif not on:
            w *= Fraction(prior) / leak_scale
        else:
            w *= 0
        z += w
        for n in on:
            post[n] += w
    return {n: post[n] / z for n in names}


if __name__ == "__main__":
    for p in ("1/2", "1/100"):
        post = pedigree_posteriors(Fraction(p))
        print("p =", p)
        for n, d in post.items():
            print("   ", n, {g: (str(v), float(v)) for g, v in d.items()})
    print(word_sense_posteriors({"go1": "9/10", "die1": "1/10"}, "1/100"))
