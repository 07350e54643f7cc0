import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from corefkit.align import MatchStrategy, align_documents
from corefkit.conllu import NodeId, parse_conllu
from corefkit.mentions import build_corefdoc
from corefkit.metrics import (
    MetricReport,
    b_cubed,
    blanc,
    ceaf_e,
    ceaf_similarity,
    conll_f1,
    evaluate,
    lea,
    mor,
    muc,
    zero_anaphora_score,
)

GOLD = [{"m1", "m2", "m3"}]
PRED = [{"m1", "m2"}, {"m3"}]

partition = st.lists(st.sets(st.integers(0, 12), min_size=1, max_size=5), max_size=5).map(
    lambda es: [e - set().union(*es[:i]) for i, e in enumerate(es) if e - set().union(*es[:i])]
)


# -- independent oracles ---------------------------------------------------------


def links(p):
    return {frozenset(x) for e in p for x in itertools.combinations(sorted(e), 2)}


def owner(p):
    return {a: i for i, e in enumerate(p) for a in e}


def muc_oracle(key, resp):
    """Recall side: merge atoms of each key entity through pairwise response links."""
    own = owner(resp)
    num = den = 0
    for e in key:
        parent = {a: a for a in e}

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for a, b in itertools.combinations(sorted(e), 2):
            if a in own and b in own and own[a] == own[b]:
                parent[find(a)] = find(b)
        num += len(e) - len({find(a) for a in e})
        den += len(e) - 1
    return Fraction(num, den) if den else Fraction(0)


def b3_oracle(key, resp):
    own_k, own_r = owner(key), owner(resp)
    total = Fraction(0)
    n = sum(len(e) for e in key)
    for a, i in own_k.items():
        k = key[i]
        r = resp[own_r[a]] if a in own_r else set()
        total += Fraction(len(k & r), len(k))
    return total / n if n else Fraction(0)


def ceaf_oracle(gold, pred):
    best = Fraction(0)
    g, p = list(gold), list(pred)
    if len(g) > len(p):
        g, p = p, g
    for perm in itertools.permutations(range(len(p)), len(g)):
        s = sum(Fraction(2 * len(g[i] & p[j]), len(g[i]) + len(p[j])) for i, j in enumerate(perm))
        best = max(best, s)
    return best


def blanc_oracle(gold, pred):
    ga, pa = set().union(*gold) if gold else set(), set().union(*pred) if pred else set()
    cg, cp = links(gold), links(pred)
    ng = {frozenset(x) for x in itertools.combinations(sorted(ga), 2)} - cg
    np_ = {frozenset(x) for x in itertools.combinations(sorted(pa), 2)} - cp

    def r(a, b):
        return Fraction(len(a & b), len(a)) if a else Fraction(0)

    if not (cg or cp) and not (ng or np_):
        v = Fraction(int(bool(ga) and ga == pa))
        return v, v
    if not (cg or cp):
        return r(ng, np_), r(np_, ng)
    if not (ng or np_):
        return r(cg, cp), r(cp, cg)
    return (r(cg, cp) + r(ng, np_)) / 2, (r(cp, cg) + r(np_, ng)) / 2


def f1(r, p):
    return 0 if r + p == 0 else 2 * r * p / (r + p)


# -- toy instance -----------------------------------------------------------------


def close(prf, r, p, f):
    return all(abs(a - float(b)) < 1e-9 for a, b in zip((prf.recall, prf.precision, prf.f1), (r, p, f)))


def test_toy_muc():
    assert close(muc(GOLD, PRED), Fraction(1, 2), 1, Fraction(2, 3))


def test_toy_b_cubed():
    assert close(b_cubed(GOLD, PRED), Fraction(5, 9), 1, Fraction(5, 7))


def test_toy_ceaf_e():
    assert abs(ceaf_similarity(GOLD, PRED) - 0.8) < 1e-12
    assert close(ceaf_e(GOLD, PRED), Fraction(4, 5), Fraction(2, 5), Fraction(8, 15))


def test_toy_lea_default_rule():
    assert close(lea(GOLD, PRED), Fraction(1, 3), 1, Fraction(1, 2))


def test_toy_lea_strict_singleton_rule():
    # the response singleton {m3} does not exist as a key singleton
    assert close(lea(GOLD, PRED, "singleton"), Fraction(1, 3), Fraction(2, 3), Fraction(4, 9))


def test_toy_blanc_by_pair_enumeration():
    r, p = blanc_oracle(GOLD, PRED)
    assert (r, p) == (Fraction(1, 6), Fraction(1, 2))
    assert close(blanc(GOLD, PRED), r, p, f1(r, p))


def test_toy_conll():
    rep = MetricReport(muc(GOLD, PRED), b_cubed(GOLD, PRED), ceaf_e(GOLD, PRED), blanc(GOLD, PRED),
                       lea(GOLD, PRED), muc(GOLD, PRED), 0.0)
    want = (Fraction(2, 3) + Fraction(5, 7) + Fraction(8, 15)) / 3
    assert abs(conll_f1(rep) - float(want)) < 1e-9
    assert abs(conll_f1(rep) - 0.63810) < 1e-5


# -- degenerate cases ----------------------------------------------------------------


@pytest.mark.parametrize("metric", [muc, b_cubed, ceaf_e, blanc, lea])
def test_identical_partitions(metric):
    p = [{1, 2, 3}, {4, 5}, {6}]
    assert close(metric(p, p), 1, 1, 1)


@pytest.mark.parametrize("metric", [muc, b_cubed, ceaf_e, blanc, lea])
def test_empty_prediction(metric):
    assert close(metric([{1, 2}, {3, 4}], []), 0, 0, 0)


def test_muc_all_singleton_prediction():
    assert close(muc([{1, 2, 3}], [{1}, {2}, {3}]), 0, 0, 0)


def test_blanc_single_entity_each_side():
    # coreference component perfect, non-coreference component vacuous
    assert close(blanc([{1, 2}], [{1, 2}]), 1, 1, 1)


# -- randomized oracles ---------------------------------------------------------------


def test_ceaf_against_permutations():
    rng = random.Random(3)
    for _ in range(200):
        atoms = list(range(rng.randint(1, 14)))

        def part():
            es = [set() for _ in range(rng.randint(1, 7))]
            for a in rng.sample(atoms, rng.randint(1, len(atoms))):
                rng.choice(es).add(a)
            return [e for e in es if e]

        g, p = part(), part()
        assert abs(ceaf_similarity(g, p) - float(ceaf_oracle(g, p))) < 1e-9


@settings(max_examples=300, deadline=None)
@given(partition, partition)
def test_against_oracles(g, p):
    assert abs(muc(g, p).recall - float(muc_oracle(g, p))) < 1e-9
    assert abs(muc(g, p).precision - float(muc_oracle(p, g))) < 1e-9
    assert abs(b_cubed(g, p).recall - float(b3_oracle(g, p))) < 1e-9
    assert abs(b_cubed(g, p).precision - float(b3_oracle(p, g))) < 1e-9
    r, pr = blanc_oracle(g, p)
    assert close(blanc(g, p), r, pr, f1(r, pr))


@settings(max_examples=200, deadline=None)
@given(partition, partition)
def test_swapping_sides_swaps_recall_and_precision(g, p):
    for metric in (muc, b_cubed, ceaf_e, blanc, lea):
        a, b = metric(g, p), metric(p, g)
        assert math.isclose(a.recall, b.precision, abs_tol=1e-12)
        assert math.isclose(a.precision, b.recall, abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(partition, partition, st.permutations(range(13)))
def test_atom_renaming_invariance(g, p, perm):
    rg = [{perm[a] for a in e} for e in g]
    rp = [{perm[a] for a in e} for e in p]
    for metric in (muc, b_cubed, ceaf_e, blanc, lea):
        assert metric(g, p) == pytest.approx(metric(rg, rp))


@settings(max_examples=200, deadline=None)
@given(partition)
def test_bounds(g):
    p = [e for e in g[::-1]]
    for metric in (muc, b_cubed, ceaf_e, blanc, lea):
        s = metric(g, p)
        assert 0 <= s.recall <= 1 and 0 <= s.precision <= 1 and 0 <= s.f1 <= 1


# -- mention-level scores ------------------------------------------------------------


def tree_doc(heads, zeros=()):
    lines = []
    for w, h in sorted(heads.items()):
        lines.append("\t".join([str(w), f"w{w}", "_", "X", "_", "_", str(h), "root" if h == 0 else "dep", "_", "_"]))
        for k, (after, parent) in enumerate([z for z in zeros if z[0] == w], 1):
            lines.append("\t".join([f"{w}.{k}", "_", "_", "PRON", "_", "_", "_", "_", f"{parent}:nsubj", "_"]))
    (doc,) = parse_conllu("\n".join(lines) + "\n\n")
    return doc


def n(*ws):
    return [NodeId(0, w) for w in ws]


def test_mor_partial_overlap():
    doc = tree_doc({1: 0, 2: 1, 3: 4, 4: 2, 5: 4})
    gold = build_corefdoc(doc, [("a", n(3, 4, 5), None)])
    pred = build_corefdoc(doc, [("b", n(4, 5), None)])
    _, al = align_documents(gold, pred, MatchStrategy(include_singletons=True))
    assert close(mor(al), Fraction(2, 3), 1, Fraction(4, 5))


def test_zero_in_wrong_cluster_not_resolved():
    doc = tree_doc({1: 0, 2: 1, 3: 1, 4: 1}, zeros=[(2, 2)])
    z = NodeId(0, 2, 1)
    gold = build_corefdoc(doc, [("a", n(1), None), ("a", [z], None), ("b", n(3), None), ("b", n(4), None)])
    pred = build_corefdoc(doc, [("x", n(1), None), ("y", [z], None), ("y", n(3), None), ("y", n(4), None)])
    _, al = align_documents(gold, pred, MatchStrategy(include_singletons=True))
    s = zero_anaphora_score(al)
    assert s.recall == 0.0


def test_zero_correct_cluster_resolved():
    doc = tree_doc({1: 0, 2: 1, 3: 1}, zeros=[(2, 2)])
    z = NodeId(0, 2, 1)
    gold = build_corefdoc(doc, [("a", n(1), None), ("a", [z], None), ("b", n(3), None)])
    _, al = align_documents(gold, gold, MatchStrategy(include_singletons=True))
    assert close(zero_anaphora_score(al), 1, 1, 1)


def test_zero_absent_from_prediction():
    doc = tree_doc({1: 0, 2: 1, 3: 1}, zeros=[(2, 2)])
    z = NodeId(0, 2, 1)
    gold = build_corefdoc(doc, [("a", n(1), None), ("a", [z], None), ("a", n(3), None)])
    pred = build_corefdoc(doc, [("x", n(1), None), ("x", n(3), None)])
    _, al = align_documents(gold, pred)
    assert close(zero_anaphora_score(al), 0, 0, 0)


def test_zero_score_absent_without_gold_zeros():
    doc = tree_doc({1: 0, 2: 1})
    cd = build_corefdoc(doc, [("a", n(1), None), ("a", n(2), None)])
    _, al = align_documents(cd, cd)
    assert zero_anaphora_score(al) is None


# -- aggregation -----------------------------------------------------------------------


def test_two_documents_sum_counts():
    doc = tree_doc({1: 0, 2: 1, 3: 1, 4: 1})
    g1 = build_corefdoc(doc, [("a", n(1), None), ("a", n(2), None), ("a", n(3), None)])
    p1 = build_corefdoc(doc, [("x", n(1), None), ("x", n(2), None), ("y", n(3), None)])
    g2 = build_corefdoc(doc, [("a", n(1), None), ("a", n(2), None)])
    p2 = build_corefdoc(doc, [("x", n(1), None), ("x", n(2), None)])
    rep = evaluate([g1, g2], [p1, p2], MatchStrategy(include_singletons=True))
    # MUC: recall (1 + 1) / (2 + 1), precision (1 + 1) / (1 + 1)
    assert close(rep.muc, Fraction(2, 3), 1, Fraction(4, 5))
    # B3 recall: (5/9 * 3 + 1 * 2) / 5
    assert abs(rep.b3.recall - float((Fraction(5, 3) + 2) / 5)) < 1e-12
    # CEAF-e: similarity 0.8 + 1 over 2 gold entities and 3 predicted ones
    assert abs(rep.ceaf_e.recall - 0.9) < 1e-12 and abs(rep.ceaf_e.precision - 0.6) < 1e-12


def test_report_dict_round_trip():
    doc = tree_doc({1: 0, 2: 1, 3: 1})
    g = build_corefdoc(doc, [("a", n(1), None), ("a", n(2), None)])
    rep = evaluate([g], [g])
    assert MetricReport.from_dict(rep.to_dict()) == rep
