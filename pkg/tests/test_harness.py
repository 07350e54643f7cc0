import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from corefkit.align import MatchStrategy
from corefkit.conllu import NodeId, write_conllu
from corefkit.harness import (
    VARIANTS,
    DataError,
    DatasetResult,
    corpus_stats,
    format_stats,
    head_upos,
    leaderboard,
    macro_average,
    macro_average_values,
    sample_mini,
    score_dataset,
    upos_factorized_score,
)
from corefkit.mentions import build_corefdoc, filter_singletons
from corefkit.metrics import evaluate
from docgen import gen_corefdoc, sized_doc

# CoNLL F1 of the ensemble system on the 22 test datasets, as printed (one decimal)
TABLE4_ENSEMBLE = [82.9, 77.1, 80.7, 65.5, 73.0, 76.1, 81.8, 84.5, 76.3, 71.8, 74.5,
                   69.8, 77.7, 68.6, 71.0, 69.9, 77.2, 78.2, 76.3, 80.2, 84.2, 71.2]


def test_macro_of_two():
    assert macro_average_values([0.5, 0.7]) == pytest.approx(0.6)


def test_macro_of_published_row():
    assert len(TABLE4_ENSEMBLE) == 22
    assert abs(macro_average_values(TABLE4_ENSEMBLE) - 75.84) <= 0.05


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_macro_permutation_invariant(values, rng):
    shuffled = values[:]
    rng.shuffle(shuffled)
    assert macro_average_values(shuffled) == macro_average_values(values)
    assert macro_average_values(values) == pytest.approx(sum(values) / len(values), rel=1e-12, abs=1e-15)


def test_macro_of_nothing():
    with pytest.raises(ValueError):
        macro_average_values([])


def test_gold_against_itself(small_coref):
    res = score_dataset(small_coref, small_coref)
    for name, rep in res.reports.items():
        for metric in ("muc", "b3", "ceaf_e", "blanc", "lea", "mor"):
            assert getattr(rep, metric).f1 == 1.0, (name, metric)
        assert rep.conll_f1 == 1.0


def test_document_mismatch(small_coref):
    with pytest.raises(DataError, match="doc-a"):
        score_dataset(small_coref, small_coref[::-1])


def test_result_json_round_trip(small_coref):
    res = score_dataset(small_coref, small_coref, dataset_id="small")
    again = DatasetResult.from_dict(json.loads(json.dumps(res.to_dict())))
    assert again == res
    bad = res.to_dict() | {"schema_version": 99}
    with pytest.raises(DataError):
        DatasetResult.from_dict(bad)


def test_macro_over_results(small_coref):
    r = score_dataset(small_coref, small_coref, dataset_id="a")
    m = macro_average([r, r])
    assert set(m) == set(VARIANTS) and all(v == 1.0 for v in m.values())


def test_leaderboard_missing_dataset_counts_zero(small_coref):
    good = score_dataset(small_coref, small_coref, dataset_id="a")
    other = score_dataset(small_coref, small_coref, dataset_id="b")
    rows = leaderboard({"full": [good, other], "partial": [good]})
    assert [r.system_id for r in rows] == ["full", "partial"]
    assert rows[1].macro["head-nosingleton"] == 0.5 and rows[1].missing == ["b"]
    skipped = leaderboard({"partial": [good]}, datasets=["a", "b"], missing="skip")
    assert skipped[0].macro["head-nosingleton"] == 1.0


def heads_only(cd):
    return build_corefdoc(cd.document, [(m.entity_id, [m.head], None) for m in cd.mentions()])


def test_heads_only_prediction_lowers_exact_only(small_coref):
    pred = [heads_only(cd) for cd in small_coref]
    head = evaluate(small_coref, pred, MatchStrategy("head")).conll_f1
    exact = evaluate(small_coref, pred, MatchStrategy("exact")).conll_f1
    assert head == 1.0 and exact < head


def test_singleton_additions_do_not_move_primary_scores():
    rng = random.Random(4)
    for _ in range(50):
        gold = gen_corefdoc(rng)
        pred = gen_corefdoc(rng, skeleton=gold.document)
        extra = [("zz%d" % k, [m.head], None) for k, m in enumerate(gold.mentions())]
        more = build_corefdoc(pred.document, [(m.entity_id, m.nodes, m.payload) for m in pred.mentions()] + extra)
        assert evaluate([gold], [pred]) == evaluate([gold], [more])


# -- sampling ---------------------------------------------------------------------------


def test_sample_whole_set_when_it_fits():
    docs = [sized_doc(f"d{i}", 100) for i in range(5)]
    assert sample_mini(docs, 1000) == docs


def test_sample_two_big_documents():
    docs = [sized_doc("a", 20_000), sized_doc("b", 20_000)]
    out = sample_mini(docs, 25_000, seed=1)
    assert len(out) == 1


def test_sample_properties():
    rng = random.Random(0)
    docs = [sized_doc(f"d{i}", rng.randint(50, 4000)) for i in range(40)]
    for seed in range(30):
        out = sample_mini(docs, 25_000, seed)
        assert sum(d.word_count() for d in out) <= 25_000
        idx = [docs.index(d) for d in out]
        assert idx == sorted(idx)
        assert all(d is docs[i] for d, i in zip(out, idx))
    first = write_conllu(sample_mini(docs, 25_000, 7))
    assert all(write_conllu(sample_mini(docs, 25_000, 7)) == first for _ in range(20))


def test_sample_rejects_bad_cap():
    with pytest.raises(ValueError):
        sample_mini([], 0)


# -- UPOS-factorized scores ------------------------------------------------------------------


def test_flat_name_counts_for_both_tags(small_coref):
    cd = small_coref[0]
    mr_brown = cd.entities[0].mentions[0]
    assert head_upos(mr_brown, cd.document) == {"NOUN", "PROPN"}
    for tag in ("NOUN", "PROPN"):
        assert upos_factorized_score(small_coref[:1], small_coref[:1], tag) == 1.0


def test_unknown_upos(small_coref):
    with pytest.raises(ValueError, match="valid tags"):
        upos_factorized_score(small_coref, small_coref, "NOUNS")


def test_absent_upos_is_none(small_coref):
    assert upos_factorized_score(small_coref, small_coref, "INTJ") is None


def test_mention_mode_drops_cut_entities(small_coref):
    # both entities have exactly one PRON-headed mention, so none survives mention mode
    assert upos_factorized_score(small_coref[:1], small_coref[:1], "PRON", mode="mention") is None
    assert upos_factorized_score(small_coref[:1], small_coref[:1], "PRON", mode="entity") == 1.0


def test_all_noun_heads_same_as_unfiltered(small_coref):
    doc = small_coref[0].document
    cd = build_corefdoc(doc, [("a", [NodeId(0, 5)], None), ("a", [NodeId(1, 5)], None), ("b", [NodeId(0, 1)], None),
                              ("b", [NodeId(0, 5)], None)])
    pred = build_corefdoc(doc, [("a", [NodeId(0, 5)], None), ("a", [NodeId(1, 5)], None), ("b", [NodeId(0, 1)], None)])
    assert upos_factorized_score([cd], [pred], "NOUN") == evaluate([cd], [pred]).conll_f1


# -- statistics ----------------------------------------------------------------------------


def test_stats_three_word_entity():
    doc = sized_doc("s", 1000)
    cd = build_corefdoc(doc, [("a", [NodeId(0, w)], None) for w in (1, 2, 3)])
    st_ = corpus_stats([cd])
    assert st_["entities"]["total"] == 1
    assert st_["mentions"]["per_1k_words"] == 3.0
    assert st_["entities"]["avg_length"] == 3.0


def test_stats_zero_length_bucket(small_coref):
    st_ = corpus_stats(small_coref)
    assert st_["mentions"]["length_distribution"]["0"] > 0
    assert st_["mentions"]["with_gap_pct"] > 0


def test_distributions_sum_to_hundred():
    rng = random.Random(9)
    docs = [gen_corefdoc(rng, f"d{i}", max_mentions=14) for i in range(40)]
    st_ = corpus_stats(docs)
    for block in ("entities", "mentions", "singleton_mentions"):
        dist = st_[block]["length_distribution"]
        if st_[block]["total"]:
            assert sum(dist.values()) == pytest.approx(100.0)
    assert sum(st_["head_upos"].values()) == pytest.approx(100.0)
    text = format_stats(st_)
    assert "[entities]" in text and "[head_upos]" in text


def test_nonsingleton_stats_ignore_singletons():
    rng = random.Random(10)
    docs = [gen_corefdoc(rng, f"d{i}") for i in range(20)]
    a = corpus_stats(docs)["mentions"]
    b = corpus_stats([filter_singletons(d) for d in docs])["mentions"]
    assert a == b
