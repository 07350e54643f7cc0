import random

import pytest
from hypothesis import given, settings, strategies as st

from corefkit.conllu import ConlluError, NodeId, parse_conllu, validate, write_conllu
from docgen import gen_skeleton


def row(i, form="w", head="0", rel="root", deps="_", misc="_"):
    return "\t".join([str(i), form, "_", "X", "_", "_", head, rel, deps, misc])


def sentence(*rows, comments=()):
    return "\n".join([*comments, *rows]) + "\n\n"


def test_empty_input():
    assert parse_conllu("") == []


def test_empty_node_position():
    text = sentence(row(1), row(2, head="1", rel="dep")) + sentence(
        row(1), row(2, head="1", rel="dep"), row(3, head="1", rel="dep"), "3.1\tpro\t_\tPRON\t_\t_\t_\t_\t1:nsubj\t_"
    )
    (doc,) = parse_conllu(text)
    sent = doc.sentences[1]
    assert [n.id for n in sent.empty_nodes] == [NodeId(1, 3, 1)]
    assert sent.nodes[-1].id.empty == 1 and sent.nodes[-2].id.word == 3
    assert write_conllu([doc]) == text


def test_mwt_range():
    text = sentence(row(1), "2-3\tdel\t_\t_\t_\t_\t_\t_\t_\t_", row(2, "de", "3", "case"), row(3, "el", "1", "dep"))
    (doc,) = parse_conllu(text)
    assert doc.sentences[0].mwt_ranges == [(2, 3, "del")]
    assert write_conllu([doc]) == text


def test_comments_kept_in_order():
    cm = ["# newdoc id = x", "# sent_id = a", "# text = w", "# note = something"]
    text = sentence(row(1), comments=cm)
    (doc,) = parse_conllu(text)
    assert doc.doc_id == "x"
    assert doc.sentences[0].comments == cm
    assert write_conllu([doc]) == text


def test_documents_split_on_newdoc():
    text = sentence(row(1), comments=["# newdoc id = a"]) + sentence(row(1)) + sentence(row(1), comments=["# newdoc id = b"])
    docs = parse_conllu(text)
    assert [d.doc_id for d in docs] == ["a", "b"]
    assert [len(d.sentences) for d in docs] == [2, 1]
    # sentence indices restart in each document
    assert docs[1].sentences[0].nodes[0].id == NodeId(0, 1)


def test_no_newdoc_is_one_document():
    docs = parse_conllu(sentence(row(1)) + sentence(row(1)))
    assert len(docs) == 1 and docs[0].doc_id


@pytest.mark.parametrize(
    "bad, line",
    [
        (sentence(row(1), "2\tw\t_\tX\t_\t_\t1\tdep\t_"), 2),  # nine columns
        (sentence(row(1), row("x", head="1", rel="dep")), 2),  # malformed ID
        (sentence(row(1), row(2, head="7", rel="dep")), 2),  # head to a missing node
        (sentence(row(1), row(1)), 2),  # duplicate ID
    ],
)
def test_parse_errors_carry_line(bad, line):
    with pytest.raises(ConlluError) as info:
        parse_conllu(bad)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_validate_clean_fixture(small_docs):
    assert all(validate(d) == [] for d in small_docs)


def test_validate_cycle():
    (doc,) = parse_conllu(sentence(row(1), row(2, head="3", rel="dep"), row(3, head="2", rel="dep")))
    kinds = [d.kind for d in validate(doc)]
    assert kinds == ["cycle"]


def test_validate_duplicate():
    (doc,) = parse_conllu(sentence(row(1), row(2, head="1", rel="dep")))
    sent = doc.sentences[0]
    sent.nodes.append(sent.nodes[-1])
    assert [d.kind for d in validate(doc)] == ["duplicate id"]


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_parse_write_fixed_point(rng):
    docs = [gen_skeleton(rng, f"d{i}") for i in range(rng.randint(1, 3))]
    text = write_conllu(docs)
    again = parse_conllu(text)
    assert write_conllu(again) == text
    assert all(validate(d) == [] for d in again)


def test_fixed_point_over_many_seeds():
    for seed in range(1000):
        rng = random.Random(seed)
        text = write_conllu([gen_skeleton(rng, "d")])
        assert write_conllu(parse_conllu(text)) == text
