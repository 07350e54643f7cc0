"""Scoring a prediction: alignment first, then the metrics.

Run from the repository root:  python3 demos/02_scoring.py
"""

from corefkit import (
    MatchStrategy,
    NodeId,
    align_documents,
    b_cubed,
    blanc,
    build_corefdoc,
    ceaf_e,
    evaluate,
    lea,
    muc,
    parse_conllu,
)

# %% The metrics work on partitions of mentions. gold: one entity of three mentions,
# pred: the same mentions split two and one.
gold, pred = [{"m1", "m2", "m3"}], [{"m1", "m2"}, {"m3"}]
for name, metric in [("MUC", muc), ("B3", b_cubed), ("CEAF-e", ceaf_e), ("LEA", lea), ("BLANC", blanc)]:
    s = metric(gold, pred)
    print(f"{name:7} R={s.recall:.4f} P={s.precision:.4f} F1={s.f1:.4f}")

# %% Real documents need mentions paired up first. Head match pairs mentions with the
# same head word, and spans only break ties between mentions sharing a head.
rows = []
heads = {1: 2, 2: 3, 3: 0, 4: 5, 5: 3, 6: 5, 7: 3}
for w, h in heads.items():
    rows.append("\t".join([str(w), f"w{w}", "_", "X", "_", "_", str(h), "root" if h == 0 else "dep", "_", "_"]))
(doc,) = parse_conllu("\n".join(rows) + "\n\n")


def n(*ws):
    return [NodeId(0, w) for w in ws]


gold_cd = build_corefdoc(doc, [("a", n(1, 2), None), ("a", n(4, 5, 6), None), ("a", n(7), None)])
pred_cd = build_corefdoc(doc, [("x", n(2), None), ("x", n(4, 5), None), ("y", n(7), None)])

for kind in ("head", "partial", "exact"):
    _, al = align_documents(gold_cd, pred_cd, MatchStrategy(kind, include_singletons=True))
    rep = evaluate([gold_cd], [pred_cd], MatchStrategy(kind, include_singletons=True))
    print(f"{kind:8} pairs={len(al.pairs)}  CoNLL F1={100 * rep.conll_f1:.2f}")

# %% Shorter predicted spans cost nothing under head match, and stricter matching can only lose pairs.
