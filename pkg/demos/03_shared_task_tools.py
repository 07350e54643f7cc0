"""Dataset-level tools: scoring variants, rankings, mini splits and statistics.

Run from the repository root:  python3 demos/03_shared_task_tools.py
"""

import random
import sys
from pathlib import Path

from corefkit import build_corefdoc, corpus_stats, format_stats, leaderboard, sample_mini, score_dataset, upos_factorized_score

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from docgen import gen_corefdoc  # noqa: E402  (random annotated documents)

rng = random.Random(1)
gold = [gen_corefdoc(rng, f"doc{i}", max_sentences=5, max_words=9, max_mentions=16) for i in range(20)]
# a system that finds every mention but attaches a third of them to a random entity
pred = []
for g in gold:
    triples = [((f"e{rng.randint(1, 4)}" if rng.random() < 0.33 else m.entity_id), m.nodes, None) for m in g.mentions()]
    try:
        pred.append(build_corefdoc(g.document, triples))
    except ValueError:
        pred.append(g)

# %% Four matching variants; the first one is the primary score. Spans are exact here,
# so head, partial and exact matching agree and only singletons change the picture.
result = score_dataset(gold, pred, dataset_id="toy")
for variant, rep in result.reports.items():
    print(f"{variant:20} CoNLL F1 {100 * rep.conll_f1:6.2f}   MOR F1 {100 * rep.mor.f1:6.2f}")

# %% Rankings average over datasets. A dataset without output scores 0.
perfect = score_dataset(gold, gold, dataset_id="toy")
other = score_dataset(gold[:5], gold[:5], dataset_id="second")
for row in leaderboard({"oracle": [perfect, other], "noisy": [result]}):
    print(row.system_id, f"{100 * row.macro['head-nosingleton']:.2f}", "missing:", row.missing)

# %% Scores restricted to entities whose mentions have a head of a given part of speech.
for tag in ("NOUN", "PRON", "PROPN"):
    v = upos_factorized_score(gold, pred, tag)
    print(tag, "-" if v is None else f"{100 * v:.2f}")

# %% Mini splits take whole documents at random up to a word budget.
mini = sample_mini([g.document for g in gold], cap_words=100, seed=0)
print(len(mini), "documents,", sum(d.word_count() for d in mini), "words")

# %% Corpus statistics.
print(format_stats(corpus_stats(gold)))
