"""Dataset-level scoring, rankings, mini-split sampling and corpus statistics."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, Optional, Sequence

from .align import PRIMARY, MatchStrategy
from .conllu import Document, read_conllu
from .mentions import CorefDoc, Entity, Mention, classify_mention, extract_entities
from .metrics import SCHEMA_VERSION, MetricReport, evaluate

__all__ = [
    "DataError",
    "DatasetResult",
    "UPOS_TAGS",
    "VARIANTS",
    "corpus_stats",
    "head_upos",
    "leaderboard",
    "load_corefdocs",
    "macro_average",
    "pair_documents",
    "sample_mini",
    "score_dataset",
    "upos_factorized_score",
]

VARIANTS: dict[str, MatchStrategy] = {
    "head-nosingleton": PRIMARY,
    "partial-nosingleton": MatchStrategy("partial"),
    "exact-nosingleton": MatchStrategy("exact"),
    "head-withsingleton": MatchStrategy("head", include_singletons=True),
}
PRIMARY_VARIANT = "head-nosingleton"

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "_",
)


class DataError(ValueError):
    """Input files that cannot be scored together."""


def load_corefdocs(path, strip_empty_forms: bool = False) -> list[CorefDoc]:
    return [extract_entities(d) for d in read_conllu(path, strip_empty_forms)]


def pair_documents(gold: Sequence[CorefDoc], pred: Sequence[CorefDoc]) -> None:
    """Require the same document IDs in the same order."""
    gids = [d.doc_id for d in gold]
    pids = [d.doc_id for d in pred]
    if gids != pids:
        diverging = [f"{a or '-'}/{b or '-'}" for a, b in zip_longest(gids, pids) if a != b]
        raise DataError(f"gold and predicted documents differ (gold/pred): {', '.join(diverging[:10])}")


def zip_longest(a: Sequence, b: Sequence):
    for i in range(max(len(a), len(b))):
        yield (a[i] if i < len(a) else None), (b[i] if i < len(b) else None)


@dataclass
class DatasetResult:
    dataset_id: str
    reports: dict[str, MetricReport] = field(default_factory=dict)

    @property
    def primary(self) -> MetricReport:
        return self.reports[PRIMARY_VARIANT]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset_id": self.dataset_id,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetResult":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DataError(f"unsupported report schema version {d.get('schema_version')!r}")
        return cls(d["dataset_id"], {k: MetricReport.from_dict(v) for k, v in d["reports"].items()})


def score_dataset(
    gold: Sequence[CorefDoc],
    pred: Sequence[CorefDoc],
    variants: Mapping[str, MatchStrategy] = VARIANTS,
    dataset_id: str = "",
) -> DatasetResult:
    """Score a prediction under each matching variant."""
    pair_documents(gold, pred)
    return DatasetResult(dataset_id, {name: evaluate(gold, pred, s) for name, s in variants.items()})


def macro_average(results: Iterable[DatasetResult]) -> dict[str, float]:
    """Unweighted mean CoNLL F1 per variant over datasets."""
    results = list(results)
    if not results:
        raise ValueError("macro average of no datasets")
    names = sorted({k for r in results for k in r.reports})
    return {
        name: math.fsum(r.reports[name].conll_f1 if name in r.reports else 0.0 for r in results) / len(results)
        for name in names
    }


def macro_average_values(values: Iterable[float]) -> float:
    values = list(values)
    if not values:
        raise ValueError("macro average of no datasets")
    return math.fsum(values) / len(values)


@dataclass
class LeaderboardRow:
    system_id: str
    macro: dict[str, float]
    missing: list[str]


def leaderboard(
    systems: Mapping[str, Sequence[DatasetResult]],
    datasets: Optional[Sequence[str]] = None,
    missing: Literal["zero", "skip"] = "zero",
) -> list[LeaderboardRow]:
    """Rank systems by macro-averaged primary CoNLL F1.

    ``datasets`` defaults to every dataset any system was scored on. With
    ``missing="zero"`` a dataset a system has no result for counts as 0;
    ``"skip"`` averages over the datasets it does have.
    """
    if datasets is None:
        datasets = sorted({r.dataset_id for rs in systems.values() for r in rs})
    rows = []
    variants = list(VARIANTS)
    for sid, results in systems.items():
        by_id = {r.dataset_id: r for r in results}
        lacking = [d for d in datasets if d not in by_id]
        macro = {}
        for v in variants:
            vals = []
            for d in datasets:
                if d in by_id and v in by_id[d].reports:
                    vals.append(by_id[d].reports[v].conll_f1)
                elif missing == "zero":
                    vals.append(0.0)
            macro[v] = macro_average_values(vals) if vals else 0.0
        rows.append(LeaderboardRow(sid, macro, lacking))
    rows.sort(key=lambda r: (-r.macro[PRIMARY_VARIANT], r.system_id))
    return rows


# -- sampling ----------------------------------------------------------------


def sample_mini(dataset: Sequence[Document], cap_words: int = 25_000, seed: int = 0) -> list[Document]:
    """Random complete documents totalling at most ``cap_words`` words.

    Documents are shuffled with a seeded RNG and taken greedily whenever they
    still fit. The chosen documents keep their original order.
    """
    if cap_words <= 0:
        raise ValueError("cap_words must be positive")
    sizes = [d.word_count() for d in dataset]
    if sum(sizes) <= cap_words:
        return list(dataset)
    order = list(range(len(dataset)))
    random.Random(seed).shuffle(order)
    chosen, total = [], 0
    for i in order:
        if total + sizes[i] <= cap_words:
            chosen.append(i)
            total += sizes[i]
    return [dataset[i] for i in sorted(chosen)]


# -- UPOS-factorized scoring ----------------------------------------------------


def _flat_children(doc: Document) -> dict:
    kids: dict = {}
    for n in doc.nodes():
        if n.head is not None and (n.deprel == "flat" or n.deprel.startswith("flat:")):
            kids.setdefault(n.head, set()).add(n.upos)
    return kids


def head_upos(m: Mention, doc: Document, _cache: Optional[tuple] = None) -> set[str]:
    """UPOS of the head plus that of its ``flat`` children."""
    index, kids = _cache or (doc.node_index(), _flat_children(doc))
    return {index[m.head].upos} | kids.get(m.head, set())


def _filter_upos(cd: CorefDoc, upos: set[str], mode: str) -> CorefDoc:
    cache = (cd.document.node_index(), _flat_children(cd.document))
    ents = []
    for e in cd.entities:
        hits = [m for m in e.mentions if head_upos(m, cd.document, cache) & upos]
        if mode == "entity":
            if hits:
                ents.append(e)
        elif hits and (len(hits) > 1 or len(e.mentions) == 1):
            # entities cut down to one mention are dropped
            ents.append(Entity(e.id, hits))
    return CorefDoc(cd.document, ents)


def upos_factorized_score(
    gold: Sequence[CorefDoc],
    pred: Sequence[CorefDoc],
    upos: str | Iterable[str],
    mode: Literal["entity", "mention"] = "entity",
    strategy: MatchStrategy = PRIMARY,
) -> Optional[float]:
    """CoNLL F1 restricted to entities (or mentions) with a head of the given UPOS.

    Returns ``None`` when nothing in gold survives the filter.
    """
    tags = {upos} if isinstance(upos, str) else set(upos)
    unknown = sorted(tags - set(UPOS_TAGS))
    if unknown:
        raise ValueError(f"unknown UPOS {', '.join(unknown)}; valid tags: {' '.join(UPOS_TAGS)}")
    if mode not in ("entity", "mention"):
        raise ValueError(f"unknown mode {mode!r}")
    pair_documents(gold, pred)
    fg = [_filter_upos(d, tags, mode) for d in gold]
    fp = [_filter_upos(d, tags, mode) for d in pred]
    relevant = [e for d in fg for e in d.entities if strategy.include_singletons or len(e.mentions) > 1]
    if not relevant:
        return None
    return evaluate(fg, fp, strategy).conll_f1


# -- corpus statistics ----------------------------------------------------------

STATS_UPOS = ("NOUN", "PRON", "PROPN", "DET", "ADJ", "VERB", "ADV", "NUM", "_")


def _pct(part: float, whole: float) -> float:
    return 100.0 * part / whole if whole else 0.0


def _distribution(values: list[int], buckets: Sequence[int]) -> dict[str, float]:
    top = buckets[-1]
    c = Counter(min(v, top) for v in values)
    return {(f"{b}+" if b == top else str(b)): _pct(c[b], len(values)) for b in buckets}


def _mention_block(ms: list[tuple[Mention, Document]], words: int) -> dict:
    lengths = [len(m.surface_nodes) for m, _ in ms]
    flags = [classify_mention(m, d) for m, d in ms]
    return {
        "total": len(ms),
        "per_1k_words": 1000.0 * len(ms) / words if words else 0.0,
        "max_length": max(lengths, default=0),
        "avg_length": sum(lengths) / len(lengths) if lengths else 0.0,
        "length_distribution": _distribution(lengths, range(6)),
        "with_empty_pct": _pct(sum(f.has_empty for f in flags), len(ms)),
        "with_gap_pct": _pct(sum(f.has_gap for f in flags), len(ms)),
        "non_treelet_pct": _pct(sum(f.non_treelet for f in flags), len(ms)),
    }


def corpus_stats(docs: Iterable[CorefDoc]) -> dict:
    """Entity and mention statistics of an annotated corpus.

    Mention length counts surface words, so zeros have length 0.
    Distributions and rates are percentages.
    """
    docs = list(docs)
    words = sum(d.document.word_count() for d in docs)
    sizes = [len(e.mentions) for d in docs for e in d.entities]
    multi = [(m, d.document) for d in docs for e in d.entities if len(e.mentions) > 1 for m in e.mentions]
    single = [(m, d.document) for d in docs for e in d.entities if len(e.mentions) == 1 for m in e.mentions]
    heads: Counter = Counter()
    indexes = {id(d.document): d.document.node_index() for d in docs}
    for m, doc in multi:
        tag = indexes[id(doc)][m.head].upos
        heads[tag if tag in STATS_UPOS else "other"] += 1
    return {
        "documents": len(docs),
        "words": words,
        "entities": {
            "total": len(sizes),
            "per_1k_words": 1000.0 * len(sizes) / words if words else 0.0,
            "max_length": max(sizes, default=0),
            "avg_length": sum(sizes) / len(sizes) if sizes else 0.0,
            "singletons": sum(1 for s in sizes if s == 1),
            "length_distribution": _distribution(sizes, range(1, 6)),
        },
        "mentions": _mention_block(multi, words),
        "singleton_mentions": _mention_block(single, words),
        "head_upos": {k: _pct(heads[k], len(multi)) for k in (*STATS_UPOS, "other")},
    }


def format_stats(stats: dict) -> str:
    """Human-readable rendering with one decimal."""
    lines = [f"documents {stats['documents']}  words {stats['words']}"]

    def fmt(v) -> str:
        return f"{v:.1f}" if isinstance(v, float) else str(v)

    for block in ("entities", "mentions", "singleton_mentions", "head_upos"):
        lines.append(f"[{block}]")
        for k, v in stats[block].items():
            if isinstance(v, dict):
                lines.append(f"  {k}: " + "  ".join(f"{kk}={fmt(vv)}" for kk, vv in v.items()))
            else:
                lines.append(f"  {k}: {fmt(v)}")
    return "\n".join(lines)
