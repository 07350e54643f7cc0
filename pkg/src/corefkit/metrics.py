"""Coreference scores over aligned gold and predicted documents.

Every metric is first computed as raw counts (recall numerator and
denominator, precision numerator and denominator). Counts add up, so a
dataset score is the sum over its documents turned into ratios at the end.

After alignment a predicted mention paired with a gold mention stands for
the same atom; unpaired mentions stay distinct atoms on their own side.
The partition functions take entities as collections of such atoms.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, fields
from typing import Hashable, Iterable, Literal, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .align import PRIMARY, MatchStrategy, MentionAlignment, align_documents
from .mentions import CorefDoc

__all__ = [
    "BlancCounts",
    "Counts",
    "DocumentCounts",
    "MetricReport",
    "PRF",
    "b_cubed",
    "blanc",
    "ceaf_e",
    "conll_f1",
    "evaluate",
    "lea",
    "mor",
    "muc",
    "partitions",
    "zero_anaphora_score",
]

Partition = Sequence[Iterable[Hashable]]
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PRF:
    recall: float
    precision: float
    f1: float

    @classmethod
    def from_rp(cls, recall: float, precision: float) -> "PRF":
        f1 = 0.0 if recall + precision == 0 else 2 * precision * recall / (precision + recall)
        return cls(recall, precision, f1)

    def to_dict(self) -> dict:
        return {"recall": self.recall, "precision": self.precision, "f1": self.f1}

    @classmethod
    def from_dict(cls, d: dict) -> "PRF":
        return cls(d["recall"], d["precision"], d["f1"])


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class Counts:
    r_num: float = 0.0
    r_den: float = 0.0
    p_num: float = 0.0
    p_den: float = 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.r_num + other.r_num,
            self.r_den + other.r_den,
            self.p_num + other.p_num,
            self.p_den + other.p_den,
        )

    def prf(self) -> PRF:
        return PRF.from_rp(_ratio(self.r_num, self.r_den), _ratio(self.p_num, self.p_den))


def _sets(partition: Partition) -> list[frozenset]:
    return [s for s in (frozenset(e) for e in partition) if s]


def _owner(partition: list[frozenset]) -> dict[Hashable, int]:
    return {a: k for k, e in enumerate(partition) for a in e}


# -- MUC -------------------------------------------------------------------------


def _muc_side(key: list[frozenset], other: dict[Hashable, int]) -> tuple[int, int]:
    num = den = 0
    for e in key:
        # atoms missing from the other side form a part of their own each
        parts = len({other.get(a, ("missing", a)) for a in e})
        num += len(e) - parts
        den += len(e) - 1
    return num, den


def muc_counts(gold: Partition, pred: Partition) -> Counts:
    g, p = _sets(gold), _sets(pred)
    rn, rd = _muc_side(g, _owner(p))
    pn, pd = _muc_side(p, _owner(g))
    return Counts(rn, rd, pn, pd)


def muc(gold: Partition, pred: Partition) -> PRF:
    """Link-based MUC score."""
    return muc_counts(gold, pred).prf()


# -- B-cubed ---------------------------------------------------------------------


def _b3_side(key: list[frozenset], other: list[frozenset]) -> tuple[float, int]:
    owner = _owner(other)
    num = 0.0
    for e in key:
        overlaps = Counter(owner[a] for a in e if a in owner)
        num += math.fsum(c * c for c in overlaps.values()) / len(e)
    return num, sum(len(e) for e in key)


def b_cubed_counts(gold: Partition, pred: Partition) -> Counts:
    g, p = _sets(gold), _sets(pred)
    rn, rd = _b3_side(g, p)
    pn, pd = _b3_side(p, g)
    return Counts(rn, rd, pn, pd)


def b_cubed(gold: Partition, pred: Partition) -> PRF:
    return b_cubed_counts(gold, pred).prf()


# -- CEAF-e ----------------------------------------------------------------------


def phi4(k: frozenset, r: frozenset) -> float:
    return 2 * len(k & r) / (len(k) + len(r))


def ceaf_similarity(gold: Partition, pred: Partition) -> float:
    """Total phi4 similarity of the best one-to-one entity alignment."""
    g, p = _sets(gold), _sets(pred)
    if not g or not p:
        return 0.0
    owner = _owner(p)
    M = np.zeros((len(g), len(p)))
    for i, k in enumerate(g):
        for j, c in Counter(owner[a] for a in k if a in owner).items():
            M[i, j] = 2 * c / (len(k) + len(p[j]))
    rows, cols = linear_sum_assignment(M, maximize=True)
    return math.fsum(M[rows, cols])


def ceaf_e_counts(gold: Partition, pred: Partition) -> Counts:
    g, p = _sets(gold), _sets(pred)
    sim = ceaf_similarity(g, p)
    return Counts(sim, len(g), sim, len(p))


def ceaf_e(gold: Partition, pred: Partition) -> PRF:
    """Entity-based CEAF with the phi4 similarity."""
    return ceaf_e_counts(gold, pred).prf()


# -- LEA -------------------------------------------------------------------------

SingletonRule = Literal["present", "singleton"]


def _links(n: int) -> int:
    return n * (n - 1) // 2


def _lea_side(key: list[frozenset], other: list[frozenset], rule: SingletonRule) -> tuple[float, int]:
    owner = _owner(other)
    num = 0.0
    for e in key:
        if len(e) == 1:
            (a,) = e
            if rule == "present":
                resolved = float(a in owner)
            else:
                resolved = float(a in owner and len(other[owner[a]]) == 1)
        else:
            overlaps = Counter(owner[a] for a in e if a in owner)
            resolved = sum(_links(c) for c in overlaps.values()) / _links(len(e))
        num += len(e) * resolved
    return num, sum(len(e) for e in key)


def lea_counts(gold: Partition, pred: Partition, singleton_self_link: SingletonRule = "present") -> Counts:
    g, p = _sets(gold), _sets(pred)
    rn, rd = _lea_side(g, p, singleton_self_link)
    pn, pd = _lea_side(p, g, singleton_self_link)
    return Counts(rn, rd, pn, pd)


def lea(gold: Partition, pred: Partition, singleton_self_link: SingletonRule = "present") -> PRF:
    """Link-based entity-aware score, entities weighted by size.

    A one-mention entity has a single self link. With the default rule it
    counts as resolved when its atom occurs on the other side at all; with
    ``"singleton"`` the atom must form a one-mention entity there too.
    """
    return lea_counts(gold, pred, singleton_self_link).prf()


# -- BLANC -----------------------------------------------------------------------


@dataclass(frozen=True)
class BlancCounts:
    coref_gold: int = 0
    coref_pred: int = 0
    coref_both: int = 0
    non_gold: int = 0
    non_pred: int = 0
    non_both: int = 0
    atoms: int = 0  # atoms of both sides together
    atom_mismatch: int = 0  # atoms present on one side only

    def __add__(self, other: "BlancCounts") -> "BlancCounts":
        return BlancCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def prf(self) -> PRF:
        rc, pc = _ratio(self.coref_both, self.coref_gold), _ratio(self.coref_both, self.coref_pred)
        rn, pn = _ratio(self.non_both, self.non_gold), _ratio(self.non_both, self.non_pred)
        no_coref = self.coref_gold == 0 and self.coref_pred == 0
        no_non = self.non_gold == 0 and self.non_pred == 0
        if no_coref and no_non:
            v = float(self.atoms > 0 and self.atom_mismatch == 0)
            return PRF(v, v, v)
        if no_coref:
            return PRF.from_rp(rn, pn)
        if no_non:
            return PRF.from_rp(rc, pc)
        return PRF.from_rp((rc + rn) / 2, (pc + pn) / 2)


def blanc_counts(gold: Partition, pred: Partition) -> BlancCounts:
    g, p = _sets(gold), _sets(pred)
    go, po = _owner(g), _owner(p)
    common = [a for a in go if a in po]
    pair_g = sum(_links(len(e)) for e in g)
    pair_p = sum(_links(len(e)) for e in p)
    both_cells = Counter((go[a], po[a]) for a in common)
    same_both = sum(_links(c) for c in both_cells.values())
    same_g = sum(_links(c) for c in Counter(go[a] for a in common).values())
    same_p = sum(_links(c) for c in Counter(po[a] for a in common).values())
    return BlancCounts(
        coref_gold=pair_g,
        coref_pred=pair_p,
        coref_both=same_both,
        non_gold=_links(len(go)) - pair_g,
        non_pred=_links(len(po)) - pair_p,
        non_both=_links(len(common)) - same_g - same_p + same_both,
        atoms=len(set(go) | set(po)),
        atom_mismatch=len(set(go) ^ set(po)),
    )


def blanc(gold: Partition, pred: Partition) -> PRF:
    """BLANC over each side's own mentions.

    Recall and precision average the coreference-link and non-coreference-
    link components; F1 is their harmonic mean. A component with no links on
    either side is left out.
    """
    return blanc_counts(gold, pred).prf()


# -- mention-level scores --------------------------------------------------------


def _size(m) -> int:
    return 1 if m.is_zero else len(m.surface_nodes)


def mor_counts(alignment: MentionAlignment) -> Counts:
    gm, pm = alignment.gold_mentions, alignment.pred_mentions
    num = 0
    for i, j in alignment.pairs:
        g, p = gm[i], pm[j]
        if g.is_zero and p.is_zero:
            num += 1
        else:
            num += len(set(g.surface_nodes) & {alignment.node_map[n] for n in p.surface_nodes})
    return Counts(num, sum(_size(m) for m in gm), num, sum(_size(m) for m in pm))


def mor(alignment: MentionAlignment) -> PRF:
    """Mention overlap ratio: overlap of paired mentions over total mention sizes."""
    return mor_counts(alignment).prf()


def _ranks(mentions) -> list[tuple[str, int]]:
    seen: Counter = Counter()
    out = []
    for m in mentions:
        out.append((m.entity_id, seen[m.entity_id]))
        seen[m.entity_id] += 1
    return out


def _zero_side(key, other, key_to_other: dict[int, int], other_to_key: dict[int, int]) -> tuple[int, int]:
    krank, orank = _ranks(key), _ranks(other)
    hits = total = 0
    for i, m in enumerate(key):
        eid, r = krank[i]
        if not m.is_zero or r == 0:
            continue
        total += 1
        j = key_to_other.get(i)
        if j is None or not other[j].is_zero:
            continue
        target = orank[j][0]
        for j2, o in enumerate(other):
            if j2 == j or o.entity_id != target:
                continue
            i2 = other_to_key.get(j2)
            if i2 is not None and krank[i2][0] == eid and krank[i2][1] < r:
                hits += 1
                break
    return hits, total


def zero_anaphora_counts(alignment: MentionAlignment) -> Counts:
    g2p, p2g = alignment.gold_to_pred(), alignment.pred_to_gold()
    rn, rd = _zero_side(alignment.gold_mentions, alignment.pred_mentions, g2p, p2g)
    pn, pd = _zero_side(alignment.pred_mentions, alignment.gold_mentions, p2g, g2p)
    return Counts(rn, rd, pn, pd)


def zero_anaphora_score(alignment: MentionAlignment) -> Optional[PRF]:
    """Resolution of anaphoric zeros, or ``None`` when gold has none.

    A zero is anaphoric when an earlier mention of its entity exists. It is
    resolved when its partner zero belongs to an entity that also contains
    the partner of one of those earlier mentions.
    """
    c = zero_anaphora_counts(alignment)
    return c.prf() if c.r_den else None


# -- putting it together ----------------------------------------------------------


def partitions(alignment: MentionAlignment) -> tuple[list[frozenset], list[frozenset]]:
    """Gold and predicted entities as sets of shared atoms."""
    p2g = alignment.pred_to_gold()
    gold: dict[str, set] = defaultdict(set)
    pred: dict[str, set] = defaultdict(set)
    for i, m in enumerate(alignment.gold_mentions):
        gold[m.entity_id].add(("m", i))
    for j, m in enumerate(alignment.pred_mentions):
        pred[m.entity_id].add(("m", p2g[j]) if j in p2g else ("p", j))
    return [frozenset(s) for s in gold.values()], [frozenset(s) for s in pred.values()]


def conll_f1(report: "MetricReport") -> float:
    return math.fsum((report.muc.f1, report.b3.f1, report.ceaf_e.f1)) / 3


@dataclass(frozen=True)
class DocumentCounts:
    muc: Counts = Counts()
    b3: Counts = Counts()
    ceaf_e: Counts = Counts()
    blanc: BlancCounts = BlancCounts()
    lea: Counts = Counts()
    mor: Counts = Counts()
    zero_anaphora: Counts = Counts()

    def __add__(self, other: "DocumentCounts") -> "DocumentCounts":
        return DocumentCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def report(self) -> "MetricReport":
        base = dict(
            muc=self.muc.prf(),
            b3=self.b3.prf(),
            ceaf_e=self.ceaf_e.prf(),
            blanc=self.blanc.prf(),
            lea=self.lea.prf(),
            mor=self.mor.prf(),
            zero_anaphora=self.zero_anaphora.prf() if self.zero_anaphora.r_den else None,
        )
        f = math.fsum((base["muc"].f1, base["b3"].f1, base["ceaf_e"].f1)) / 3
        return MetricReport(conll_f1=f, **base)


METRICS = ("muc", "b3", "ceaf_e", "blanc", "lea", "mor", "zero_anaphora")


@dataclass(frozen=True)
class MetricReport:
    muc: PRF
    b3: PRF
    ceaf_e: PRF
    blanc: PRF
    lea: PRF
    mor: PRF
    conll_f1: float
    zero_anaphora: Optional[PRF] = None

    def to_dict(self) -> dict:
        out: dict = {"conll_f1": self.conll_f1}
        for name in METRICS:
            v = getattr(self, name)
            out[name] = v.to_dict() if v is not None else None
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        kw = {name: (PRF.from_dict(d[name]) if d.get(name) is not None else None) for name in METRICS}
        return cls(conll_f1=d["conll_f1"], **kw)


def count_document(
    alignment: MentionAlignment,
    singleton_self_link: SingletonRule = "present",
) -> DocumentCounts:
    g, p = partitions(alignment)
    return DocumentCounts(
        muc=muc_counts(g, p),
        b3=b_cubed_counts(g, p),
        ceaf_e=ceaf_e_counts(g, p),
        blanc=blanc_counts(g, p),
        lea=lea_counts(g, p, singleton_self_link),
        mor=mor_counts(alignment),
        zero_anaphora=zero_anaphora_counts(alignment),
    )


def evaluate(
    gold: Sequence[CorefDoc],
    pred: Sequence[CorefDoc],
    strategy: MatchStrategy = PRIMARY,
) -> MetricReport:
    """Score paired documents, summing counts over them."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold documents vs {len(pred)} predicted")
    total = DocumentCounts()
    for g, p in zip(gold, pred):
        _, alignment = align_documents(g, p, strategy)
        total = total + count_document(alignment)
    return total.report()
