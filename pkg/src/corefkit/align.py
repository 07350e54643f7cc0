"""One-to-one alignment of gold and predicted mentions.

Zero mentions (empty nodes) are aligned first, sentence by sentence, by how
well their enhanced dependencies agree. Predicted empty nodes are then
renamed to their gold partners so that mentions can be compared node by
node under exact, partial or head matching.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .conllu import Document, Node, NodeId, Sentence
from .mentions import CorefDoc, Mention, filter_singletons

__all__ = [
    "MatchStrategy",
    "MentionAlignment",
    "PRIMARY",
    "ZeroAlignment",
    "align_documents",
    "align_mentions",
    "align_zeros",
    "align_zeros_document",
    "max_weight_matching",
]

_FORBID = -1e9
_SENTINEL = 1_000_000


@dataclass(frozen=True)
class MatchStrategy:
    kind: Literal["head", "partial", "exact"] = "head"
    include_singletons: bool = False
    zero_mode: Literal["dependency", "strict"] = "dependency"

    def __post_init__(self):
        if self.kind not in ("head", "partial", "exact"):
            raise ValueError(f"unknown match kind {self.kind!r}")
        if self.zero_mode not in ("dependency", "strict"):
            raise ValueError(f"unknown zero mode {self.zero_mode!r}")


PRIMARY = MatchStrategy()


@dataclass
class ZeroAlignment:
    pairs: dict[NodeId, NodeId] = field(default_factory=dict)  # gold -> pred
    weights: dict[NodeId, int] = field(default_factory=dict)  # keyed by gold node

    def update(self, other: "ZeroAlignment") -> None:
        self.pairs.update(other.pairs)
        self.weights.update(other.weights)

    def inverse(self) -> dict[NodeId, NodeId]:
        return {p: g for g, p in self.pairs.items()}

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())


# -- assignment ---------------------------------------------------------------


def _optimum(W: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    rows, cols = linear_sum_assignment(W, maximize=True)
    return float(W[rows, cols].sum()), list(zip(rows.tolist(), cols.tolist()))


def max_weight_matching(weights: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-weight matching keeping only positive entries.

    Among optimal matchings the lexicographically smallest list of
    ``(row, col)`` pairs is returned. Weights must be integers.
    """
    weights = np.asarray(weights, dtype=float)
    n, m = weights.shape
    if n == 0 or m == 0 or not (weights > 0).any():
        return []
    # square padding: every row may stay unmatched by taking a dummy column
    W = np.zeros((n + m, n + m))
    W[:n, :m] = np.where(weights > 0, weights, 0)
    best, _ = _optimum(W)
    for i in range(n):
        chosen = False
        for j in np.flatnonzero(W[i, :m] > 0):
            if W[i, j] == _FORBID:
                continue
            trial = W.copy()
            keep = trial[i, j]
            trial[i, :] = _FORBID
            trial[:, j] = _FORBID
            trial[i, j] = keep
            if _optimum(trial)[0] == best:
                W = trial
                chosen = True
                break
        if not chosen:
            W[i, :m] = _FORBID
    _, pairs = _optimum(W)
    return [(i, j) for i, j in pairs if i < n and j < m and weights[i, j] > 0]


# -- zeros ---------------------------------------------------------------------


def _zero_weight(g: Node, p: Node) -> int:
    best = 0
    for gp, grel in g.deps:
        for pp, prel in p.deps:
            if gp == pp:
                best = max(best, 2 if grel == prel else 1)
    return best


def align_zeros(gold_sentence: Sentence, pred_sentence: Sentence, mode: str = "dependency") -> ZeroAlignment:
    """Match the empty nodes of two versions of one sentence.

    A pair scores 2 when some enhanced dependency agrees in both parent and
    relation, 1 when only the parent agrees. In ``strict`` mode only nodes
    with identical IDs are matched.
    """
    gold = gold_sentence.empty_nodes
    pred = pred_sentence.empty_nodes
    out = ZeroAlignment()
    if mode == "strict":
        ids = {p.id for p in pred}
        for g in gold:
            if g.id in ids:
                out.pairs[g.id] = g.id
                out.weights[g.id] = 2
        return out
    W = np.array([[_zero_weight(g, p) for p in pred] for g in gold], dtype=float).reshape(len(gold), len(pred))
    for i, j in max_weight_matching(W):
        out.pairs[gold[i].id] = pred[j].id
        out.weights[gold[i].id] = int(W[i, j])
    return out


def _surface(sent: Sentence) -> list[str]:
    return [n.form for n in sent.words]


def align_zeros_document(gold: Document, pred: Document, mode: str = "dependency") -> ZeroAlignment:
    check_same_tokens(gold, pred)
    out = ZeroAlignment()
    for gs, ps in zip(gold.sentences, pred.sentences):
        out.update(align_zeros(gs, ps, mode))
    return out


class AlignmentError(ValueError):
    pass


def check_same_tokens(gold: Document, pred: Document) -> None:
    if len(gold.sentences) != len(pred.sentences):
        raise AlignmentError(
            f"document {gold.doc_id}: {len(gold.sentences)} gold sentences vs {len(pred.sentences)} predicted"
        )
    for si, (gs, ps) in enumerate(zip(gold.sentences, pred.sentences)):
        a, b = _surface(gs), _surface(ps)
        if a != b:
            k = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b)))
            raise AlignmentError(
                f"document {gold.doc_id}, sentence {si + 1}, word {k + 1}: tokens differ "
                f"({a[k] if k < len(a) else None!r} vs {b[k] if k < len(b) else None!r}); "
                "run clean on the prediction first"
            )


# -- mentions ------------------------------------------------------------------


@dataclass
class MentionAlignment:
    gold_mentions: list[Mention]
    pred_mentions: list[Mention]
    pairs: list[tuple[int, int]]  # (gold index, pred index)
    unmatched_gold: list[int]
    unmatched_pred: list[int]
    # pred node -> gold-space node (empty nodes renamed through the zero alignment)
    node_map: dict[NodeId, NodeId] = field(default_factory=dict)

    def pred_to_gold(self) -> dict[int, int]:
        return {p: g for g, p in self.pairs}

    def gold_to_pred(self) -> dict[int, int]:
        return dict(self.pairs)


def _map_node(n: NodeId, inverse: dict[NodeId, NodeId]) -> NodeId:
    if not n.is_empty:
        return n
    if n in inverse:
        return inverse[n]
    return NodeId(n.sentence, n.word, _SENTINEL + n.empty)


def _admissible(kind: str, g: Mention, gnodes: frozenset, p: Mention, pnodes: frozenset, phead: NodeId) -> bool:
    if g.is_zero != p.is_zero:
        return False
    if kind == "exact":
        return gnodes == pnodes
    if kind == "head":
        return g.head == phead
    return g.head in pnodes and pnodes <= gnodes


def _components(n: int, m: int, edges: list[tuple[int, int]]) -> list[tuple[list[int], list[int]]]:
    parent = list(range(n + m))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        a, b = find(i), find(n + j)
        if a != b:
            parent[a] = b
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for i in sorted({i for i, _ in edges}):
        groups.setdefault(find(i), ([], []))[0].append(i)
    for j in sorted({j for _, j in edges}):
        groups.setdefault(find(n + j), ([], []))[1].append(j)
    return list(groups.values())


def align_mentions(
    gold: CorefDoc,
    pred: CorefDoc,
    strategy: MatchStrategy = PRIMARY,
    zeros: Optional[ZeroAlignment] = None,
) -> MentionAlignment:
    """Pair gold and predicted mentions one to one.

    The pairing has as many pairs as the strategy allows; among those it
    maximizes the total node overlap, then prefers pairs whose boundaries
    lie closest. Singleton entities are dropped first unless the strategy
    keeps them.
    """
    check_same_tokens(gold.document, pred.document)
    if not strategy.include_singletons:
        gold, pred = filter_singletons(gold), filter_singletons(pred)
    if zeros is None:
        zeros = align_zeros_document(gold.document, pred.document, strategy.zero_mode)
    inverse = zeros.inverse()
    gm, pm = gold.mentions(), pred.mentions()
    node_map = {n: _map_node(n, inverse) for m in pm for n in m.nodes}
    gsets = [frozenset(m.nodes) for m in gm]
    psets = [frozenset(node_map[n] for n in m.nodes) for m in pm]
    pheads = [node_map[m.head] for m in pm]

    by_head: dict[NodeId, list[int]] = {}
    for i, m in enumerate(gm):
        for n in (m.nodes if strategy.kind == "partial" else (m.head,)):
            by_head.setdefault(n, []).append(i)
    edges = []
    for j, p in enumerate(pm):
        cands = set()
        for n in (psets[j] if strategy.kind == "partial" else (pheads[j],)):
            cands.update(by_head.get(n, ()))
        for i in sorted(cands):
            if _admissible(strategy.kind, gm[i], gsets[i], p, psets[j], pheads[j]):
                edges.append((i, j))

    pairs: list[tuple[int, int]] = []
    edge_set = set(edges)
    for gi, pj in _components(len(gm), len(pm), edges):
        if len(gi) == 1 and len(pj) == 1:
            pairs.append((gi[0], pj[0]))
            continue
        pairs.extend(_solve_component(gi, pj, edge_set, gsets, psets))
    pairs.sort()
    matched_g = {i for i, _ in pairs}
    matched_p = {j for _, j in pairs}
    return MentionAlignment(
        gm,
        pm,
        pairs,
        [i for i in range(len(gm)) if i not in matched_g],
        [j for j in range(len(pm)) if j not in matched_p],
        node_map,
    )


def _solve_component(
    gi: list[int],
    pj: list[int],
    edges: set[tuple[int, int]],
    gsets: list[frozenset],
    psets: list[frozenset],
) -> list[tuple[int, int]]:
    nodes = sorted({n for i in gi for n in gsets[i]} | {n for j in pj for n in psets[j]})
    rank = {n: r for r, n in enumerate(nodes)}
    k = min(len(gi), len(pj))
    overlap = np.zeros((len(gi), len(pj)), dtype=np.int64)
    dist = np.zeros((len(gi), len(pj)), dtype=np.int64)
    adm = np.zeros((len(gi), len(pj)), dtype=bool)
    for a, i in enumerate(gi):
        gs, ge = rank[min(gsets[i])], rank[max(gsets[i])]
        for b, j in enumerate(pj):
            if (i, j) in edges:
                adm[a, b] = True
                overlap[a, b] = len(gsets[i] & psets[j])
                dist[a, b] = abs(gs - rank[min(psets[j])]) + abs(ge - rank[max(psets[j])])
    b2 = k * int(dist.max()) + 1
    b1 = (k * int(overlap.max()) + 1) * b2
    if b1 * (k + 1) >= 2**52:  # keep the composite exact in floating point
        b2, dist = 1, np.zeros_like(dist)
        b1 = k * int(overlap.max()) + 1
    W = np.where(adm, b1 + overlap * b2 - dist, 0).astype(float)
    rows, cols = linear_sum_assignment(W, maximize=True)
    return [(gi[a], pj[b]) for a, b in zip(rows.tolist(), cols.tolist()) if adm[a, b]]


def align_documents(
    gold: CorefDoc,
    pred: CorefDoc,
    strategy: MatchStrategy = PRIMARY,
) -> tuple[ZeroAlignment, MentionAlignment]:
    zeros = align_zeros_document(gold.document, pred.document, strategy.zero_mode)
    return zeros, align_mentions(gold, pred, strategy, zeros)
