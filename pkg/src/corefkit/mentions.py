"""Entities and mentions decoded from the ``Entity`` MISC attribute.

The attribute uses CorefUD bracket notation: ``(e1-person-1`` opens a
mention of entity ``e1`` (everything after the first hyphen is an opaque
payload), ``e1)`` closes it and ``(e1)`` marks a one-node mention.
Discontinuous mentions carry part markers, ``(e1[1/2]`` ... ``e1[2/2])``.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence

from .conllu import Document, Node, NodeId

__all__ = [
    "CorefDoc",
    "Entity",
    "EntityError",
    "Mention",
    "MentionFlags",
    "apply_entities",
    "classify_mention",
    "compute_head",
    "extract_entities",
    "filter_singletons",
    "node_parent",
]

ENTITY_KEY = "Entity"

_BRACKET = re.compile(r"\(([^()]+)\)|\(([^()]+)|([^()]+)\)")
_PART = re.compile(r"^(.*)\[(\d+)/(\d+)\]$")


class EntityError(ValueError):
    """Inconsistent coreference annotation."""


@dataclass(frozen=True)
class Mention:
    entity_id: str
    nodes: tuple[NodeId, ...]
    head: NodeId
    payload: Optional[str] = None

    @property
    def start(self) -> NodeId:
        return self.nodes[0]

    @property
    def end(self) -> NodeId:
        return self.nodes[-1]

    @property
    def surface_nodes(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.nodes if not n.is_empty)

    @property
    def is_zero(self) -> bool:
        return all(n.is_empty for n in self.nodes)


@dataclass
class Entity:
    id: str
    mentions: list[Mention] = field(default_factory=list)

    @property
    def is_singleton(self) -> bool:
        return len(self.mentions) == 1


@dataclass
class CorefDoc:
    document: Document
    entities: list[Entity] = field(default_factory=list)

    @property
    def doc_id(self) -> str:
        return self.document.doc_id

    def mentions(self) -> list[Mention]:
        """All mentions, entity by entity."""
        return [m for e in self.entities for m in e.mentions]

    def entity_structure(self) -> dict[str, frozenset[frozenset[NodeId]]]:
        """Entity ID -> set of mention node sets; handy for equality checks."""
        return {e.id: frozenset(frozenset(m.nodes) for m in e.mentions) for e in self.entities}


# -- decoding -------------------------------------------------------------


def _split_open(body: str) -> tuple[str, Optional[str]]:
    eid, sep, payload = body.partition("-")
    return eid, (payload if sep else None)


def parse_entity_value(value: str) -> list[tuple[str, str, Optional[str]]]:
    """Split an Entity attribute value into ``(kind, key, payload)`` events.

    ``kind`` is ``"open"``, ``"close"`` or ``"single"``; ``key`` still carries
    any ``[k/n]`` part marker.
    """
    events = []
    pos = 0
    for m in _BRACKET.finditer(value):
        if m.start() != pos:
            raise EntityError(f"malformed Entity value {value!r}")
        pos = m.end()
        if m.group(1) is not None:
            key, payload = _split_open(m.group(1))
            events.append(("single", key, payload))
        elif m.group(2) is not None:
            key, payload = _split_open(m.group(2))
            events.append(("open", key, payload))
        else:
            events.append(("close", m.group(3), None))
    if pos != len(value):
        raise EntityError(f"malformed Entity value {value!r}")
    return events


def extract_entities(doc: Document) -> CorefDoc:
    """Decode all mentions of ``doc`` and compute their heads."""
    order = [n.id for n in doc.nodes()]
    where = {nid: i for i, nid in enumerate(order)}
    stacks: dict[str, list[tuple[int, Optional[str]]]] = defaultdict(list)
    spans: list[tuple[str, int, int, Optional[str]]] = []

    for i, node in enumerate(doc.nodes()):
        value = node.get_misc(ENTITY_KEY)
        if not value:
            continue
        try:
            events = parse_entity_value(value)
        except EntityError as exc:
            raise EntityError(f"{doc.doc_id}: node {node.id.local()} in sentence {node.id.sentence}: {exc}") from None
        for kind, key, payload in events:
            if kind == "single":
                spans.append((key, i, i, payload))
            elif kind == "open":
                stacks[key].append((i, payload))
            else:
                if not stacks[key]:
                    raise EntityError(
                        f"{doc.doc_id}: closing bracket for {key!r} without opening "
                        f"(sentence {node.id.sentence}, node {node.id.local()})"
                    )
                start, payload = stacks[key].pop()
                spans.append((key, start, i, payload))
    for key, stack in stacks.items():
        if stack:
            sent = order[stack[-1][0]].sentence
            raise EntityError(f"{doc.doc_id}: unclosed mention of {key!r} opened in sentence {sent}")

    raw = [(key, tuple(order[start : end + 1]), payload) for key, start, end, payload in spans]
    return build_corefdoc(doc, _merge_parts(raw, where))


def _merge_parts(
    raw: list[tuple[str, tuple[NodeId, ...], Optional[str]]],
    where: dict[NodeId, int],
) -> list[tuple[str, tuple[NodeId, ...], Optional[str]]]:
    """Join ``eid[k/n]`` segments into single discontinuous mentions."""
    raw = sorted(raw, key=lambda r: (where[r[1][0]], -where[r[1][-1]]))
    out = []
    pending: dict[tuple[str, int], tuple[list[NodeId], Optional[str], int]] = {}
    for key, nodes, payload in raw:
        m = _PART.match(key)
        if not m:
            out.append((key, nodes, payload))
            continue
        eid, k, n = m.group(1), int(m.group(2)), int(m.group(3))
        if k == 1:
            if (eid, n) in pending:
                raise EntityError(f"interleaved discontinuous mentions of {eid!r}")
            pending[(eid, n)] = (list(nodes), payload, 1)
        else:
            if (eid, n) not in pending or pending[(eid, n)][2] != k - 1:
                raise EntityError(f"discontinuous part {key!r} out of sequence")
            acc, pl, _ = pending[(eid, n)]
            pending[(eid, n)] = (acc + list(nodes), pl, k)
        if k == n:
            acc, pl, _ = pending.pop((eid, n))
            out.append((eid, tuple(sorted(set(acc), key=where.__getitem__)), pl))
    if pending:
        eid, _ = next(iter(pending))
        raise EntityError(f"incomplete discontinuous mention of {eid!r}")
    return out


def build_corefdoc(
    doc: Document,
    mentions: Iterable[tuple[str, Sequence[NodeId], Optional[str]]],
) -> CorefDoc:
    """Group ``(entity_id, nodes, payload)`` triples into entities with heads."""
    index = doc.node_index()
    where = {nid: i for i, nid in enumerate(index)}
    entities: dict[str, Entity] = {}
    seen: set[tuple[str, frozenset[NodeId]]] = set()
    items = []
    for eid, nodes, payload in mentions:
        nodes = tuple(sorted(set(nodes), key=where.__getitem__))
        if not nodes:
            continue
        key = (eid, frozenset(nodes))
        if key in seen:
            raise EntityError(f"{doc.doc_id}: entity {eid!r} has two identical mentions")
        seen.add(key)
        items.append((eid, nodes, payload))
    items.sort(key=lambda it: (where[it[1][0]], -where[it[1][-1]], it[0]))
    for eid, nodes, payload in items:
        head = _head(nodes, index)
        entities.setdefault(eid, Entity(eid)).mentions.append(Mention(eid, nodes, head, payload))
    return CorefDoc(doc, list(entities.values()))


# -- heads and classification ---------------------------------------------


def node_parent(node: Node) -> Optional[NodeId]:
    """Tree parent: the basic head, or the first enhanced parent of an empty node."""
    if node.head is not None:
        return node.head
    if node.deps:
        return node.deps[0][0]
    return None


def _depth(nid: NodeId, index: dict[NodeId, Node], cache: dict[NodeId, int]) -> int:
    if nid in cache:
        return cache[nid]
    path = [nid]
    cur = node_parent(index[nid]) if nid in index else None
    base = 0
    while cur is not None and not cur.is_root and cur in index:
        if cur in cache:
            base = cache[cur]
            break
        if cur in path:
            break
        path.append(cur)
        cur = node_parent(index[cur])
    for i, p in enumerate(reversed(path), 1):
        cache[p] = base + i
    return cache[nid]


def _head(nodes: Sequence[NodeId], index: dict[NodeId, Node]) -> NodeId:
    if all(n.is_empty for n in nodes):
        return nodes[0]
    inside = set(nodes)
    cands = []
    for n in nodes:
        p = node_parent(index[n]) if n in index else None
        if p is None or p.is_root or p not in inside:
            cands.append(n)
    # a zero inside a larger mention never becomes its head
    surface = [n for n in cands if not n.is_empty] or [n for n in nodes if not n.is_empty]
    if len(surface) == 1:
        return surface[0]
    cache: dict[NodeId, int] = {}
    return min(surface, key=lambda n: (_depth(n, index, cache), n))


def compute_head(mention: Mention, doc: Document) -> NodeId:
    """Head node of ``mention``.

    Candidates are nodes whose parent lies outside the mention (or is the
    root); the shallowest candidate wins, then the earliest in surface order.
    Mentions made only of empty nodes are headed by their first node.
    """
    return _head(mention.nodes, doc.node_index())


def filter_singletons(cd: CorefDoc) -> CorefDoc:
    return CorefDoc(cd.document, [e for e in cd.entities if len(e.mentions) > 1])


@dataclass(frozen=True)
class MentionFlags:
    is_zero: bool
    has_empty: bool
    has_gap: bool
    non_treelet: bool


def classify_mention(m: Mention, doc: Document) -> MentionFlags:
    index = doc.node_index()
    words = [n for n in index if not n.is_empty]
    pos = {nid: i for i, nid in enumerate(words)}
    surface = [pos[n] for n in m.nodes if n in pos]
    has_gap = bool(surface) and (max(surface) - min(surface) + 1) != len(set(surface))

    inside = set(m.nodes)
    adj: dict[NodeId, set[NodeId]] = {n: set() for n in inside}
    for n in inside:
        p = node_parent(index[n]) if n in index else None
        if p in inside:
            adj[n].add(p)
            adj[p].add(n)
    start = m.nodes[0]
    seen = {start}
    todo = [start]
    while todo:
        cur = todo.pop()
        for nb in adj[cur]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return MentionFlags(
        is_zero=m.is_zero,
        has_empty=any(n.is_empty for n in m.nodes),
        has_gap=has_gap,
        non_treelet=len(seen) != len(inside),
    )


# -- encoding -------------------------------------------------------------


def contiguous_segments(nodes: Sequence[NodeId], position: dict[NodeId, int]) -> list[list[NodeId]]:
    """Split ``nodes`` into maximal runs of consecutive ``position`` values.

    Several nodes may share a position (words of one multi-word token).
    """
    ordered = sorted(set(nodes), key=position.__getitem__)
    segs: list[list[NodeId]] = []
    for n in ordered:
        if segs and position[n] <= position[segs[-1][-1]] + 1:
            segs[-1].append(n)
        else:
            segs.append([n])
    return segs


def _check_crossing(spans: list[tuple[str, int, int]], what: str) -> None:
    by_key: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for key, s, e in spans:
        by_key[key].append((s, e))
    for key, items in by_key.items():
        items.sort(key=lambda se: (se[0], -se[1]))
        open_ends: list[int] = []
        for s, e in items:
            while open_ends and open_ends[-1] < s:
                open_ends.pop()
            if open_ends and e > open_ends[-1]:
                raise EntityError(f"{what}: crossing mentions of entity {key!r}")
            open_ends.append(e)


def mention_spans(
    entities: Iterable[Entity],
    position: dict[NodeId, int],
    part_key=lambda eid, k, n: f"{eid}[{k}/{n}]",
) -> list[tuple[str, int, int, Optional[str]]]:
    """Bracket spans ``(key, start, end, payload)`` over ``position`` order."""
    entities = list(entities)
    spans = []
    for e in entities:
        for m in e.mentions:
            segs = contiguous_segments(m.nodes, position)
            if len(segs) == 1:
                spans.append((e.id, position[segs[0][0]], position[segs[0][-1]], m.payload))
            else:
                for k, seg in enumerate(segs, 1):
                    key = part_key(e.id, k, len(segs))
                    spans.append((key, position[seg[0]], position[seg[-1]], m.payload if k == 1 else None))
    _check_crossing([(k, s, e) for k, s, e, _ in spans], "annotation")
    _check_parts([(e.id, m) for e in entities for m in e.mentions], position)
    return spans


def _check_parts(mentions: list[tuple[str, Mention]], position: dict[NodeId, int]) -> None:
    """Readers pair part markers greedily; refuse what they would misread."""
    last_end: dict[str, int] = {}
    multi = []
    for eid, m in mentions:
        segs = contiguous_segments(m.nodes, position)
        if len(segs) > 1:
            multi.append((position[segs[0][0]], position[segs[-1][-1]], eid, len(segs)))
    multi.sort()
    for start, end, eid, n in multi:
        key = f"{eid}/{n}"
        if start <= last_end.get(key, -1):
            raise EntityError(f"interleaved discontinuous mentions of entity {eid!r}")
        last_end[key] = end


def events_by_position(
    spans: list[tuple[str, int, int, Optional[str]]],
) -> dict[int, tuple[list, list, list]]:
    """Per-position (opens, singles, closes) in canonical rendering order.

    Opens of longer spans come first, closes of inner spans first; ties fall
    back to the key.
    """
    table: dict[int, tuple[list, list, list]] = defaultdict(lambda: ([], [], []))
    for key, s, e, payload in spans:
        if s == e:
            table[s][1].append((key, s, e, payload))
        else:
            table[s][0].append((key, s, e, payload))
            table[e][2].append((key, s, e, payload))
    for opens, singles, closes in table.values():
        opens.sort(key=lambda sp: (-sp[2], sp[0]))
        singles.sort(key=lambda sp: sp[0])
        closes.sort(key=lambda sp: (-sp[1], _neg_str(sp[0])))
    return table


def _neg_str(s: str) -> tuple[int, ...]:
    return tuple(-ord(c) for c in s) + (1,)


def apply_entities(doc: Document, entities: Iterable[Entity]) -> Document:
    """A copy of ``doc`` whose ``Entity`` attributes encode ``entities``."""
    out = doc.copy()
    nodes = list(out.nodes())
    position = {n.id: i for i, n in enumerate(nodes)}
    spans = mention_spans(entities, position)
    table = events_by_position(spans)
    for i, node in enumerate(nodes):
        opens, singles, closes = table.get(i, ([], [], []))
        parts = [c[0] + ")" for c in closes]
        parts += ["(" + o[0] + (f"-{o[3]}" if o[3] else "") for o in opens]
        parts += ["(" + s[0] + (f"-{s[3]}" if s[3] else "") + ")" for s in singles]
        node.set_misc(ENTITY_KEY, "".join(parts) or None)
    return out


def iter_mentions_with_entity(cd: CorefDoc) -> Iterator[tuple[Entity, Mention]]:
    for e in cd.entities:
        for m in e.mentions:
            yield e, m


def rename_entities(cd: CorefDoc, mapping: dict[str, str]) -> CorefDoc:
    ents = []
    for e in cd.entities:
        new = mapping.get(e.id, e.id)
        ents.append(Entity(new, [replace(m, entity_id=new) for m in e.mentions]))
    return CorefDoc(cd.document, ents)
