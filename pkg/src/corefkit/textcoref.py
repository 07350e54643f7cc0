"""One-line-per-document plaintext coreference format.

Tokens are separated by spaces. A token carrying annotations is written
``form|events`` where an opening bracket is ``[e1``, a closing one ``e1]``
and a one-token mention ``[e1]``. Empty nodes appear as ``##`` (plus their
form or lemma, if any) right after the word they depend on. Segments of a
discontinuous mention use the keys ``e1~1/2``, ``e1~2/2``.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .conllu import Document, Node, NodeId
from .editdistance import align_words
from .mentions import (
    CorefDoc,
    Entity,
    EntityError,
    apply_entities,
    build_corefdoc,
    events_by_position,
    mention_spans,
    node_parent,
)

__all__ = [
    "PlainDocument",
    "PlainTextError",
    "PlainToken",
    "TokenMismatchError",
    "clean",
    "deserialize",
    "parse_line",
    "serialize",
]

EMPTY_PREFIX = "##"
_FORBIDDEN = re.compile(r"[\s|\[\]~]")
_PART = re.compile(r"^(.+)~(\d+)/(\d+)$")
_BRACKETS = re.compile(r"(\[|\])")

Span = tuple[str, int, int]


class PlainTextError(ValueError):
    """Plaintext that cannot be decoded, or annotations that cannot be encoded."""


class TokenMismatchError(PlainTextError):
    def __init__(self, index: int, expected: Optional[str], found: Optional[str]):
        self.index, self.expected, self.found = index, expected, found
        super().__init__(
            f"token {index}: expected {expected!r}, found {found!r} "
            "(run the cleaner to realign model output)"
        )


@dataclass
class PlainToken:
    surface: str
    is_empty: bool = False
    empty_payload: Optional[str] = None
    # ("open" | "close", key) in reading order
    annotations: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class PlainDocument:
    tokens: list[PlainToken]
    spans: list[Span]
    # spans the lenient reader had to close itself at the end
    repaired: list[Span] = field(default_factory=list)


# -- token stream of a document -------------------------------------------


@dataclass
class _Item:
    text: str
    nodes: list[NodeId]
    is_empty: bool


def _empty_text(node: Node) -> str:
    for value in (node.form, node.lemma):
        if value != "_" and value:
            return EMPTY_PREFIX + value
    return EMPTY_PREFIX


def _surface_anchor(node: Node, index: dict[NodeId, Node]) -> NodeId:
    """The nearest non-empty ancestor (or the root) an empty node hangs from."""
    seen = {node.id}
    cur = node_parent(node)
    while cur is not None and cur.is_empty:
        if cur in seen or cur not in index:
            raise PlainTextError(f"empty node {node.id.local()} has no usable parent")
        seen.add(cur)
        cur = node_parent(index[cur])
    if cur is None:
        raise PlainTextError(f"empty node {node.id.local()} in sentence {node.id.sentence} has no parent")
    return cur


def _stream(doc: Document, mwt_surface: bool = False, with_empty: bool = True) -> list[_Item]:
    index = doc.node_index()
    items: list[_Item] = []
    for sent in doc.sentences:
        attached: dict[NodeId, list[Node]] = defaultdict(list)
        if with_empty:
            for e in sent.empty_nodes:
                attached[_surface_anchor(e, index)].append(e)
        root = NodeId(sent.nodes[0].id.sentence, 0, 0) if sent.nodes else None
        items.extend(_Item(_empty_text(e), [e.id], True) for e in attached.get(root, []))
        ranges = {t.first: t for t in sent.mwts} if mwt_surface else {}
        words = sent.words
        i = 0
        while i < len(words):
            w = words[i]
            t = ranges.get(w.id.word)
            group = [x for x in words[i:] if t and x.id.word <= t.last] if t else [w]
            items.append(_Item(t.form if t else w.form, [x.id for x in group], False))
            for x in group:
                items.extend(_Item(_empty_text(e), [e.id], True) for e in attached.get(x.id, []))
            i += len(group)
    return items


def _reference(doc: Document, mwt_surface: bool) -> list[_Item]:
    return _stream(doc, mwt_surface, with_empty=False)


# -- rendering and scanning -----------------------------------------------


def _render(texts: list[str], spans: list[Span]) -> str:
    table = events_by_position([(k, s, e, None) for k, s, e in spans])
    out = []
    for i, text in enumerate(texts):
        opens, singles, closes = table.get(i, ([], [], []))
        ev = "".join(["[" + o[0] for o in opens] + ["[" + s[0] + "]" for s in singles] + [c[0] + "]" for c in closes])
        out.append(f"{text}|{ev}" if ev else text)
    return " ".join(out)


def _split_suffix(token: str) -> tuple[str, str]:
    if "|" in token:
        form, suffix = token.rsplit("|", 1)
        if "[" in suffix or "]" in suffix:
            return form, suffix
    return token, ""


def _shape(key: str) -> str:
    m = _PART.match(key)
    return re.sub(r"\d+", "0", m.group(1) if m else key)


def _known_shapes(suffixes: list[str]) -> set[str]:
    """Shapes of keys that occur in unambiguous open or close events."""
    shapes = set()
    for suffix in suffixes:
        parts = [p for p in _BRACKETS.split(suffix) if p]
        for p, x in enumerate(parts):
            if x in "[]":
                continue
            before = parts[p - 1] if p else None
            after = parts[p + 1] if p + 1 < len(parts) else None
            if (before == "[") != (after == "]"):
                shapes.add(_shape(x))
    return shapes


def _scan(raw_tokens: list[str], strict: bool) -> PlainDocument:
    stacks: dict[str, list[int]] = defaultdict(list)
    split_tokens = [_split_suffix(raw) for raw in raw_tokens]
    # lenient reading also uses the look of the IDs around to decide "[XY]"
    shapes = set() if strict else _known_shapes([sfx for _, sfx in split_tokens])
    spans: list[Span] = []
    tokens: list[PlainToken] = []

    def bad(i: int, msg: str) -> None:
        if strict:
            raise PlainTextError(f"token {i} ({raw_tokens[i]!r}): {msg}")

    for i, (surface, suffix) in enumerate(split_tokens):
        is_empty = surface.startswith(EMPTY_PREFIX)
        tok = PlainToken(surface, is_empty, surface[len(EMPTY_PREFIX):] if is_empty else None)
        tokens.append(tok)

        def open_(key: str) -> None:
            stacks[key].append(i)
            tok.annotations.append(("open", key))

        def close(key: str) -> None:
            if stacks[key]:
                spans.append((key, stacks[key].pop(), i))
                tok.annotations.append(("close", key))
            else:
                bad(i, f"closing {key!r} without opening")

        parts = [p for p in _BRACKETS.split(suffix) if p]
        p = 0
        while p < len(parts):
            x = parts[p]
            nxt = parts[p + 1] if p + 1 < len(parts) else None
            if x == "[" and nxt is not None and nxt not in "[]":
                if p + 2 < len(parts) and parts[p + 2] == "]":
                    # "[XY]": one-token mention X Y, or opening X followed by
                    # closing Y when Y is currently open
                    split = next((k for k in range(1, len(nxt)) if stacks.get(nxt[k:])), None)
                    if split is None and shapes and _shape(nxt) not in shapes:
                        split = next(
                            (k for k in range(1, len(nxt)) if _shape(nxt[:k]) in shapes and _shape(nxt[k:]) in shapes),
                            None,
                        )
                    if split is None:
                        open_(nxt)
                        close(nxt)
                    else:
                        open_(nxt[:split])
                        close(nxt[split:])
                    p += 3
                else:
                    open_(nxt)
                    p += 2
            elif x not in "[]" and nxt == "]":
                close(x)
                p += 2
            else:
                bad(i, f"malformed annotation {suffix!r}")
                p += 1
    leftovers = sorted(((s, k) for k, st in stacks.items() for s in st), reverse=True)
    if leftovers:
        if strict:
            s, k = leftovers[0]
            raise PlainTextError(f"mention of {k!r} opened at token {s} is never closed")
        repaired = [(k, s, len(tokens) - 1) for s, k in leftovers]
        spans.extend(repaired)
        tokens[-1].annotations.extend(("close", k) for k, _, _ in repaired)
        return PlainDocument(tokens, spans, repaired)
    return PlainDocument(tokens, spans)


def parse_line(line: str, strict: bool = True) -> PlainDocument:
    """Tokens and mention spans (over token indices) of one plaintext line."""
    return _scan(line.split(), strict)


def _part_groups(spans: list[Span]) -> tuple[list[tuple[str, list[Span]]], list[Span]]:
    """Group ``key~k/n`` spans into discontinuous mentions.

    Returns ``(groups, invalid)``; plain spans form one-element groups.
    """
    groups: list[tuple[str, list[Span]]] = []
    pending: dict[tuple[str, int], list[Span]] = {}
    invalid: list[Span] = []
    for sp in sorted(spans, key=lambda sp: (sp[1], -sp[2], sp[0])):
        m = _PART.match(sp[0])
        if not m:
            groups.append((sp[0], [sp]))
            continue
        eid, k, n = m.group(1), int(m.group(2)), int(m.group(3))
        cur = pending.get((eid, n))
        if k == 1 and n > 1:
            # a fresh first part abandons an unfinished group
            if cur is not None:
                invalid.extend(cur)
            pending[(eid, n)] = [sp]
        elif cur is not None and k == len(cur) + 1 and k <= n and sp[1] > cur[-1][2]:
            cur.append(sp)
        else:
            invalid.append(sp)
            continue
        if k == n:
            groups.append((eid, pending.pop((eid, n))))
    for parts in pending.values():
        invalid.extend(parts)
    return groups, invalid


# -- serialization ---------------------------------------------------------


def serialize(cd: CorefDoc, include_annotations: bool = True, mwt_surface: bool = False) -> str:
    """Render a document as one plaintext line.

    Without annotations the line holds only the words (no empty nodes), as
    given to systems. With ``mwt_surface`` multi-word tokens are written in
    their surface form instead of as separate syntactic words.
    """
    if not include_annotations:
        return " ".join(it.text for it in _reference(cd.document, mwt_surface))
    for e in cd.entities:
        if not e.id or _FORBIDDEN.search(e.id):
            raise PlainTextError(f"entity ID {e.id!r} cannot be written in plaintext")
    items = _stream(cd.document, mwt_surface)
    position = {n: i for i, it in enumerate(items) for n in it.nodes}
    entities = cd.entities
    if mwt_surface:
        # mentions differing only inside one multi-word token coincide on the surface
        entities = []
        for e in cd.entities:
            seen, kept = set(), []
            for m in e.mentions:
                key = frozenset(position[n] for n in m.nodes)
                if key not in seen:
                    seen.add(key)
                    kept.append(m)
            entities.append(Entity(e.id, kept))
    try:
        spans4 = mention_spans(entities, position, part_key=lambda eid, k, n: f"{eid}~{k}/{n}")
    except EntityError as exc:
        hint = " once multi-word tokens are joined" if mwt_surface else ""
        raise PlainTextError(f"{cd.doc_id}: {exc}{hint}") from None
    spans = [(k, s, e) for k, s, e, _ in spans4]
    line = _render([it.text for it in items], spans)
    if sorted(parse_line(line).spans) != sorted(spans):
        raise PlainTextError(f"{cd.doc_id}: entity IDs make the bracket notation ambiguous")
    if mwt_surface:
        try:
            deserialize(line, cd.document, mwt_surface=True)
        except PlainTextError as exc:
            raise PlainTextError(f"{cd.doc_id}: {exc} once multi-word tokens are joined") from None
    return line


# -- restoration -------------------------------------------------------------


def _check_tokens(found: list[str], expected: list[str]) -> None:
    for i, (f, x) in enumerate(zip(found, expected)):
        if f != x:
            raise TokenMismatchError(i, x, f)
    if len(found) != len(expected):
        i = min(len(found), len(expected))
        raise TokenMismatchError(
            i,
            expected[i] if i < len(expected) else None,
            found[i] if i < len(found) else None,
        )


def _slots(items: list[_Item]) -> dict[int, list[NodeId]]:
    """Empty nodes per slot; slot ``j`` follows the ``j``-th word token, -1 is the start."""
    slots: dict[int, list[NodeId]] = defaultdict(list)
    cur = -1
    for it in items:
        if it.is_empty:
            slots[cur].append(it.nodes[0])
        else:
            cur += 1
    return slots


def _remove_nodes(doc: Document, gone: set[NodeId]) -> None:
    for sent in doc.sentences:
        sent.nodes = [n for n in sent.nodes if n.id not in gone]
        for n in sent.nodes:
            n.deps = [(p, r) for p, r in n.deps if p not in gone]


def _add_empty(doc: Document, ref: Optional[_Item], payload: str) -> NodeId:
    if ref is None:
        sent_i, parent, word = 0, NodeId(0, 0, 0), 0
    else:
        parent = ref.nodes[0] if len(ref.nodes) == 1 else ref.nodes[-1]
        sent_i, word = parent.sentence, parent.word
        for t in doc.sentences[sent_i].mwts:
            if t.first <= word < t.last:
                word = t.last
    sent = doc.sentences[sent_i]
    k = 1 + max((n.id.empty for n in sent.nodes if n.id.word == word), default=0)
    nid = NodeId(sent_i, word, k)
    node = Node(id=nid, form=payload or "_", deps=[(parent, "dep")])
    at = 0
    while at < len(sent.nodes) and (sent.nodes[at].id.word, sent.nodes[at].id.empty) < (word, k):
        at += 1
    sent.nodes.insert(at, node)
    return nid


def deserialize(line: str, skeleton: Document, mwt_surface: bool = False) -> CorefDoc:
    """Map a plaintext line back onto ``skeleton``.

    ``##`` tokens reuse the skeleton's empty nodes emitted at the same place,
    in order; remaining ones become new empty nodes ``p.k`` attached to the
    preceding word with relation ``dep``. Skeleton empty nodes without a
    ``##`` counterpart are dropped.
    """
    plain = parse_line(line, strict=True)
    items = _stream(skeleton, mwt_surface)
    ref = [it for it in items if not it.is_empty]
    _check_tokens([t.surface for t in plain.tokens if not t.is_empty], [it.text for it in ref])
    if not skeleton.sentences and any(t.is_empty for t in plain.tokens):
        raise PlainTextError("empty node in a document without sentences")

    doc = skeleton.copy()
    existing = _slots(items)
    used: dict[int, int] = defaultdict(int)
    token_nodes: list[list[NodeId]] = []
    new_empty: list[tuple[int, int, str]] = []
    cur = -1
    for i, tok in enumerate(plain.tokens):
        if not tok.is_empty:
            cur += 1
            token_nodes.append(list(ref[cur].nodes))
            continue
        k = used[cur]
        used[cur] += 1
        if k < len(existing.get(cur, [])):
            token_nodes.append([existing[cur][k]])
        else:
            token_nodes.append([])
            new_empty.append((i, cur, tok.empty_payload or ""))
    kept = {n for slot, ids in existing.items() for n in ids[: used[slot]]}
    _remove_nodes(doc, {n for ids in existing.values() for n in ids} - kept)
    for i, slot, payload in new_empty:
        token_nodes[i] = [_add_empty(doc, ref[slot] if slot >= 0 else None, payload)]

    groups, invalid = _part_groups(plain.spans)
    if invalid:
        raise PlainTextError(f"inconsistent discontinuous mention parts: {invalid[0][0]!r}")
    mentions = []
    for eid, parts in groups:
        nodes = [n for _, s, e in parts for i in range(s, e + 1) for n in token_nodes[i]]
        mentions.append((eid, nodes, None))
    try:
        cd = build_corefdoc(doc, mentions)
        return CorefDoc(apply_entities(doc, cd.entities), cd.entities)
    except EntityError as exc:
        raise PlainTextError(str(exc)) from None


# -- cleaning -----------------------------------------------------------------


def _uncross(spans: list[Span]) -> list[Span]:
    """Merge same-key spans that overlap without nesting; drop duplicates."""
    by_key: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for k, s, e in spans:
        by_key[k].append((s, e))
    out: list[Span] = []
    for k, items in by_key.items():
        changed = True
        items = sorted(set(items))
        while changed:
            changed = False
            for a in range(len(items)):
                for b in range(a + 1, len(items)):
                    (s1, e1), (s2, e2) = items[a], items[b]
                    if s1 < s2 <= e1 < e2 or s2 < s1 <= e2 < e1:
                        merged = (min(s1, s2), max(e1, e2))
                        items = sorted(set(items[:a] + items[a + 1 : b] + items[b + 1 :] + [merged]))
                        changed = True
                        break
                if changed:
                    break
        out.extend((k, s, e) for s, e in items)
    return out


def _base(key: str) -> str:
    m = _PART.match(key)
    return m.group(1) if m else key


def _crosses(a: tuple[int, int], b: tuple[int, int]) -> bool:
    (s1, e1), (s2, e2) = sorted([a, b])
    return s1 < s2 <= e1 < e2 or (s1 == s2 and e1 == e2)


def _repair(spans: list[Span]) -> list[Span]:
    """Make spans encodable: no same-key crossing, complete part groups.

    Parts of incomplete groups become plain mentions of their entity unless
    that would collide with a span already present.
    """
    spans = _uncross(spans)
    for _ in range(len(spans) + 1):
        _, invalid = _part_groups(spans)
        if not invalid:
            break
        bad = set(invalid)
        keep = [sp for sp in spans if sp not in bad]
        for k, s, e in sorted(bad, key=lambda sp: (sp[1], -sp[2])):
            k = _base(k)
            if not any(k2 == k and _crosses((s, e), (s2, e2)) for k2, s2, e2 in keep):
                keep.append((k, s, e))
        spans = keep
    return spans


def _restorable(texts: list[str], spans: list[Span], skeleton: Document, mwt_surface: bool) -> Optional[str]:
    line = _render(texts, spans)
    try:
        if sorted(parse_line(line).spans) != sorted(spans):
            return None
        deserialize(line, skeleton, mwt_surface)
    except PlainTextError:
        return None
    return line


def clean(raw: str, skeleton: Document, mwt_surface: bool = False) -> str:
    """Repair one line of model output so that it restores onto ``skeleton``.

    Brackets are balanced first (stray closings dropped, unclosed mentions
    closed on the last token), then the words are aligned to the skeleton by
    word-level edit distance ignoring ``##`` tokens. Annotations of words the
    model inserted move to the previous output token (or the next one at the
    start of the document); ``##`` tokens travel with the token before them.
    """
    ref = [it.text for it in _reference(skeleton, mwt_surface)]
    if not ref:
        return ""
    plain = parse_line(raw, strict=False)
    toks = plain.tokens
    surf = [i for i, t in enumerate(toks) if not t.is_empty]
    if not surf:
        return " ".join(ref)

    target: dict[int, int] = {}
    for a, b in align_words([toks[i].surface for i in surf], ref):
        if a is not None and b is not None:
            target[surf[a]] = b

    pos: dict[int, tuple[int, int, int]] = {}
    empties: dict[int, list[int]] = defaultdict(list)
    cur = -1
    last: Optional[tuple[int, int, int]] = None
    pending: list[int] = []
    for i, t in enumerate(toks):
        if t.is_empty:
            key = (cur, 1, len(empties[cur]))
            empties[cur].append(i)
        elif i in target:
            cur = target[i]
            key = (cur, 0, 0)
        elif last is None:
            pending.append(i)
            continue
        else:
            pos[i] = last
            continue
        pos[i] = key
        last = key
        for p in pending:
            pos[p] = key
        pending = []

    order: list[tuple[int, int, int]] = [(-1, 1, k) for k in range(len(empties.get(-1, [])))]
    texts = [toks[i].surface for i in empties.get(-1, [])]
    for j, word in enumerate(ref):
        order.append((j, 0, 0))
        texts.append(word)
        for k, i in enumerate(empties.get(j, [])):
            order.append((j, 1, k))
            texts.append(toks[i].surface)
    out_index = {key: n for n, key in enumerate(order)}

    def moved(sp: Span) -> Span:
        return sp[0], out_index[pos[sp[1]]], out_index[pos[sp[2]]]

    repaired = set(plain.repaired)
    # mentions left open run to the end of the document, restored words included
    spans = [(sp[0], moved(sp)[1], len(order) - 1) if sp in repaired else moved(sp) for sp in plain.spans]
    trusted = {moved(sp) for sp in plain.spans if sp not in repaired}
    spans = _repair(spans)
    line = _restorable(texts, spans, skeleton, mwt_surface)
    if line is not None:
        return line
    # something still clashes once mapped onto nodes: keep mentions one by one
    groups, _ = _part_groups(spans)
    groups.sort(key=lambda g: not all(sp in trusted for sp in g[1]))
    kept: list[Span] = []
    for _, parts in groups:
        options = [parts]
        if len(parts) > 1:
            options.append([(_base(k), s, e) for k, s, e in parts])
        for cand in options:
            if _restorable(texts, kept + cand, skeleton, mwt_surface) is not None:
                kept += cand
                break
    return _render(texts, kept)
