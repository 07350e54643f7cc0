"""Reading and writing CoNLL-U files with empty nodes and multi-word tokens.

The reader keeps every column it does not interpret (XPOS, FEATS, unknown
MISC attributes, comments) verbatim so that ``write_conllu(parse_conllu(s))``
reproduces well-formed input byte for byte.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

__all__ = [
    "ConlluError",
    "Diagnostic",
    "Document",
    "MultiwordToken",
    "Node",
    "NodeId",
    "Sentence",
    "parse_conllu",
    "read_conllu",
    "validate",
    "write_conllu",
]

_WORD_ID = re.compile(r"^[1-9][0-9]*$")
_EMPTY_ID = re.compile(r"^(0|[1-9][0-9]*)\.([1-9][0-9]*)$")
_MWT_ID = re.compile(r"^([1-9][0-9]*)-([1-9][0-9]*)$")
_NEWDOC = re.compile(r"^#\s*newdoc(?:\s+id\s*=\s*(.*?))?\s*$")
_SENT_ID = re.compile(r"^#\s*sent_id\s*=\s*(.*?)\s*$")


class ConlluError(ValueError):
    """Malformed CoNLL-U input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NodeId(NamedTuple):
    """Position of a node in a document.

    ``word`` is the CoNLL-U word index (0 is the artificial root) and
    ``empty`` the decimal part of an empty-node ID (0 for surface words).
    Tuple order equals document order.
    """

    sentence: int
    word: int
    empty: int = 0

    @property
    def is_empty(self) -> bool:
        return self.empty > 0

    @property
    def is_root(self) -> bool:
        return self.word == 0 and self.empty == 0

    def local(self) -> str:
        """The CoNLL-U ID string within its sentence (``"3"`` or ``"3.1"``)."""
        return f"{self.word}.{self.empty}" if self.empty else str(self.word)


@dataclass
class Node:
    id: NodeId
    form: str = "_"
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: Optional[NodeId] = None
    deprel: str = "_"
    deps: list[tuple[NodeId, str]] = field(default_factory=list)
    misc: list[tuple[str, Optional[str]]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return self.id.empty > 0

    def get_misc(self, key: str) -> Optional[str]:
        for k, v in self.misc:
            if k == key:
                return v
        return None

    def set_misc(self, key: str, value: Optional[str]) -> None:
        """Replace ``key`` in place, append it, or drop it when ``value`` is None."""
        for i, (k, _) in enumerate(self.misc):
            if k == key:
                if value is None:
                    del self.misc[i]
                else:
                    self.misc[i] = (key, value)
                return
        if value is not None:
            self.misc.append((key, value))


@dataclass
class MultiwordToken:
    first: int
    last: int
    form: str
    # columns 3-10 of the range line, kept verbatim
    rest: tuple[str, ...] = ("_",) * 8


@dataclass
class Sentence:
    nodes: list[Node] = field(default_factory=list)
    mwts: list[MultiwordToken] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    @property
    def sent_id(self) -> str:
        for c in self.comments:
            m = _SENT_ID.match(c)
            if m:
                return m.group(1)
        return ""

    @property
    def words(self) -> list[Node]:
        return [n for n in self.nodes if not n.is_empty]

    @property
    def empty_nodes(self) -> list[Node]:
        return [n for n in self.nodes if n.is_empty]

    @property
    def mwt_ranges(self) -> list[tuple[int, int, str]]:
        return [(t.first, t.last, t.form) for t in self.mwts]

    def node(self, word: int, empty: int = 0) -> Optional[Node]:
        for n in self.nodes:
            if n.id.word == word and n.id.empty == empty:
                return n
        return None


@dataclass
class Document:
    doc_id: str
    sentences: list[Sentence] = field(default_factory=list)

    def nodes(self) -> Iterable[Node]:
        for s in self.sentences:
            yield from s.nodes

    def node_index(self) -> dict[NodeId, Node]:
        return {n.id: n for n in self.nodes()}

    def word_count(self) -> int:
        """Number of non-empty nodes."""
        return sum(len(s.words) for s in self.sentences)

    def copy(self) -> "Document":
        return copy.deepcopy(self)


# -- parsing --------------------------------------------------------------


def _parse_ref(text: str, sentence: int, lineno: int) -> NodeId:
    if text == "0":
        return NodeId(sentence, 0, 0)
    if _WORD_ID.match(text):
        return NodeId(sentence, int(text), 0)
    m = _EMPTY_ID.match(text)
    if m:
        return NodeId(sentence, int(m.group(1)), int(m.group(2)))
    raise ConlluError(f"malformed node reference {text!r}", lineno)


def _parse_misc(text: str) -> list[tuple[str, Optional[str]]]:
    if text == "_":
        return []
    out: list[tuple[str, Optional[str]]] = []
    for item in text.split("|"):
        k, sep, v = item.partition("=")
        out.append((k, v if sep else None))
    return out


def _format_misc(misc: list[tuple[str, Optional[str]]]) -> str:
    if not misc:
        return "_"
    return "|".join(k if v is None else f"{k}={v}" for k, v in misc)


def _parse_deps(text: str, sentence: int, lineno: int) -> list[tuple[NodeId, str]]:
    if text == "_":
        return []
    deps = []
    for item in text.split("|"):
        parent, sep, rel = item.partition(":")
        if not sep:
            raise ConlluError(f"malformed enhanced dependency {item!r}", lineno)
        deps.append((_parse_ref(parent, sentence, lineno), rel))
    return deps


class _SentenceBuilder:
    def __init__(self, index: int):
        self.sentence = Sentence()
        self.index = index
        self.lines: dict[NodeId, int] = {}
        self.last_key: tuple[int, int] = (0, 0)

    def add_node(self, node: Node, lineno: int) -> None:
        key = (node.id.word, node.id.empty)
        if node.id in self.lines:
            raise ConlluError(f"duplicate node ID {node.id.local()}", lineno)
        if key <= self.last_key and self.sentence.nodes:
            raise ConlluError(f"node ID {node.id.local()} out of order", lineno)
        if not node.is_empty and node.id.word != self.last_key[0] + 1:
            raise ConlluError(f"expected word {self.last_key[0] + 1}, got {node.id.word}", lineno)
        if node.is_empty and node.id.word != self.last_key[0]:
            raise ConlluError(f"empty node {node.id.local()} misplaced", lineno)
        self.last_key = key
        self.lines[node.id] = lineno
        self.sentence.nodes.append(node)

    def finish(self) -> Sentence:
        known = set(self.lines)
        for node in self.sentence.nodes:
            lineno = self.lines[node.id]
            refs = [p for p, _ in node.deps]
            if node.head is not None:
                refs.append(node.head)
            for ref in refs:
                if not ref.is_root and ref not in known:
                    raise ConlluError(f"reference to nonexistent node {ref.local()}", lineno)
        words = {n.id.word for n in self.sentence.words}
        for t in self.sentence.mwts:
            if not (t.first in words and t.last in words):
                raise ConlluError(f"multi-word token {t.first}-{t.last} outside sentence", None)
        return self.sentence


def parse_conllu(text: str, strip_empty_forms: bool = False) -> list[Document]:
    """Parse CoNLL-U text into documents.

    Document boundaries come from ``# newdoc`` comments; sentences before the
    first such comment (or a file without any) form a document with a
    synthetic ID. With ``strip_empty_forms`` the FORM and LEMMA of empty
    nodes are replaced by ``_``.
    """
    text = text.replace("\r\n", "\n")
    if text.startswith("﻿"):
        text = text[1:]
    docs: list[Document] = []
    builder: Optional[_SentenceBuilder] = None
    comments: list[str] = []
    sentence_index = 0

    def close_sentence() -> None:
        nonlocal builder, sentence_index
        if builder is None:
            return
        sent = builder.finish()
        newdoc = next((c for c in sent.comments if _NEWDOC.match(c)), None)
        if newdoc is not None or not docs:
            doc_id = (_NEWDOC.match(newdoc).group(1) or "") if newdoc else ""
            docs.append(Document(doc_id or f"doc{len(docs) + 1}"))
        docs[-1].sentences.append(sent)
        builder = None
        sentence_index += 1

    lines = text.split("\n")
    while len(lines) > 1 and lines[-1] == "" and lines[-2] == "":
        lines.pop()
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, 1):
        if line == "":
            if builder is None:
                if comments:
                    raise ConlluError("comment block without tokens", lineno)
                raise ConlluError("unexpected blank line", lineno)
            close_sentence()
            continue
        if line.startswith("#"):
            if builder is not None and builder.sentence.nodes:
                raise ConlluError("comment inside sentence", lineno)
            comments.append(line)
            continue
        if builder is None:
            # sentence indices restart in every document
            if any(_NEWDOC.match(c) for c in comments):
                sentence_index = 0
            builder = _SentenceBuilder(sentence_index)
            builder.sentence.comments = comments
            comments = []
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 columns, got {len(cols)}", lineno)
        sid = builder.index
        m = _MWT_ID.match(cols[0])
        if m:
            first, last = int(m.group(1)), int(m.group(2))
            if last <= first:
                raise ConlluError(f"bad multi-word token range {cols[0]}", lineno)
            if builder.sentence.mwts and first <= builder.sentence.mwts[-1].last:
                raise ConlluError(f"overlapping multi-word token {cols[0]}", lineno)
            builder.sentence.mwts.append(MultiwordToken(first, last, cols[1], tuple(cols[2:])))
            continue
        if _WORD_ID.match(cols[0]):
            nid = NodeId(sid, int(cols[0]), 0)
            head = None if cols[6] == "_" else _parse_ref(cols[6], sid, lineno)
            if head is not None and head.is_empty:
                raise ConlluError("basic head cannot be an empty node", lineno)
        else:
            em = _EMPTY_ID.match(cols[0])
            if not em:
                raise ConlluError(f"malformed ID {cols[0]!r}", lineno)
            nid = NodeId(sid, int(em.group(1)), int(em.group(2)))
            if cols[6] != "_":
                raise ConlluError("empty node with a basic head", lineno)
            head = None
        form, lemma = cols[1], cols[2]
        if nid.is_empty and strip_empty_forms:
            form = lemma = "_"
        node = Node(
            id=nid,
            form=form,
            lemma=lemma,
            upos=cols[3],
            xpos=cols[4],
            feats=cols[5],
            head=head,
            deprel=cols[7],
            deps=_parse_deps(cols[8], sid, lineno),
            misc=_parse_misc(cols[9]),
        )
        builder.add_node(node, lineno)
    if builder is not None:
        close_sentence()
    elif comments:
        raise ConlluError("trailing comments without a sentence", len(lines))
    return docs


def read_conllu(path, strip_empty_forms: bool = False) -> list[Document]:
    with open(path, encoding="utf-8-sig") as f:
        return parse_conllu(f.read(), strip_empty_forms=strip_empty_forms)


# -- writing --------------------------------------------------------------


def _node_line(node: Node) -> str:
    head = "_" if node.head is None else node.head.local()
    deps = "|".join(f"{p.local()}:{r}" for p, r in node.deps) if node.deps else "_"
    return "\t".join(
        [
            node.id.local(),
            node.form,
            node.lemma,
            node.upos,
            node.xpos,
            node.feats,
            head,
            node.deprel,
            deps,
            _format_misc(node.misc),
        ]
    )


def write_conllu(docs: Iterable[Document]) -> str:
    """Serialize documents; raises ValueError if any fails :func:`validate`."""
    out: list[str] = []
    for doc in docs:
        problems = validate(doc)
        if problems:
            raise ValueError(f"document {doc.doc_id!r} is invalid: {problems[0]}")
        for sent in doc.sentences:
            out.extend(sent.comments)
            mwts = {t.first: t for t in sent.mwts}
            for node in sent.nodes:
                t = mwts.get(node.id.word) if not node.is_empty else None
                if t is not None:
                    out.append("\t".join([f"{t.first}-{t.last}", t.form, *t.rest]))
                out.append(_node_line(node))
            out.append("")
    return "\n".join(out) + ("\n" if out else "")


# -- validation -----------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    sentence: int
    node: Optional[str]
    message: str

    def __str__(self) -> str:
        where = f"sentence {self.sentence}" + (f", node {self.node}" if self.node else "")
        return f"{self.kind} ({where}): {self.message}"


def validate(doc: Document) -> list[Diagnostic]:
    """Check structural invariants; an empty list means the document is valid."""
    diags: list[Diagnostic] = []
    if not doc.doc_id:
        diags.append(Diagnostic("doc id", -1, None, "empty document ID"))
    for si, sent in enumerate(doc.sentences):
        seen: set[tuple[int, int]] = set()
        prev: Optional[tuple[int, int]] = None
        expected_word = 1
        for node in sent.nodes:
            key = (node.id.word, node.id.empty)
            loc = node.id.local()
            if node.id.sentence != si:
                diags.append(Diagnostic("sentence index", si, loc, f"node claims sentence {node.id.sentence}"))
            if key in seen:
                diags.append(Diagnostic("duplicate id", si, loc, "node ID used twice"))
                continue
            seen.add(key)
            if prev is not None and key < prev:
                diags.append(Diagnostic("order", si, loc, "node IDs not increasing"))
            prev = key
            if node.is_empty:
                if node.head is not None:
                    diags.append(Diagnostic("empty head", si, loc, "empty node has a basic head"))
            else:
                if node.id.word != expected_word:
                    diags.append(Diagnostic("word sequence", si, loc, f"expected word {expected_word}"))
                expected_word = node.id.word + 1
        refs_ok = {(w, e) for w, e in seen} | {(0, 0)}
        heads: dict[int, int] = {}
        for node in sent.nodes:
            loc = node.id.local()
            if node.head is not None:
                if (node.head.word, node.head.empty) not in refs_ok or node.head.is_empty:
                    diags.append(Diagnostic("bad head", si, loc, f"head {node.head.local()} does not exist"))
                elif not node.is_empty:
                    heads[node.id.word] = node.head.word
            for parent, _ in node.deps:
                if (parent.word, parent.empty) not in refs_ok:
                    diags.append(Diagnostic("bad dep", si, loc, f"enhanced parent {parent.local()} does not exist"))
        diags.extend(_cycles(heads, si))
        last = 0
        words = {n.id.word for n in sent.words}
        for t in sent.mwts:
            if t.first >= t.last or t.first <= last:
                diags.append(Diagnostic("mwt", si, f"{t.first}-{t.last}", "overlapping or empty range"))
            elif not (t.first in words and t.last in words):
                diags.append(Diagnostic("mwt", si, f"{t.first}-{t.last}", "range outside sentence"))
            last = max(last, t.last)
    return diags


def _cycles(heads: dict[int, int], si: int) -> list[Diagnostic]:
    diags = []
    state: dict[int, int] = {}  # 1 = on current path, 2 = done
    for start in heads:
        path = []
        w = start
        while w in heads and state.get(w) is None:
            state[w] = 1
            path.append(w)
            w = heads[w]
        if state.get(w) == 1:
            cyc = path[path.index(w):]
            diags.append(Diagnostic("cycle", si, str(min(cyc)), "head cycle through " + "->".join(map(str, cyc))))
        for p in path:
            state[p] = 2
    return diags
