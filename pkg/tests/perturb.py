"""Noise model for cleaner tests: word substitutions and bracket deletions."""

from __future__ import annotations

import random

from corefkit.mentions import events_by_position
from corefkit.textcoref import _part_groups, parse_line


def _events(spans):
    """Per token list of events ``(kind, span)`` in canonical order."""
    table = events_by_position([(k, s, e, None) for k, s, e in spans])
    out = {}
    for i, (opens, singles, closes) in table.items():
        out[i] = [("open", o[:3]) for o in opens] + [("single", s[:3]) for s in singles] + [("close", c[:3]) for c in closes]
    return out


def perturb(line: str, rng: random.Random, sub_rate: float = 0.05, del_rate: float = 0.05):
    """Return ``(noisy_line, expected_spans)``.

    Surface words are replaced by fresh words at ``sub_rate``, bracket
    events are deleted at ``del_rate``. ``expected_spans`` are the original
    spans whose brackets both survived and whose extent holds no deleted
    bracket of the same entity key; these must come out of the cleaner
    unchanged (token positions are not shifted by substitutions).
    """
    plain = parse_line(line)
    texts = [t.surface for t in plain.tokens]
    events = _events(plain.spans)
    deleted = set()  # (kind, span) with kind in open/close
    kept_events = {}
    for i in range(len(texts)):
        kept = []
        for kind, sp in events.get(i, []):
            if rng.random() < del_rate:
                if kind == "single":
                    deleted.add(("open", sp))
                    deleted.add(("close", sp))
                else:
                    deleted.add((kind, sp))
            else:
                kept.append((kind, sp))
        kept_events[i] = kept
    for i, t in enumerate(plain.tokens):
        if not t.is_empty and rng.random() < sub_rate:
            texts[i] = f"zz{i}q"
    out = []
    for i, text in enumerate(texts):
        ev = ""
        for kind, (k, s, e) in kept_events[i]:
            ev += "[" + k if kind == "open" else ("[" + k + "]" if kind == "single" else k + "]")
        out.append(f"{text}|{ev}" if ev else text)
    dead = {(sp[0], pos) for kind, sp in deleted for pos in ([sp[1]] if kind == "open" else [sp[2]])}

    def intact(sp) -> bool:
        k, s, e = sp
        if ("open", sp) in deleted or ("close", sp) in deleted:
            return False
        return not any(key == k and s <= pos <= e for key, pos in dead)

    # a discontinuous mention counts only when every part is intact
    groups, _ = _part_groups(plain.spans)
    expected = [sp for _, parts in groups if all(intact(p) for p in parts) for sp in parts]
    return " ".join(out), expected
