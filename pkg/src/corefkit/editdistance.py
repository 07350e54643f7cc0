"""Word-level Levenshtein alignment.

Insertions, deletions and substitutions cost 1, equal words cost 0. Among
alignments of minimal cost the one with the most equal pairs is chosen;
remaining ties favour matching words as far left as possible.
"""

from __future__ import annotations

from typing import Hashable, Optional, Sequence

import numpy as np

__all__ = ["align_words", "levenshtein"]


def _encode(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict[Hashable, int] = {}
    ia = np.array([vocab.setdefault(x, len(vocab)) for x in a], dtype=np.int64)
    ib = np.array([vocab.setdefault(x, len(vocab)) for x in b], dtype=np.int64)
    return ia, ib


def _table(ia: np.ndarray, ib: np.ndarray, gap: int) -> np.ndarray:
    """DP over composite cost ``gap * edits - equal_pairs``."""
    n, m = len(ia), len(ib)
    D = np.empty((n + 1, m + 1), dtype=np.int64)
    steps = np.arange(m + 1, dtype=np.int64) * gap
    D[0] = steps
    for i in range(1, n + 1):
        diag = D[i - 1, :-1] + np.where(ib == ia[i - 1], -1, gap)
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = D[i - 1, 0] + gap
        cand[1:] = np.minimum(D[i - 1, 1:] + gap, diag)
        # horizontal moves: D[i, j] = min_k cand[k] + gap * (j - k)
        D[i] = np.minimum.accumulate(cand - steps) + steps
    return D


def align_words(a: Sequence[Hashable], b: Sequence[Hashable]) -> list[tuple[Optional[int], Optional[int]]]:
    """Optimal alignment of ``a`` (source) onto ``b`` (target).

    Returns ``(i, j)`` steps in order: both set for an equal or substituted
    pair, ``(i, None)`` when ``a[i]`` is deleted and ``(None, j)`` when
    ``b[j]`` has no source counterpart.
    """
    # a shared prefix is always matched; skipping it keeps the table small
    k = 0
    while k < len(a) and k < len(b) and a[k] == b[k]:
        k += 1
    ia, ib = _encode(a[k:], b[k:])
    n, m = len(ia), len(ib)
    gap = n + m + 2
    D = _table(ia, ib, gap)
    steps: list[tuple[Optional[int], Optional[int]]] = []
    i, j = n, m
    while i > 0 or j > 0:
        # gaps are tried before the diagonal so that matches end up leftmost
        if i > 0 and D[i, j] == D[i - 1, j] + gap:
            steps.append((i - 1 + k, None))
            i -= 1
        elif j > 0 and D[i, j] == D[i, j - 1] + gap:
            steps.append((None, j - 1 + k))
            j -= 1
        else:
            steps.append((i - 1 + k, j - 1 + k))
            i -= 1
            j -= 1
    steps.reverse()
    return [(x, x) for x in range(k)] + steps


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Plain edit distance in words."""
    steps = align_words(a, b)
    return sum(1 for i, j in steps if i is None or j is None or a[i] != b[j])
