"""Independent brute-force oracles used to cross-check the implementation.

Everything here is deliberately naive: dynamic-programming edit distance,
exhaustive matching by permutation, full sorts, survivor-index tracking.
These functions must stay independent of the code paths they verify.
"""

from __future__ import annotations

import itertools
from typing import Sequence


def levenshtein(a: str, b: str) -> int:
    """Classic O(len(a)*len(b)) DP edit distance."""
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def canonical_bio_repair(tags: Sequence[str]) -> list[str]:
    """Repair dangling I- tags to B-, independently of bio_to_spans."""
    repaired: list[str] = []
    open_type: str | None = None
    for tag in tags:
        if tag == "O":
            repaired.append("O")
            open_type = None
        elif tag.startswith("B-"):
            repaired.append(tag)
            open_type = tag[2:]
        else:  # I-
            t = tag[2:]
            if open_type == t:
                repaired.append(tag)
            else:
                repaired.append("B-" + t)
                open_type = t
    return repaired


def remap_spans_over_survivors(
    spans: Sequence[tuple[int, int, str]], kept: Sequence[bool]
) -> list[tuple[int, int, str]]:
    """Span remap by tracking surviving original token indices."""
    new_pos = {}
    pos = 0
    for i, keep in enumerate(kept):
        if keep:
            new_pos[i] = pos
            pos += 1
    out = []
    for start, end, slot_type in spans:
        alive = [i for i in range(start, end + 1) if kept[i]]
        if alive:
            out.append((new_pos[alive[0]], new_pos[alive[-1]], slot_type))
    return out


def is_subsequence(sub: Sequence[str], seq: Sequence[str]) -> bool:
    it = iter(seq)
    return all(tok in it for tok in sub)


def max_matching_tp(
    gold: Sequence[tuple[str, str]], pred: Sequence[tuple[str, str]]
) -> int:
    """Maximum one-to-one matching on exact-equality edges, by brute force.

    Feasible for the small instances used in tests (<= 6 pairs per side).
    """
    if len(gold) > len(pred):
        gold, pred = pred, gold
    best = 0
    indices = range(len(pred))
    for assignment in itertools.permutations(indices, len(gold)):
        matched = sum(1 for g, j in zip(gold, assignment) if g == pred[j])
        best = max(best, matched)
    return best


def full_sort_ranking(sims: Sequence[float], ids: Sequence[str]) -> list[int]:
    """Indices sorted by descending similarity, ties by ascending id."""
    return sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
