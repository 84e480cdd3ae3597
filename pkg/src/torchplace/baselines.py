"""Classical set-cover references for torch placement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_EXACT = 25


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class SetCoverInstance:
    """Universe ``0..n-1`` and subsets B_i = tiles lit by a torch on tile i."""

    universe: frozenset
    subsets: tuple[frozenset, ...]

    @property
    def n(self) -> int:
        return len(self.subsets)

    def is_cover(self, chosen) -> bool:
        covered = set()
        for c in chosen:
            covered |= self.subsets[c]
        return covered >= self.universe

    def indicator(self, chosen) -> np.ndarray:
        x = np.zeros(self.n, dtype=np.int64)
        x[list(chosen)] = 1
        return x


def to_setcover(cov) -> SetCoverInstance:
    d = np.asarray(getattr(cov, "d", cov))
    n = d.shape[0]
    subsets = tuple(frozenset(np.flatnonzero(d[i]).tolist()) for i in range(n))
    return SetCoverInstance(frozenset(range(n)), subsets)


def _masks(inst: SetCoverInstance):
    elems = sorted(inst.universe)
    bit = {e: k for k, e in enumerate(elems)}
    masks = [sum(1 << bit[e] for e in s if e in bit) for s in inst.subsets]
    return (1 << len(elems)) - 1, masks


def greedy_cover(inst: SetCoverInstance) -> list[int]:
    """Repeatedly take the subset covering most uncovered elements (lowest index on ties)."""
    full, masks = _masks(inst)
    covered = 0
    chosen = []
    while covered != full:
        gains = [(m & ~covered).bit_count() for m in masks]
        best = max(range(len(masks)), key=lambda i: (gains[i], -i))
        if gains[best] == 0:
            raise ValueError("subsets do not cover the universe")
        chosen.append(best)
        covered |= masks[best]
    return sorted(chosen)


def exhaustive_min_cover(inst: SetCoverInstance) -> list[int]:
    """Exact minimum cover; the lexicographically smallest one among ties.

    Iterative deepening from a counting lower bound up to the greedy size,
    with a depth-first search over increasing index tuples. A branch is cut
    when its lowest uncovered element has no coverer left, or when the
    remaining picks cannot cover the remaining elements even at maximum size.
    """
    n = inst.n
    if n > MAX_EXACT:
        raise CapacityError(f"exact set cover is limited to n <= {MAX_EXACT}, got {n}")
    full, masks = _masks(inst)
    upper = len(greedy_cover(inst))
    biggest = max(m.bit_count() for m in masks)
    lower = -(-full.bit_count() // biggest)

    # suffix_any[i]: union of masks[i:], for the coverability cut
    suffix_any = [0] * (n + 1)
    suffix_max = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_any[i] = suffix_any[i + 1] | masks[i]
        suffix_max[i] = max(suffix_max[i + 1], masks[i].bit_count())

    def search(k, start, covered, chosen):
        if covered == full:
            return list(chosen)
        left = k - len(chosen)
        if left == 0 or start >= n:
            return None
        missing = full & ~covered
        if missing & ~suffix_any[start]:
            return None
        if missing.bit_count() > left * suffix_max[start]:
            return None
        for i in range(start, n):
            if missing & ~suffix_any[i]:
                break
            if not masks[i] & missing:
                continue
            chosen.append(i)
            found = search(k, i + 1, covered | masks[i], chosen)
            chosen.pop()
            if found is not None:
                return found
        return None

    for k in range(lower, upper + 1):
        found = search(k, 0, 0, [])
        if found is not None:
            return found
    raise AssertionError("greedy cover size should always be attainable")
