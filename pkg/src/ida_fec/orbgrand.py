"""ORBGRAND: logistic-weight flip patterns applied in reliability order."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .chase import ReliabilityView, hard_decision, sort_reliability
from .galois_bch import CodeSpec, FieldTables, is_codeword


def distinct_partitions(w: int, max_part: int | None = None):
    """Partitions of ``w`` into distinct parts, as increasing tuples.

    Order: by number of parts, then lexicographic.
    """
    max_part = w if max_part is None else min(max_part, w)

    def rec(rem, m, lo):
        if m == 1:
            if lo <= rem <= max_part:
                yield (rem,)
            return
        # smallest completion of m-1 parts above p is (p+1)+...+(p+m-1)
        p = lo
        while p * m + m * (m - 1) // 2 <= rem:
            for tail in rec(rem - p, m - 1, p + 1):
                yield (p,) + tail
            p += 1

    m = 1
    while m * (m + 1) // 2 <= w:
        yield from rec(w, m, 1)
        m += 1


@dataclass(frozen=True)
class PatternBook:
    patterns: tuple[tuple[int, ...], ...]
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.patterns)

    def __getitem__(self, i) -> tuple[int, ...]:
        return self.patterns[i]

    @property
    def max_part(self) -> int:
        return max((p[-1] for p in self.patterns), default=0)

    @cached_property
    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """(parts, lengths): parts as 0-based ranks, padded with -1."""
        width = max((len(p) for p in self.patterns), default=1)
        parts = np.full((len(self.patterns), width), -1, dtype=np.int32)
        lengths = np.zeros(len(self.patterns), dtype=np.int32)
        for i, p in enumerate(self.patterns):
            parts[i, : len(p)] = np.asarray(p) - 1
            lengths[i] = len(p)
        return parts, lengths

    def count_through_weight(self, w: int) -> int:
        return int(np.searchsorted(self.weights, w, side="right"))


def generate_pattern_book(w_max: int, max_count: int | None = None, n: int = 255) -> PatternBook:
    if w_max < 1:
        raise ValueError("w_max must be >= 1")
    if max_count is not None and max_count < 1:
        raise ValueError("max_count must be >= 1")
    patterns, weights = [], []
    for w in range(1, w_max + 1):
        for p in distinct_partitions(w, n):
            if max_count is not None and len(patterns) >= max_count:
                break
            patterns.append(p)
            weights.append(w)
    return PatternBook(tuple(patterns), np.asarray(weights, dtype=np.int32))


def apply_pattern(hard, view: ReliabilityView, parts) -> np.ndarray:
    out = np.array(hard, dtype=np.uint8, copy=True)
    n = out.size
    for j in parts:
        if not 1 <= j <= n:
            raise ValueError(f"pattern part {j} outside 1..{n}")
        out[view.order[j - 1]] ^= 1
    return out


class OrbStatus(Enum):
    DECODED = "decoded"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class OrbOutcome:
    status: OrbStatus
    patterns_consumed: int
    word: np.ndarray | None = None

    @property
    def decoded(self) -> bool:
        return self.status is OrbStatus.DECODED


def orbgrand_decode(y, book: PatternBook, n_pat: int, spec: CodeSpec, tables: FieldTables | None = None) -> OrbOutcome:
    if n_pat > len(book):
        raise ValueError(f"nPat={n_pat} exceeds pattern book size {len(book)}")
    hard = hard_decision(y)
    if is_codeword(hard, spec):
        return OrbOutcome(OrbStatus.DECODED, 0, hard)
    view = sort_reliability(y)
    for i in range(n_pat):
        cand = apply_pattern(hard, view, book[i])
        if is_codeword(cand, spec):
            return OrbOutcome(OrbStatus.DECODED, i + 1, cand)
    return OrbOutcome(OrbStatus.ABANDONED, n_pat)


def first_success_indices(y, transmitted, book: PatternBook, spec: CodeSpec, tables: FieldTables | None = None):
    """(first index giving ``transmitted``, first index giving any codeword).

    Index 0 is the hard decision; index ``i >= 1`` is book pattern ``i-1``.
    """
    transmitted = np.asarray(transmitted, dtype=np.uint8)
    hard = hard_decision(y)
    view = sort_reliability(y)
    idx_true = idx_any = None
    for i in range(len(book) + 1):
        cand = hard if i == 0 else apply_pattern(hard, view, book[i - 1])
        if idx_any is None and is_codeword(cand, spec):
            idx_any = i
        if np.array_equal(cand, transmitted):
            idx_true = i
            break
    return idx_true, idx_any


def orb_success(idx_true, idx_any, n_pat: int) -> bool:
    """Decoding with budget ``n_pat`` returns the transmitted word."""
    return idx_any is not None and idx_any <= n_pat and idx_any == idx_true
