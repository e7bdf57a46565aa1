"""GF(2) linear algebra on rows stored as Python-int bitsets."""

from __future__ import annotations

from typing import Iterable, List, Optional, Sequence, Tuple


class IncrementalBasis:
    """Row basis keyed by leading bit, with optional tracking of combinations.

    ``add`` returns whether the vector was independent of the rows added so far.
    ``express`` returns the mask of inserted vectors whose XOR gives a target.
    """

    def __init__(self, track: bool = False):
        self._rows: dict[int, int] = {}
        self._combo: dict[int, int] = {}
        self._track = track
        self._count = 0

    def __len__(self) -> int:
        return len(self._rows)

    def _reduce(self, v: int) -> Tuple[int, int]:
        combo = 0
        rows = self._rows
        while v:
            h = v.bit_length() - 1
            r = rows.get(h)
            if r is None:
                break
            v ^= r
            if self._track:
                combo ^= self._combo[h]
        return v, combo

    def add(self, v: int) -> bool:
        idx = self._count
        self._count += 1
        red, combo = self._reduce(v)
        if red == 0:
            return False
        h = red.bit_length() - 1
        self._rows[h] = red
        if self._track:
            self._combo[h] = combo ^ (1 << idx)
        return True

    def contains(self, v: int) -> bool:
        return self._reduce(v)[0] == 0

    def express(self, v: int) -> Optional[int]:
        if not self._track:
            raise ValueError("basis was built without combination tracking")
        red, combo = self._reduce(v)
        return combo if red == 0 else None


def rank(rows: Iterable[int]) -> int:
    basis = IncrementalBasis()
    for r in rows:
        basis.add(r)
    return len(basis)


def in_span(v: int, rows: Iterable[int]) -> bool:
    basis = IncrementalBasis()
    for r in rows:
        basis.add(r)
    return basis.contains(v)


def express(v: int, rows: Sequence[int]) -> Optional[int]:
    """Mask over ``rows`` whose XOR equals ``v``, or None if ``v`` is outside the span."""
    basis = IncrementalBasis(track=True)
    for r in rows:
        basis.add(r)
    return basis.express(v)


def independent_subset(rows: Sequence[int]) -> List[int]:
    """Indices of a maximal independent subset, greedily in input order."""
    basis = IncrementalBasis()
    return [i for i, r in enumerate(rows) if basis.add(r)]


def rref(rows: Sequence[int], n_cols: int) -> Tuple[List[int], List[int]]:
    """Reduced row echelon form with pivots scanned from column 0 upward."""
    work = [r for r in rows]
    pivots: List[int] = []
    row_idx = 0
    for col in range(n_cols):
        bit = 1 << col
        pivot = None
        for r in range(row_idx, len(work)):
            if work[r] & bit:
                pivot = r
                break
        if pivot is None:
            continue
        work[row_idx], work[pivot] = work[pivot], work[row_idx]
        prow = work[row_idx]
        for r in range(len(work)):
            if r != row_idx and work[r] & bit:
                work[r] ^= prow
        pivots.append(col)
        row_idx += 1
        if row_idx == len(work):
            break
    return work[:row_idx], pivots


def solve(equations: Sequence[int], rhs: Sequence[int], n_vars: int) -> Optional[int]:
    """Find ``x`` (bitset over ``n_vars``) with parity(eq_i & x) == rhs_i for all i."""
    aug = [eq | ((b & 1) << n_vars) for eq, b in zip(equations, rhs)]
    reduced, pivots = rref(aug, n_vars + 1)
    if n_vars in pivots:
        return None
    x = 0
    for row, col in zip(reduced, pivots):
        if (row >> n_vars) & 1:
            x |= 1 << col
    return x


def nullspace(rows: Sequence[int], n_cols: int) -> List[int]:
    """Basis of {x : parity(row & x) == 0 for every row}."""
    reduced, pivots = rref(rows, n_cols)
    pivot_set = set(pivots)
    basis = []
    for free in range(n_cols):
        if free in pivot_set:
            continue
        v = 1 << free
        for row, col in zip(reduced, pivots):
            if (row >> free) & 1:
                v |= 1 << col
        basis.append(v)
    return basis


def parity(v: int) -> int:
    return v.bit_count() & 1


def to_matrix(rows: Sequence[int], n_cols: int):
    import numpy as np

    out = np.zeros((len(rows), n_cols), dtype=np.uint8)
    for i, r in enumerate(rows):
        while r:
            low = r & -r
            out[i, low.bit_length() - 1] = 1
            r ^= low
    return out


def from_matrix(mat) -> List[int]:
    rows = []
    for row in mat:
        v = 0
        for j, b in enumerate(row):
            if b:
                v |= 1 << j
        rows.append(v)
    return rows
