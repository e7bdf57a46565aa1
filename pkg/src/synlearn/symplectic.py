"""Symplectic completion: destabilizers and logical pairs for a stabilizer list."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from . import gf2
from .pauli import PauliOperator, binary_commutator


def _swapped(p: PauliOperator) -> int:
    # parity(v & swapped(p)) is the binary commutator of v with p
    return p.z | (p.x << p.n)


def check_independent(ops: Sequence[PauliOperator]) -> bool:
    return gf2.rank(p.symplectic() for p in ops) == len(ops)


def check_commuting(ops: Sequence[PauliOperator]) -> bool:
    return all(
        binary_commutator(a, b) == 0 for i, a in enumerate(ops) for b in ops[i + 1 :]
    )


def symplectic_gram_schmidt(
    vectors: Sequence[PauliOperator],
) -> Tuple[List[PauliOperator], List[PauliOperator]]:
    """Split a basis of a nondegenerate symplectic space into dual pairs (X-like, Z-like)."""
    pool = list(vectors)
    xs: List[PauliOperator] = []
    zs: List[PauliOperator] = []
    while pool:
        a = pool.pop(0)
        partner = next((j for j, b in enumerate(pool) if binary_commutator(a, b)), None)
        if partner is None:
            raise ValueError("vector space is degenerate; no symplectic partner found")
        b = pool.pop(partner)
        xs.append(a)
        zs.append(b)
        new_pool = []
        for c in pool:
            if binary_commutator(c, b):
                c = c * a
            if binary_commutator(c, a):
                c = c * b
            new_pool.append(c)
        pool = new_pool
    return xs, zs


def complete_tableau(
    stabilizers: Sequence[PauliOperator],
    destabilizers: Optional[Sequence[PauliOperator]] = None,
    logical_x: Optional[Sequence[PauliOperator]] = None,
    logical_z: Optional[Sequence[PauliOperator]] = None,
) -> Tuple[List[PauliOperator], List[PauliOperator], List[PauliOperator], List[PauliOperator]]:
    """Fill in whichever of destabilizers / logicals are missing.

    Returns ``(S, D, X, Z)`` with D_i dual to S_i, X_j dual to Z_j, and every
    other pair commuting.
    """
    if not stabilizers:
        raise ValueError("at least one stabilizer is required")
    n = stabilizers[0].n
    S = list(stabilizers)
    if not check_commuting(S):
        raise ValueError("stabilizers do not commute")
    if not check_independent(S):
        raise ValueError("stabilizers are not independent")
    LX = list(logical_x or [])
    LZ = list(logical_z or [])
    if len(LX) != len(LZ):
        raise ValueError("logical_x and logical_z differ in length")

    if destabilizers:
        D = list(destabilizers)
    else:
        D = []
        for i in range(len(S)):
            eqs = [_swapped(s) for s in S] + [_swapped(d) for d in D]
            rhs = [1 if j == i else 0 for j in range(len(S))] + [0] * len(D)
            eqs += [_swapped(l) for l in LX + LZ]
            rhs += [0] * (len(LX) + len(LZ))
            sol = gf2.solve(eqs, rhs, 2 * n)
            if sol is None:
                raise ValueError(f"no destabilizer exists for stabilizer {i}")
            D.append(PauliOperator.from_symplectic(n, sol))

    if not LX:
        eqs = [_swapped(p) for p in S + D]
        basis = [PauliOperator.from_symplectic(n, v) for v in gf2.nullspace(eqs, 2 * n)]
        if basis:
            LX, LZ = symplectic_gram_schmidt(basis)
    validate_tableau(S, D, LX, LZ)
    return S, D, LX, LZ


def validate_tableau(S, D, LX, LZ) -> None:
    n = S[0].n
    if len(S) != len(D):
        raise ValueError("stabilizer and destabilizer counts differ")
    if len(S) + len(LX) != n:
        raise ValueError(
            f"tableau incomplete: {len(S)} stabilizers + {len(LX)} logical pairs != {n} qubits"
        )
    rows = list(S) + list(LX)
    cols = list(D) + list(LZ)
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            if binary_commutator(a, b) != (i == j):
                raise ValueError(f"tableau duality broken between rows {i} and {j}")
    for group in (rows, cols):
        for i, a in enumerate(group):
            for b in group[i + 1 :]:
                if binary_commutator(a, b):
                    raise ValueError("tableau rows within one half anticommute")
