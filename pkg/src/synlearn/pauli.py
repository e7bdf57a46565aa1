"""Phase-free Pauli operators in binary symplectic form.

A Pauli on ``n`` qubits is stored as two Python integers used as bitsets:
bit ``i`` of ``x`` / ``z`` is the X / Z component on qubit ``i``. Integer
XOR and ``int.bit_count`` give word-parallel products and commutators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# local digit <-> (x, z) under the (I, X, Y, Z) ordering
_DIGIT_TO_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))
_XZ_TO_DIGIT = {xz: d for d, xz in enumerate(_DIGIT_TO_XZ)}
_CHAR_TO_DIGIT = {"I": 0, "X": 1, "Y": 2, "Z": 3}
_DIGIT_TO_CHAR = "IXYZ"

K_MAX_DEFAULT = 4


class DimensionError(ValueError):
    """Raised when operators of different qubit counts are combined."""


@dataclass(frozen=True)
class PauliOperator:
    """Phase-free Pauli operator on ``n`` qubits."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be nonnegative")
        limit = 1 << self.n
        if self.x < 0 or self.z < 0 or self.x >= limit or self.z >= limit:
            raise ValueError("bits set outside the qubit range")

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, 0, 0)

    @classmethod
    def from_bits(cls, x_bits: Sequence[int], z_bits: Sequence[int]) -> "PauliOperator":
        if len(x_bits) != len(z_bits):
            raise DimensionError("x and z bit vectors differ in length")
        return cls(len(x_bits), _bits_to_int(x_bits), _bits_to_int(z_bits))

    @classmethod
    def from_label(cls, label: str, n: int | None = None) -> "PauliOperator":
        """Parse dense ``"IXYZ"`` or sparse ``"X2 Z5"`` (1-based) text."""
        text = label.strip()
        if text and all(c in "IXYZ" for c in text) and n in (None, len(text)):
            x = z = 0
            for q, c in enumerate(text):
                bx, bz = _DIGIT_TO_XZ[_CHAR_TO_DIGIT[c]]
                x |= bx << q
                z |= bz << q
            return cls(len(text), x, z)
        if n is None:
            raise ValueError(f"sparse Pauli text needs an explicit qubit count: {label!r}")
        x = z = 0
        if text in ("", "I"):
            return cls(n, 0, 0)
        for token in text.replace(",", " ").split():
            m = re.fullmatch(r"([IXYZ])(\d+)", token)
            if m is None:
                raise ValueError(f"bad Pauli token {token!r}")
            q = int(m.group(2)) - 1
            if not 0 <= q < n:
                raise ValueError(f"qubit index {q + 1} out of range for n={n}")
            bx, bz = _DIGIT_TO_XZ[_CHAR_TO_DIGIT[m.group(1)]]
            x ^= bx << q
            z ^= bz << q
        return cls(n, x, z)

    def to_label(self) -> str:
        return "".join(self[q] for q in range(self.n))

    def to_sparse(self) -> str:
        parts = [f"{self[q]}{q + 1}" for q in self.support()]
        return " ".join(parts) if parts else "I"

    def __getitem__(self, q: int) -> str:
        return _DIGIT_TO_CHAR[_XZ_TO_DIGIT[((self.x >> q) & 1, (self.z >> q) & 1)]]

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"PauliOperator({self.to_label()!r})" if self.n <= 64 else f"PauliOperator(n={self.n}, {self.to_sparse()!r})"

    @property
    def mask(self) -> int:
        return self.x | self.z

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def support(self) -> list[int]:
        m = self.x | self.z
        out = []
        while m:
            low = m & -m
            out.append(low.bit_length() - 1)
            m ^= low
        return out

    def x_bits(self) -> np.ndarray:
        return _int_to_bits(self.x, self.n)

    def z_bits(self) -> np.ndarray:
        return _int_to_bits(self.z, self.n)

    def symplectic(self) -> int:
        """Single-integer form ``x | z << n`` used by GF(2) routines."""
        return self.x | (self.z << self.n)

    @classmethod
    def from_symplectic(cls, n: int, v: int) -> "PauliOperator":
        mask = (1 << n) - 1
        return cls(n, v & mask, v >> n)


def _bits_to_int(bits: Iterable[int]) -> int:
    out = 0
    for i, b in enumerate(bits):
        if b:
            out |= 1 << i
    return out


def _int_to_bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)


def _check(a: PauliOperator, b: PauliOperator) -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Product of two Paulis with the phase discarded."""
    _check(a, b)
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z)


def product(ops: Iterable[PauliOperator], n: int) -> PauliOperator:
    x = z = 0
    for p in ops:
        if p.n != n:
            raise DimensionError(f"qubit counts differ: {p.n} vs {n}")
        x ^= p.x
        z ^= p.z
    return PauliOperator(n, x, z)


def binary_commutator(a: PauliOperator, b: PauliOperator) -> int:
    """0 if ``a`` and ``b`` commute, 1 if they anticommute."""
    _check(a, b)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1


def scalar_commutator(a: PauliOperator, b: PauliOperator) -> int:
    """+1 if ``a`` and ``b`` commute, -1 otherwise."""
    return 1 - 2 * binary_commutator(a, b)


def commutes_raw(ax: int, az: int, bx: int, bz: int) -> int:
    return ((ax & bz) ^ (az & bx)).bit_count() & 1


# -- local supports ---------------------------------------------------------

def local_index(p: PauliOperator, support: Sequence[int]) -> int:
    """Base-4 index of ``p`` restricted to ``support``; first qubit most significant."""
    idx = 0
    for q in support:
        idx = 4 * idx + _XZ_TO_DIGIT[((p.x >> q) & 1, (p.z >> q) & 1)]
    return idx


def local_index_raw(x: int, z: int, support: Sequence[int]) -> int:
    idx = 0
    for q in support:
        idx = 4 * idx + _XZ_TO_DIGIT[((x >> q) & 1, (z >> q) & 1)]
    return idx


def local_label(index: int, k: int) -> str:
    if not 0 <= index < 4**k:
        raise ValueError(f"local index {index} out of range for {k} qubits")
    chars = []
    for _ in range(k):
        chars.append(_DIGIT_TO_CHAR[index % 4])
        index //= 4
    return "".join(reversed(chars))


def local_from_label(label: str) -> int:
    idx = 0
    for c in label:
        idx = 4 * idx + _CHAR_TO_DIGIT[c]
    return idx


def embed(local: int | str, support: Sequence[int], n: int) -> PauliOperator:
    """Place a local Pauli (index or label) on ``support`` inside ``n`` qubits."""
    k = len(support)
    if len(set(support)) != k:
        raise ValueError("support has duplicate qubits")
    if isinstance(local, str):
        if len(local) != k:
            raise DimensionError(f"local Pauli {local!r} does not match support size {k}")
        local = local_from_label(local)
    if not 0 <= local < 4**k:
        raise ValueError(f"local index {local} out of range for support size {k}")
    x = z = 0
    for pos in range(k - 1, -1, -1):
        q = support[pos]
        if not 0 <= q < n:
            raise ValueError(f"support index {q} out of range for n={n}")
        bx, bz = _DIGIT_TO_XZ[local % 4]
        local //= 4
        x |= bx << q
        z |= bz << q
    return PauliOperator(n, x, z)


def restrict(p: PauliOperator, support: Sequence[int]) -> str:
    """Label of ``p`` restricted to ``support``."""
    return "".join(p[q] for q in support)


# -- Walsh-Hadamard ----------------------------------------------------------

W4 = np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float
)


def _num_qubits(length: int, k_max: int) -> int:
    k = 0
    m = length
    while m > 1 and m % 4 == 0:
        m //= 4
        k += 1
    if m != 1 or length < 1:
        raise ValueError(f"length {length} is not a power of 4")
    if k > k_max:
        raise ValueError(f"support of {k} qubits exceeds k_max={k_max}")
    return k


def walsh_hadamard(v: Sequence[float], k_max: int = K_MAX_DEFAULT) -> np.ndarray:
    """Apply W_{4^k} = W4 (x) W_{4^(k-1)} by one butterfly per tensor factor."""
    arr = np.asarray(v, dtype=float)
    k = _num_qubits(arr.shape[0], k_max)
    out = arr.reshape((4,) * k) if k else arr.copy()
    for axis in range(k):
        out = np.moveaxis(np.tensordot(W4, out, axes=([1], [axis])), 0, axis)
    return np.ascontiguousarray(out).reshape(-1)


def inverse_walsh_hadamard(v: Sequence[float], k_max: int = K_MAX_DEFAULT) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    return walsh_hadamard(arr, k_max) / arr.shape[0]


def walsh_matrix(k: int) -> np.ndarray:
    """Dense W_{4^k}; entry (O, e) is the scalar commutator of local Paulis O and e."""
    m = np.ones((1, 1))
    for _ in range(k):
        m = np.kron(W4, m)
    return m
