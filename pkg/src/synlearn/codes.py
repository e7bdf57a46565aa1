"""Stabilizer and subsystem codes, named constructions and brute-force queries."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import gf2
from .pauli import PauliOperator, binary_commutator
from .symplectic import check_commuting, check_independent, complete_tableau


class CodeError(ValueError):
    pass


@dataclass(frozen=True)
class Syndrome:
    """Syndrome bits packed into an int; bit i is the commutator with measured generator i."""

    value: int
    length: int

    @property
    def bits(self) -> np.ndarray:
        return np.array([(self.value >> i) & 1 for i in range(self.length)], dtype=np.uint8)

    def __str__(self) -> str:
        return "".join(str((self.value >> i) & 1) for i in range(self.length))


@dataclass
class SubsystemCode:
    n: int
    stabilizer_gens: List[PauliOperator]
    measured_gens: List[PauliOperator] = field(default_factory=list)
    logical_x: List[PauliOperator] = field(default_factory=list)
    logical_z: List[PauliOperator] = field(default_factory=list)
    gauge_gens: List[PauliOperator] = field(default_factory=list)
    name: str = "custom"

    def __post_init__(self):
        if not self.measured_gens:
            self.measured_gens = list(self.stabilizer_gens)
        self.validate()

    def validate(self) -> None:
        for p in self.stabilizer_gens + self.measured_gens + self.logical_x + self.logical_z:
            if p.n != self.n:
                raise CodeError(f"operator on {p.n} qubits in a code of {self.n}")
        if not check_commuting(self.stabilizer_gens):
            raise CodeError("stabilizer generators do not commute")
        if not check_independent(self.stabilizer_gens):
            raise CodeError("stabilizer generators are dependent")
        if not check_independent(self.measured_gens):
            raise CodeError("measured generators are dependent")
        basis = gf2.IncrementalBasis()
        for s in self.stabilizer_gens:
            basis.add(s.symplectic())
        for m in self.measured_gens:
            if not basis.contains(m.symplectic()):
                raise CodeError(f"measured generator {m.to_sparse()} is not in the stabilizer group")
        for l in self.logical_x + self.logical_z:
            if any(binary_commutator(l, s) for s in self.stabilizer_gens):
                raise CodeError(f"logical {l.to_sparse()} does not commute with the stabilizers")

    @property
    def k(self) -> int:
        return len(self.logical_x)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "stabilizers": [p.to_label() for p in self.stabilizer_gens],
            "measured": [p.to_label() for p in self.measured_gens],
            "logical_x": [p.to_label() for p in self.logical_x],
            "logical_z": [p.to_label() for p in self.logical_z],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SubsystemCode":
        try:
            n = int(data["n"])
            stabs = [PauliOperator.from_label(s, n) for s in data["stabilizers"]]
        except KeyError as exc:
            raise CodeError(f"code definition missing field {exc}") from None
        measured_raw = data.get("measured") or []
        measured = []
        for m in measured_raw:
            measured.append(stabs[m] if isinstance(m, int) else PauliOperator.from_label(m, n))
        lx = [PauliOperator.from_label(s, n) for s in data.get("logical_x", [])]
        lz = [PauliOperator.from_label(s, n) for s in data.get("logical_z", [])]
        return cls(n, stabs, measured, lx, lz, name=data.get("name", "custom"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def syndrome_of(code: SubsystemCode, e: PauliOperator) -> Syndrome:
    if e.n != code.n:
        raise CodeError(f"error acts on {e.n} qubits, code has {code.n}")
    v = 0
    for i, m in enumerate(code.measured_gens):
        if binary_commutator(e, m):
            v |= 1 << i
    return Syndrome(v, len(code.measured_gens))


def syndrome_value(gens: Sequence[PauliOperator], e: PauliOperator) -> int:
    v = 0
    for i, m in enumerate(gens):
        if ((e.x & m.z) ^ (e.z & m.x)).bit_count() & 1:
            v |= 1 << i
    return v


def pure_distance(code: SubsystemCode, max_weight: Optional[int] = None) -> int:
    """Minimum weight of a nonidentity Pauli commuting with every measured generator."""
    n = code.n
    if n > 25:
        raise CodeError("pure_distance is a brute-force oracle limited to n <= 25")
    max_weight = n if max_weight is None else max_weight
    single = [
        [syndrome_value(code.measured_gens, PauliOperator.from_label(c + str(q + 1), n)) for c in "XYZ"]
        for q in range(n)
    ]
    # weight-2 syndrome table for a meet-in-the-middle pass at weights 3 and 4
    for w in range(1, min(max_weight, n) + 1):
        if w <= 2 or w > 4:
            if _search_weight(single, n, w):
                return w
        else:
            if _meet_in_middle(single, n, w):
                return w
    raise CodeError(f"no undetectable error up to weight {max_weight}")


def _search_weight(single, n: int, w: int) -> bool:
    for qubits in itertools.combinations(range(n), w):
        for paulis in itertools.product(range(3), repeat=w):
            s = 0
            for q, p in zip(qubits, paulis):
                s ^= single[q][p]
            if s == 0:
                return True
    return False


def _meet_in_middle(single, n: int, w: int) -> bool:
    # split each weight-w support as (first w-2 qubits, last two qubits)
    pair_table: dict[int, list[tuple[int, int]]] = {}
    for a, b in itertools.combinations(range(n), 2):
        for pa in range(3):
            for pb in range(3):
                pair_table.setdefault(single[a][pa] ^ single[b][pb], []).append((a, b))
    for head in itertools.combinations(range(n), w - 2):
        for paulis in itertools.product(range(3), repeat=w - 2):
            s = 0
            for q, p in zip(head, paulis):
                s ^= single[q][p]
            for a, b in pair_table.get(s, ()):
                if a > head[-1]:
                    return True
    return False


# -- named codes ---------------------------------------------------------------

def _ops(labels: Sequence[str]) -> List[PauliOperator]:
    return [PauliOperator.from_label(s) for s in labels]


def _on(n: int, kind: str, qubits: Sequence[int]) -> PauliOperator:
    x = z = 0
    for q in map(int, qubits):
        if kind in "XY":
            x |= 1 << q
        if kind in "ZY":
            z |= 1 << q
    return PauliOperator(n, x, z)


def repetition(d: int) -> SubsystemCode:
    if d < 2:
        raise CodeError("repetition code needs d >= 2")
    stabs = [_on(d, "X", [i, i + 1]) for i in range(d - 1)]
    return SubsystemCode(
        d, stabs, logical_x=[_on(d, "X", [0])], logical_z=[_on(d, "Z", range(d))], name=f"repetition_{d}"
    )


def steane() -> SubsystemCode:
    checks = ["1010101", "0110011", "0001111"]
    stabs = [_on(7, "X", [i for i, c in enumerate(h) if c == "1"]) for h in checks]
    stabs += [_on(7, "Z", [i for i, c in enumerate(h) if c == "1"]) for h in checks]
    return SubsystemCode(
        7, stabs, logical_x=[_on(7, "X", range(7))], logical_z=[_on(7, "Z", range(7))], name="steane"
    )


def rotated_surface_layout(d: int) -> List[tuple[str, List[int]]]:
    """Plaquettes of the d x d rotated surface code as (type, data qubits), 0-based row-major.

    Bulk plaquette (r, c) has corners (r, c)..(r+1, c+1) and is Z-type when r + c is even.
    Weight-two X plaquettes sit on the left and right boundaries and Z on the top and bottom.
    """
    if d < 3 or d % 2 == 0:
        raise CodeError("rotated surface code needs odd d >= 3")

    def q(r: int, c: int) -> int:
        return r * d + c

    plaquettes = []
    for r in range(-1, d):
        for c in range(-1, d):
            kind = "Z" if (r + c) % 2 == 0 else "X"
            cells = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]
            qubits = [q(a, b) for a, b in cells if 0 <= a < d and 0 <= b < d]
            if len(qubits) == 4:
                plaquettes.append((kind, qubits))
            elif len(qubits) == 2:
                on_vertical = c in (-1, d - 1)
                if (kind == "X") == on_vertical:
                    plaquettes.append((kind, qubits))
    return plaquettes


def rotated_surface(d: int) -> SubsystemCode:
    n = d * d
    stabs = [_on(n, kind, qs) for kind, qs in rotated_surface_layout(d)]
    lx = _on(n, "X", range(d))
    lz = _on(n, "Z", range(0, n, d))
    return SubsystemCode(n, stabs, logical_x=[lx], logical_z=[lz], name=f"rotated_surface_{d}")


def five_qubit() -> SubsystemCode:
    stabs = _ops(["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"])
    return SubsystemCode(5, stabs, logical_x=_ops(["XXXXX"]), logical_z=_ops(["ZZZZZ"]), name="five_qubit")


def color_832() -> SubsystemCode:
    """[[8,3,2]] cube code: Z on faces, X on all eight vertices."""
    verts = list(range(8))

    def face(axis: int, value: int) -> List[int]:
        return [v for v in verts if (v >> axis) & 1 == value]

    stabs = [_on(8, "X", verts)]
    stabs += [_on(8, "Z", face(a, 0)) for a in range(3)] + [_on(8, "Z", face(0, 1))]
    lx = [_on(8, "X", face(a, 0)) for a in range(3)]
    lz = [_on(8, "Z", [0, 1 << a]) for a in range(3)]
    return SubsystemCode(8, stabs, logical_x=lx, logical_z=lz, name="color_832")


def bivariate_bicycle(l: int = 6, m: int = 6) -> SubsystemCode:
    """Bivariate bicycle code with A = x^3 + y + y^2 and B = y^3 + x + x^2."""

    def shift(a: int, b: int) -> np.ndarray:
        sx = np.roll(np.eye(l, dtype=np.uint8), a, axis=1)
        sy = np.roll(np.eye(m, dtype=np.uint8), b, axis=1)
        return np.kron(sx, sy)

    A = (shift(3, 0) + shift(0, 1) + shift(0, 2)) % 2
    B = (shift(0, 3) + shift(1, 0) + shift(2, 0)) % 2
    hx = np.hstack([A, B])
    hz = np.hstack([B.T, A.T])
    n = 2 * l * m
    candidates = [_on(n, "X", np.flatnonzero(r)) for r in hx]
    candidates += [_on(n, "Z", np.flatnonzero(r)) for r in hz]
    keep = gf2.independent_subset([p.symplectic() for p in candidates])
    stabs = [candidates[i] for i in keep]
    _, _, lx, lz = complete_tableau(stabs)
    return SubsystemCode(n, stabs, logical_x=lx, logical_z=lz, name=f"bivariate_bicycle_{l}_{m}")


_BUILDERS = {
    "repetition": (repetition, 1),
    "steane": (steane, 0),
    "rotated_surface": (rotated_surface, 1),
    "five_qubit": (five_qubit, 0),
    "color_832": (color_832, 0),
    "bivariate_bicycle": (bivariate_bicycle, 2),
}


def named_code(name: str, params: Sequence[int] = ()) -> SubsystemCode:
    if name not in _BUILDERS:
        raise CodeError(f"unknown code {name!r}; choose from {sorted(_BUILDERS)}")
    builder, n_params = _BUILDERS[name]
    params = list(params)
    if name == "bivariate_bicycle" and not params:
        params = [6, 6]
    if len(params) != n_params:
        raise CodeError(f"{name} takes {n_params} integer parameter(s), got {len(params)}")
    try:
        return builder(*params)
    except CodeError:
        raise
    except ValueError as exc:
        raise CodeError(str(exc)) from None


def load_code(path: str) -> SubsystemCode:
    with open(path) as fh:
        return SubsystemCode.from_dict(json.load(fh))
