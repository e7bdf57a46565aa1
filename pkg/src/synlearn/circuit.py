"""Layered Clifford circuits: IR, Pauli propagation, tableau simulation and parity structure."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .pauli import PauliOperator, embed
from .rng import block_rng
from .symplectic import complete_tableau, validate_tableau

ONE_QUBIT_GATES = ("H", "S", "X", "Y", "Z", "Idle", "PrepareZero")
TWO_QUBIT_GATES = ("CNOT", "CZ", "SWAP")
GATES = ONE_QUBIT_GATES + TWO_QUBIT_GATES + ("MeasurePauli",)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Location:
    gate: str
    qubits: Tuple[int, ...]
    pauli: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.gate not in GATES:
            raise CircuitError(f"unknown gate {self.gate!r}")
        if self.gate in ONE_QUBIT_GATES and len(self.qubits) != 1:
            raise CircuitError(f"{self.gate} acts on one qubit")
        if self.gate in TWO_QUBIT_GATES and len(self.qubits) != 2:
            raise CircuitError(f"{self.gate} acts on two qubits")
        if self.gate == "MeasurePauli":
            if self.pauli is None or len(self.pauli) != len(self.qubits) or not self.qubits:
                raise CircuitError("MeasurePauli needs one Pauli letter per qubit")
            if any(c not in "XYZ" for c in self.pauli):
                raise CircuitError(f"bad measured Pauli {self.pauli!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.gate} repeats a qubit")

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def to_dict(self) -> dict:
        d: Dict[str, Any] = {"gate": self.gate, "qubits": list(self.qubits)}
        if self.pauli is not None:
            d["pauli"] = self.pauli
        return d


@dataclass
class CliffordCircuit:
    n: int
    layers: List[List[Location]]
    initial_stabilizers: List[PauliOperator]
    initial_destabilizers: List[PauliOperator] = field(default_factory=list)
    initial_logical_x: List[PauliOperator] = field(default_factory=list)
    initial_logical_z: List[PauliOperator] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for t, layer in enumerate(self.layers, start=1):
            used: set[int] = set()
            for loc in layer:
                for q in loc.qubits:
                    if not 0 <= q < self.n:
                        raise CircuitError(f"layer {t}: qubit {q} out of range")
                    if q in used:
                        raise CircuitError(f"layer {t}: qubit {q} used by two locations")
                    used.add(q)
        S, D, LX, LZ = complete_tableau(
            self.initial_stabilizers,
            self.initial_destabilizers or None,
            self.initial_logical_x or None,
            self.initial_logical_z or None,
        )
        self.initial_stabilizers, self.initial_destabilizers = S, D
        self.initial_logical_x, self.initial_logical_z = LX, LZ

    @property
    def T(self) -> int:
        return len(self.layers)

    def measurements(self) -> List[Tuple[int, Location]]:
        """Circuit measurements in outcome order as (1-based layer, location)."""
        return [(t, loc) for t, layer in enumerate(self.layers, start=1) for loc in layer if loc.gate == "MeasurePauli"]

    def measured_operator(self, loc: Location) -> PauliOperator:
        return embed(loc.pauli, loc.qubits, self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "initial": {
                "stabilizers": [p.to_label() for p in self.initial_stabilizers],
                "destabilizers": [p.to_label() for p in self.initial_destabilizers],
                "logical_x": [p.to_label() for p in self.initial_logical_x],
                "logical_z": [p.to_label() for p in self.initial_logical_z],
            },
            "layers": [[loc.to_dict() for loc in layer] for layer in self.layers],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CliffordCircuit":
        try:
            n = int(data["n"])
            init = data["initial"]
            layers = [
                [Location(e["gate"], tuple(e["qubits"]), e.get("pauli")) for e in layer]
                for layer in data["layers"]
            ]
        except KeyError as exc:
            raise CircuitError(f"circuit definition missing field {exc}") from None

        def ops(key):
            return [PauliOperator.from_label(s, n) for s in init.get(key, [])]

        return cls(
            n,
            layers,
            ops("stabilizers"),
            ops("destabilizers"),
            ops("logical_x"),
            ops("logical_z"),
            metadata=data.get("metadata", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def load_circuit(path: str) -> CliffordCircuit:
    with open(path) as fh:
        return CliffordCircuit.from_dict(json.load(fh))


# -- phase-free propagation -----------------------------------------------------

def _swap_bits(v: int, a: int, b: int) -> int:
    if ((v >> a) ^ (v >> b)) & 1:
        v ^= (1 << a) | (1 << b)
    return v


def conjugate_location(x: int, z: int, loc: Location) -> Tuple[int, int]:
    """Phase-free conjugation by one location; every supported gate is its own inverse here."""
    g = loc.gate
    if g == "H":
        (q,) = loc.qubits
        if ((x ^ z) >> q) & 1:
            x ^= 1 << q
            z ^= 1 << q
    elif g == "S":
        (q,) = loc.qubits
        z ^= x & (1 << q)
    elif g == "CNOT":
        c, t = loc.qubits
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
    elif g == "CZ":
        a, b = loc.qubits
        xa, xb = (x >> a) & 1, (x >> b) & 1
        if xb:
            z ^= 1 << a
        if xa:
            z ^= 1 << b
    elif g == "SWAP":
        a, b = loc.qubits
        x = _swap_bits(x, a, b)
        z = _swap_bits(z, a, b)
    return x, z


def conjugate_layer(x: int, z: int, layer: Sequence[Location]) -> Tuple[int, int]:
    for loc in layer:
        if loc.gate in ("H", "S", "CNOT", "CZ", "SWAP"):
            x, z = conjugate_location(x, z, loc)
    return x, z


def propagate(P: PauliOperator, from_layer: int, to_layer: int, circuit: CliffordCircuit) -> PauliOperator:
    """Move ``P`` between time slices; slice t sits after circuit layer t (slice 0 is the input).

    Forward (to > from) applies U P U^dagger layer by layer, backward applies the inverse.
    Measurements and preparations act as identity.
    """
    T = circuit.T
    if not (0 <= from_layer <= T and 0 <= to_layer <= T):
        raise CircuitError(f"layers must lie in [0, {T}]")
    if P.n != circuit.n:
        raise CircuitError("operator size does not match the circuit")
    x, z = P.x, P.z
    if to_layer >= from_layer:
        for t in range(from_layer, to_layer):
            x, z = conjugate_layer(x, z, circuit.layers[t])
    else:
        for t in range(from_layer - 1, to_layer - 1, -1):
            x, z = conjugate_layer(x, z, circuit.layers[t])
    return PauliOperator(circuit.n, x, z)


# -- signed stabilizer simulation ---------------------------------------------------

class Tableau:
    """Aaronson-Gottesman tableau with sign bits; rows 0..n-1 destabilizers, n..2n-1 stabilizers."""

    def __init__(self, n: int, destab: Sequence[PauliOperator], stab: Sequence[PauliOperator]):
        if len(destab) != n or len(stab) != n:
            raise CircuitError("a full tableau needs n stabilizers and n destabilizers")
        self.n = n
        rows = list(destab) + list(stab)
        self.x = np.array([[(p.x >> q) & 1 for q in range(n)] for p in rows], dtype=bool)
        self.z = np.array([[(p.z >> q) & 1 for q in range(n)] for p in rows], dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)

    def copy(self) -> "Tableau":
        t = object.__new__(Tableau)
        t.n = self.n
        t.x = self.x.copy()
        t.z = self.z.copy()
        t.r = self.r.copy()
        return t

    def stabilizers(self) -> List[PauliOperator]:
        n = self.n
        out = []
        for i in range(n, 2 * n):
            out.append(PauliOperator.from_bits(self.x[i].astype(int), self.z[i].astype(int)))
        return out

    # gates
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def swap(self, a: int, b: int) -> None:
        self.x[:, [a, b]] = self.x[:, [b, a]]
        self.z[:, [a, b]] = self.z[:, [b, a]]

    def pauli(self, x: int, z: int) -> None:
        """Apply a Pauli (phase-free): flips the sign of every anticommuting row."""
        if not (x or z):
            return
        xm = np.array([(x >> q) & 1 for q in range(self.n)], dtype=bool)
        zm = np.array([(z >> q) & 1 for q in range(self.n)], dtype=bool)
        anti = (np.count_nonzero(self.x & zm, axis=1) + np.count_nonzero(self.z & xm, axis=1)) & 1
        self.r ^= anti.astype(bool)

    def _rowsum(self, h: np.ndarray, i: int) -> None:
        """rows h <- rows h * row i with exact sign bookkeeping."""
        x1, z1 = self.x[i], self.z[i]
        x2, z2 = self.x[h], self.z[h]
        g = _g(x1, z1, x2, z2).sum(axis=1)
        total = 2 * self.r[h].astype(int) + 2 * int(self.r[i]) + g
        self.r[h] = (total % 4) == 2
        self.x[h] ^= x1
        self.z[h] ^= z1

    def measure_z(self, a: int, rng: np.random.Generator) -> Tuple[int, bool]:
        """Returns (outcome bit, was_random)."""
        n = self.n
        col = self.x[n:, a]
        hits = np.flatnonzero(col)
        if hits.size:
            p = n + int(hits[0])
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            if others.size:
                self._rowsum(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p].copy(), self.z[p].copy(), self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, a] = True
            outcome = int(rng.integers(2))
            self.r[p] = bool(outcome)
            return outcome, True
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        sr = 0
        for i in np.flatnonzero(self.x[:n, a]):
            row = n + int(i)
            g = int(_g(self.x[row], self.z[row], sx, sz).sum())
            sr = ((2 * sr + 2 * int(self.r[row]) + g) % 4) // 2
            sx ^= self.x[row]
            sz ^= self.z[row]
        return sr, False

    def measure_pauli(self, qubits: Sequence[int], letters: str, rng: np.random.Generator) -> Tuple[int, bool]:
        self._to_z_basis(qubits, letters)
        head = qubits[0]
        for q in qubits[1:]:
            self.cnot(q, head)
        out = self.measure_z(head, rng)
        for q in reversed(qubits[1:]):
            self.cnot(q, head)
        self._from_z_basis(qubits, letters)
        return out

    def reset_z(self, a: int, rng: np.random.Generator) -> None:
        bit, _ = self.measure_z(a, rng)
        if bit:
            self.pauli(1 << a, 0)

    def _to_z_basis(self, qubits, letters) -> None:
        for q, c in zip(qubits, letters):
            if c == "X":
                self.h(q)
            elif c == "Y":
                for _ in range(3):
                    self.s(q)
                self.h(q)

    def _from_z_basis(self, qubits, letters) -> None:
        for q, c in zip(qubits, letters):
            if c == "X":
                self.h(q)
            elif c == "Y":
                self.h(q)
                self.s(q)

    def apply(self, loc: Location, rng: np.random.Generator) -> Optional[Tuple[int, bool]]:
        g, qs = loc.gate, loc.qubits
        if g == "H":
            self.h(qs[0])
        elif g == "S":
            self.s(qs[0])
        elif g == "X":
            self.pauli(1 << qs[0], 0)
        elif g == "Y":
            self.pauli(1 << qs[0], 1 << qs[0])
        elif g == "Z":
            self.pauli(0, 1 << qs[0])
        elif g == "CNOT":
            self.cnot(*qs)
        elif g == "CZ":
            self.cz(*qs)
        elif g == "SWAP":
            self.swap(*qs)
        elif g == "PrepareZero":
            self.reset_z(qs[0], rng)
        elif g == "MeasurePauli":
            return self.measure_pauli(qs, loc.pauli, rng)
        return None


def _g(x1, z1, x2, z2):
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    return np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1), np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
    )


def initial_tableau(circuit: CliffordCircuit, logical_state: str = "zero") -> Tableau:
    """Stabilizer state fixed by the initial stabilizers plus logical Z (``zero``) or X (``plus``)."""
    S, D = circuit.initial_stabilizers, circuit.initial_destabilizers
    LX, LZ = circuit.initial_logical_x, circuit.initial_logical_z
    if logical_state == "zero":
        stab, destab = S + LZ, D + LX
    elif logical_state == "plus":
        stab, destab = S + LX, D + LZ
    else:
        raise CircuitError(f"unknown logical state {logical_state!r}")
    return Tableau(circuit.n, destab, stab)


def run_circuit(
    circuit: CliffordCircuit,
    errors: Optional[Dict[int, Tuple[int, int]]] = None,
    rng: Optional[np.random.Generator] = None,
    logical_state: str = "zero",
) -> np.ndarray:
    """Simulate once. ``errors[t]`` = (x, z) is applied after circuit layer t (t = 0 is the input)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    errors = errors or {}
    tab = initial_tableau(circuit, logical_state)
    out = []
    for t, layer in enumerate(circuit.layers):
        if t in errors:
            tab.pauli(*errors[t])
        for loc in layer:
            res = tab.apply(loc, rng)
            if res is not None:
                out.append(res[0])
    if circuit.T in errors:
        tab.pauli(*errors[circuit.T])
    return np.array(out, dtype=np.uint8)


def spacetime_error_layers(n: int, x: int, z: int, T: int) -> Dict[int, Tuple[int, int]]:
    """Split a flat spacetime Pauli (index t*n + q) into per-slice (x, z) pairs."""
    mask = (1 << n) - 1
    out = {}
    for t in range(T + 1):
        lx = (x >> (t * n)) & mask
        lz = (z >> (t * n)) & mask
        if lx or lz:
            out[t] = (lx, lz)
    return out


def simulate_shot(circuit: CliffordCircuit, model, seed: int, shot: int, logical_state: str = "zero") -> np.ndarray:
    """Noisy tableau simulation of one shot; ``model`` is a NoiseModel over spacetime indices."""
    from .noise import sample_error

    e = sample_error(model, seed, shot)
    errs = spacetime_error_layers(circuit.n, e.x, e.z, circuit.T)
    return run_circuit(circuit, errs, block_rng(seed, shot, stream=2), logical_state)


# -- parity structure (Algorithm 2) --------------------------------------------------

@dataclass
class ParityStructure:
    n: int
    s0: int
    entries: List[PauliOperator]
    entry_layers: List[int]
    O_perp: List[int]
    K_L: List[int]
    K_L_content: List[int]
    measurement_kinds: List[str]
    k0: int
    check_reference: List[int] = field(default_factory=list)
    logical_reference: List[int] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.entries) - self.s0

    @property
    def width(self) -> int:
        return len(self.entries)

    def check_values(self, outcomes: np.ndarray) -> np.ndarray:
        """Detector values (u . o) xor reference for one shot of circuit outcomes."""
        o = _outcome_int(self.s0, outcomes)
        ref = self.check_reference or [0] * len(self.O_perp)
        return np.array([((u & o).bit_count() & 1) ^ r for u, r in zip(self.O_perp, ref)], dtype=np.uint8)

    def logical_values(self, outcomes: np.ndarray) -> np.ndarray:
        o = _outcome_int(self.s0, outcomes)
        ref = self.logical_reference or [0] * len(self.K_L)
        return np.array([((u & o).bit_count() & 1) ^ r for u, r in zip(self.K_L, ref)], dtype=np.uint8)


def _outcome_int(s0: int, outcomes: np.ndarray) -> int:
    v = 0
    for j, b in enumerate(outcomes):
        if b:
            v |= 1 << (s0 + j)
    return v


def _anti(ax: int, az: int, bx: int, bz: int) -> int:
    return ((ax & bz) ^ (az & bx)).bit_count() & 1


def build_parity_structure(circuit: CliffordCircuit, with_reference: bool = True) -> ParityStructure:
    """Parity checks and logical index vectors from the measurement record.

    Each circuit measurement is propagated back to the input and classified
    against the running tableau (S, D, X, Z) as a random (destabilizer)
    measurement, a logical measurement, or a stabilizer measurement. Vectors
    ``vs`` / ``vx`` / ``vz`` record which outcomes fix the value of each row.
    """
    n = circuit.n
    if any(loc.gate == "PrepareZero" for layer in circuit.layers for loc in layer):
        raise CircuitError("mid-circuit PrepareZero is not supported by the parity-structure builder")
    S = [(p.x, p.z) for p in circuit.initial_stabilizers]
    D = [(p.x, p.z) for p in circuit.initial_destabilizers]
    X = [(p.x, p.z) for p in circuit.initial_logical_x]
    Z = [(p.x, p.z) for p in circuit.initial_logical_z]
    s0, k0 = len(S), len(X)
    vs = [1 << i for i in range(s0)]
    vx = [0] * k0
    vz = [0] * k0
    # logical content: which input logicals a row's value refers to (bit j: X_j, bit k0+j: Z_j)
    cx = [1 << j for j in range(k0)]
    cz = [1 << (k0 + j) for j in range(k0)]

    entries = list(circuit.initial_stabilizers)
    entry_layers = [0] * s0
    O_perp: List[int] = []
    K_L: List[int] = []
    K_L_content: List[int] = []
    kinds: List[str] = []

    def mul(a, b):
        return (a[0] ^ b[0], a[1] ^ b[1])

    for r, (t, loc) in enumerate(circuit.measurements()):
        E = circuit.measured_operator(loc)
        entries.append(E)
        entry_layers.append(t)
        Mx, Mz = _back_to_input(E, t, circuit)
        M = (Mx, Mz)
        e_r = 1 << (s0 + r)
        c_s = [_anti(Mx, Mz, *d) for d in D]
        c_d = [_anti(Mx, Mz, *s) for s in S]
        c_x = [_anti(Mx, Mz, *zz) for zz in Z]
        c_z = [_anti(Mx, Mz, *xx) for xx in X]

        if any(c_d):
            i = c_d.index(1)
            Ds = S[i]
            v_star = vs[i]
            S = [mul(s, Ds) if c and j != i else s for j, (s, c) in enumerate(zip(S, c_d))]
            vs = [v ^ v_star if c and j != i else v for j, (v, c) in enumerate(zip(vs, c_d))]
            D = [mul(d, Ds) if c else d for d, c in zip(D, c_s)]
            X = [mul(xx, Ds) if c else xx for xx, c in zip(X, c_z)]
            Z = [mul(zz, Ds) if c else zz for zz, c in zip(Z, c_x)]
            vx = [v ^ v_star if c else v for v, c in zip(vx, c_z)]
            vz = [v ^ v_star if c else v for v, c in zip(vz, c_x)]
            del S[i], D[i], vs[i]
            S.append(M)
            D.append(Ds)
            vs.append(e_r)
            kinds.append("random")
        elif any(c_x) or any(c_z):
            # anticommuting partner: Z_i if M has an X_i component, else X_i
            if any(c_x):
                i = c_x.index(1)
                Ds, v_star, c_star = Z[i], vz[i], cz[i]
            else:
                i = c_z.index(1)
                Ds, v_star, c_star = X[i], vx[i], cx[i]
            uL = e_r
            content = 0
            for j in range(len(S)):
                if c_s[j]:
                    uL ^= vs[j]
            for j in range(len(X)):
                if c_x[j]:
                    uL ^= vx[j]
                    content ^= cx[j]
                if c_z[j]:
                    uL ^= vz[j]
                    content ^= cz[j]
            K_L.append(uL)
            K_L_content.append(content)
            D = [mul(d, Ds) if c else d for d, c in zip(D, c_s)]
            newX, newZ, newvx, newvz, newcx, newcz = [], [], [], [], [], []
            for j in range(len(X)):
                xx, zz = X[j], Z[j]
                vxj, vzj, cxj, czj = vx[j], vz[j], cx[j], cz[j]
                if c_z[j]:
                    xx = mul(xx, Ds)
                    vxj ^= v_star
                    cxj ^= c_star
                if c_x[j]:
                    zz = mul(zz, Ds)
                    vzj ^= v_star
                    czj ^= c_star
                if j != i:
                    newX.append(xx)
                    newZ.append(zz)
                    newvx.append(vxj)
                    newvz.append(vzj)
                    newcx.append(cxj)
                    newcz.append(czj)
            X, Z, vx, vz, cx, cz = newX, newZ, newvx, newvz, newcx, newcz
            S.append(M)
            D.append(Ds)
            vs.append(e_r)
            kinds.append("logical")
        else:
            hits = [j for j, c in enumerate(c_s) if c]
            if not hits:
                raise CircuitError(f"measurement {r} is trivial; the tableau is ill-formed")
            i = hits[0]
            u = e_r
            for j in hits:
                u ^= vs[j]
            O_perp.append(u)
            Ds = D[i]
            D = [mul(d, Ds) if c and j != i else d for j, (d, c) in enumerate(zip(D, c_s))]
            del S[i], D[i], vs[i]
            S.append(M)
            D.append(Ds)
            vs.append(e_r)
            kinds.append("deterministic")

    ps = ParityStructure(n, s0, entries, entry_layers, O_perp, K_L, K_L_content, kinds, k0)
    if with_reference:
        outcomes = run_circuit(circuit, rng=block_rng(0, 0, stream=3))
        o = _outcome_int(s0, outcomes)
        ps.check_reference = [(u & o).bit_count() & 1 for u in O_perp]
        # a logical outcome fixed by the logical |0..0> input gets its noiseless value as reference
        ps.logical_reference = [
            (u & o).bit_count() & 1 if logical_content_is_fixed(c, k0, "zero") else 0
            for u, c in zip(K_L, K_L_content)
        ]
    return ps


def logical_content_is_fixed(content: int, k0: int, logical_state: str) -> bool:
    x_part = content & ((1 << k0) - 1)
    z_part = content >> k0
    return x_part == 0 if logical_state == "zero" else z_part == 0


def _back_to_input(E: PauliOperator, t: int, circuit: CliffordCircuit) -> Tuple[int, int]:
    x, z = E.x, E.z
    for layer_idx in range(t - 2, -1, -1):
        x, z = conjugate_layer(x, z, circuit.layers[layer_idx])
    return x, z
