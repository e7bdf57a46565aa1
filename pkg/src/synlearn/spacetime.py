"""Spacetime code of a Clifford circuit: indexing, cumulants, generators and circuit noise.

Spacetime qubit (q, t_index) has flat index ``t_index * n + q`` with ``t_index``
in 0..T; slice ``t_index`` sits after circuit layer ``t_index`` (0 is the input)
and corresponds to the half-integer time ``t_index + 0.5``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import gf2
from .circuit import CircuitError, CliffordCircuit, ParityStructure, conjugate_layer
from .noise import LocalChannel, NoiseModel, gaussian_probs
from .pauli import PauliOperator


class SpacetimeError(ValueError):
    pass


# -- indexing -------------------------------------------------------------------

def flat_index(n: int, q: int, t_index: int) -> int:
    return t_index * n + q


def unflat_index(n: int, index: int) -> Tuple[int, int]:
    """(qubit, t_index) of a flat spacetime index."""
    return index % n, index // n


def _slice(v: int, n: int, t: int) -> int:
    return (v >> (t * n)) & ((1 << n) - 1)


def kappa(P: PauliOperator, t_index: int, T: int) -> PauliOperator:
    """Place an n-qubit Pauli on one spacetime slice."""
    if not 0 <= t_index <= T:
        raise SpacetimeError(f"slice {t_index} outside 0..{T}")
    shift = t_index * P.n
    return PauliOperator(P.n * (T + 1), P.x << shift, P.z << shift)


def split(O: PauliOperator, n: int) -> Dict[int, PauliOperator]:
    """Nonidentity per-slice components of a spacetime Pauli."""
    if O.n % n:
        raise SpacetimeError("spacetime size is not a multiple of n")
    out = {}
    for t in range(O.n // n):
        x, z = _slice(O.x, n, t), _slice(O.z, n, t)
        if x or z:
            out[t] = PauliOperator(n, x, z)
    return out


def map_error(circuit_error: Sequence[Tuple[int, PauliOperator]], circuit: CliffordCircuit) -> PauliOperator:
    """Spacetime image of circuit faults given as (slice, Pauli) pairs."""
    n, T = circuit.n, circuit.T
    x = z = 0
    for t, P in circuit_error:
        if P.n != n:
            raise SpacetimeError("fault acts on the wrong number of qubits")
        if not 0 <= t <= T:
            raise SpacetimeError(f"slice {t} outside 0..{T}")
        x ^= P.x << (t * n)
        z ^= P.z << (t * n)
    return PauliOperator(n * (T + 1), x, z)


# -- cumulants ---------------------------------------------------------------------

def _check_size(O: PauliOperator, circuit: CliffordCircuit) -> None:
    if O.n != circuit.n * (circuit.T + 1):
        raise SpacetimeError(f"expected a Pauli on {circuit.n * (circuit.T + 1)} spacetime qubits, got {O.n}")


def back_cumulant(O: PauliOperator, circuit: CliffordCircuit) -> PauliOperator:
    """Slice t holds the product of all components at slices >= t, conjugated back to t."""
    _check_size(O, circuit)
    n, T = circuit.n, circuit.T
    ax = az = 0
    x = z = 0
    for t in range(T, -1, -1):
        ax ^= _slice(O.x, n, t)
        az ^= _slice(O.z, n, t)
        x |= ax << (t * n)
        z |= az << (t * n)
        if t > 0:
            ax, az = conjugate_layer(ax, az, circuit.layers[t - 1])
    return PauliOperator(O.n, x, z)


def forward_cumulant(O: PauliOperator, circuit: CliffordCircuit) -> PauliOperator:
    """Slice t holds the product of all components at slices <= t, conjugated forward to t."""
    _check_size(O, circuit)
    n, T = circuit.n, circuit.T
    ax = az = 0
    x = z = 0
    for t in range(T + 1):
        if t > 0:
            ax, az = conjugate_layer(ax, az, circuit.layers[t - 1])
        ax ^= _slice(O.x, n, t)
        az ^= _slice(O.z, n, t)
        x |= ax << (t * n)
        z |= az << (t * n)
    return PauliOperator(O.n, x, z)


# -- spacetime code ------------------------------------------------------------------

@dataclass
class SpacetimeCode:
    circuit: CliffordCircuit
    parity: ParityStructure
    measured_gens: List[PauliOperator]
    measured_logicals: List[PauliOperator]

    @property
    def n(self) -> int:
        return self.circuit.n

    @property
    def T(self) -> int:
        return self.circuit.T

    @property
    def n_st(self) -> int:
        return self.circuit.n * (self.circuit.T + 1)

    def generator_window(self, i: int) -> Tuple[int, int]:
        """(first, last) slice touched by generator i."""
        return _window(self.measured_gens[i], self.n)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "T": self.T,
            "n_st": self.n_st,
            "generators": [
                {"u": _bits(u, self.parity.width), "pauli": g.to_sparse()}
                for u, g in zip(self.parity.O_perp, self.measured_gens)
            ],
            "logicals": [
                {"u_L": _bits(u, self.parity.width), "pauli": g.to_sparse()}
                for u, g in zip(self.parity.K_L, self.measured_logicals)
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _bits(v: int, width: int) -> List[int]:
    return [j for j in range(width) if (v >> j) & 1]


def _window(P: PauliOperator, n: int) -> Tuple[int, int]:
    m = P.x | P.z
    if not m:
        return (-1, -1)
    return ((m & -m).bit_length() - 1) // n, (m.bit_length() - 1) // n


def operator_from_u(u: int, parity: ParityStructure, circuit: CliffordCircuit) -> PauliOperator:
    """Back-cumulant of the circuit measurements selected by ``u``, each placed just before its layer."""
    n, T = circuit.n, circuit.T
    x = z = 0
    for j in range(parity.s0, parity.width):
        if (u >> j) & 1:
            E = parity.entries[j]
            t = parity.entry_layers[j] - 1
            x ^= E.x << (t * n)
            z ^= E.z << (t * n)
    return back_cumulant(PauliOperator(n * (T + 1), x, z), circuit)


def build_spacetime_code(circuit: CliffordCircuit, parity: ParityStructure) -> SpacetimeCode:
    gens = [operator_from_u(u, parity, circuit) for u in parity.O_perp]
    logicals = [operator_from_u(u, parity, circuit) for u in parity.K_L]
    return SpacetimeCode(circuit, parity, gens, logicals)


def support_bound_holds(code: SpacetimeCode) -> bool:
    """Each generator lives strictly between the earliest and latest entries of its u.

    Entry times are taken on the half-integer scale: an initial stabilizer sits at
    time 0 and a measurement in layer t at time t; slice s is time s + 0.5.
    """
    ps = code.parity
    for u, g in zip(ps.O_perp, code.measured_gens):
        times = [ps.entry_layers[j] for j in range(ps.width) if (u >> j) & 1]
        lo, hi = _window(g, code.n)
        if lo < 0:
            continue
        if not (min(times) < lo + 0.5 and hi + 0.5 < max(times)):
            return False
    return True


# -- generator localization ----------------------------------------------------------

def localize_generator_basis(parity: ParityStructure, strategy: str = "greedy_window", circuit=None) -> ParityStructure:
    """Equivalent parity-check basis with temporally short checks.

    ``surface_pairing`` follows the pairing recipe for the rotated-surface memory
    circuit (needs its metadata); ``greedy_window`` brings any basis to minimal
    span form, where first and last entries are pairwise distinct.
    """
    if strategy == "surface_pairing":
        if circuit is None or circuit.metadata.get("kind") != "surface_memory":
            raise SpacetimeError("surface_pairing needs a surface_memory circuit")
        rows = _surface_recipe(parity, circuit.metadata)
    elif strategy == "greedy_window":
        rows = minimal_span_basis(parity.O_perp)
    else:
        raise SpacetimeError(f"unknown strategy {strategy!r}")
    if not same_span(rows, parity.O_perp):
        raise SpacetimeError(f"strategy {strategy!r} does not reproduce the parity-check span")
    out = ParityStructure(
        parity.n,
        parity.s0,
        parity.entries,
        parity.entry_layers,
        rows,
        parity.K_L,
        parity.K_L_content,
        parity.measurement_kinds,
        parity.k0,
        logical_reference=parity.logical_reference,
    )
    if parity.check_reference:
        # references are linear in u: express each new row in the old basis
        basis = list(parity.O_perp)
        refs = []
        for u in rows:
            combo = gf2.express(u, basis)
            refs.append(sum(parity.check_reference[i] for i in range(len(basis)) if (combo >> i) & 1) & 1)
        out.check_reference = refs
    return out


def same_span(a: Sequence[int], b: Sequence[int]) -> bool:
    ra = gf2.rank(a)
    return ra == len(a) and ra == gf2.rank(b) and gf2.rank(list(a) + list(b)) == ra


def _surface_recipe(parity: ParityStructure, meta: dict) -> List[int]:
    s0 = parity.s0
    anc = meta["ancilla_meas"]
    data = meta["data_meas"]
    init = {int(k): v for k, v in meta["init_slots"].items()}
    plaq = meta["plaquettes"]
    rows = []

    def bit(meas_index: int) -> int:
        return 1 << (s0 + meas_index)

    for r, ms in enumerate(anc):
        for i, m in enumerate(ms):
            if r == 0:
                rows.append(bit(m) | (1 << init[i][0]))
            elif r == 1:
                rows.append(bit(m) | (1 << init[i][1]))
            else:
                rows.append(bit(m) | bit(anc[r - 2][i]))
    R = len(anc)
    nd = len(data)
    for i, p in enumerate(plaq):
        if p["type"] != "Z":
            continue
        u = 0
        for q in p["data"]:
            u ^= bit(data[q])
        u ^= bit(anc[R - 1][i])
        u ^= bit(anc[R - 2][i]) if R >= 2 else 1 << init[i][1]
        rows.append(u)
    assert nd == max(max(p["data"]) for p in plaq) + 1
    return rows


def minimal_span_basis(rows: Sequence[int]) -> List[int]:
    """Basis of the same GF(2) span whose leading and trailing bits are all distinct.

    Any pair sharing a first (last) bit is reduced by replacing the longer row with
    their sum, which strictly shrinks the total span, so the loop terminates.
    """
    basis = [rows[i] for i in gf2.independent_subset(list(rows))]

    def first(v):
        return (v & -v).bit_length() - 1

    def last(v):
        return v.bit_length() - 1

    changed = True
    while changed:
        changed = False
        for key, longer in ((first, lambda a, b: last(a) > last(b)), (last, lambda a, b: first(a) < first(b))):
            seen: Dict[int, int] = {}
            for i, v in enumerate(basis):
                k = key(v)
                if k in seen:
                    j = seen[k]
                    if longer(basis[i], basis[j]):
                        basis[i] ^= basis[j]
                    else:
                        basis[j] ^= basis[i]
                        seen[k] = i
                    changed = True
                else:
                    seen[k] = i
            if changed:
                break
    basis.sort(key=lambda v: (last(v), first(v)))
    return basis


# -- circuit-level noise --------------------------------------------------------------

ONE_QUBIT_KINDS = {"H": "1q", "S": "1q", "X": "1q", "Y": "1q", "Z": "1q", "Idle": "idle"}
TWO_QUBIT_KINDS = {"CNOT": "2q", "CZ": "2q", "SWAP": "2q"}


def location_kind(gate: str) -> str:
    if gate in ONE_QUBIT_KINDS:
        return ONE_QUBIT_KINDS[gate]
    if gate in TWO_QUBIT_KINDS:
        return TWO_QUBIT_KINDS[gate]
    if gate == "MeasurePauli":
        return "measure"
    if gate == "PrepareZero":
        return "prep"
    raise CircuitError(f"unknown gate {gate!r}")


@dataclass
class NoiseSpec:
    """Total error rate per location kind; components drawn around rate / (4^w - 1)."""

    rates: Dict[str, float] = field(
        default_factory=lambda: {"idle": 1e-3, "1q": 1e-3, "2q": 1e-2, "measure": 1e-3, "prep": 1e-3}
    )
    relative_sigma: float = 0.0
    drift: Optional[Dict[str, float]] = None
    floor: float = 1e-7


def drift_factors(T: int, theta: float, sigma_rel: float, rng: np.random.Generator) -> np.ndarray:
    """Per-layer multipliers of a walk p_t = theta p_{t-1} + sigma eta_t, normalized to p_0 = 1."""
    f = np.empty(T + 1)
    f[0] = 1.0
    for t in range(1, T + 1):
        f[t] = theta * f[t - 1] + sigma_rel * rng.standard_normal()
    return np.clip(f, 0.05, None)


def standard_noise(circuit: CliffordCircuit, spec: Optional[NoiseSpec] = None, seed: int = 0) -> NoiseModel:
    """One w-qubit channel per w-qubit location, placed just before the location.

    Preparations are the exception: their channel follows them. Each channel's
    ``layer`` field records the circuit layer (1-based) of its location.
    With ``spec.drift = {"theta": .., "sigma": ..}`` the per-layer scale of the 1Q-type
    and 2Q-type rates follows two independent walks.
    """
    spec = spec or NoiseSpec()
    rng = np.random.default_rng(seed)
    n, T = circuit.n, circuit.T
    walks = {}
    if spec.drift:
        for group in ("single", "two"):
            walks[group] = drift_factors(T, float(spec.drift.get("theta", 1.0)), float(spec.drift.get("sigma", 0.1)), rng)
    chans = []
    for L, layer in enumerate(circuit.layers, start=1):
        for loc in layer:
            kind = location_kind(loc.gate)
            rate = spec.rates.get(kind, 0.0)
            if rate <= 0:
                continue
            if walks:
                rate *= walks["two" if kind == "2q" else "single"][L - 1]
            w = len(loc.qubits)
            t = L if kind == "prep" else L - 1
            support = tuple(flat_index(n, q, t) for q in loc.qubits)
            per = rate / (4**w - 1)
            if spec.relative_sigma > 0:
                probs = gaussian_probs(w, per, spec.relative_sigma * per, rng, floor=spec.floor)
            else:
                probs = np.concatenate([[1.0 - rate], np.full(4**w - 1, per)])
            chans.append(LocalChannel(support, probs, kind, L))
    return NoiseModel(n * (T + 1), chans)


def channel_position(model: NoiseModel, n: int, c: int) -> Tuple[int, Tuple[int, ...]]:
    """(slice, qubits) of a spacetime channel."""
    sup = model.channels[c].support
    return sup[0] // n, tuple(q % n for q in sup)


# -- error signatures --------------------------------------------------------------------

def error_signatures(model: NoiseModel, gens: Sequence[PauliOperator]) -> List[int]:
    """Bit-packed commutation pattern of every model error with ``gens`` (bit i = generator i)."""
    from .syndrome import error_patterns

    return error_patterns(model, gens)
