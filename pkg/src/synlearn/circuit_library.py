"""Builders for the memory-experiment circuits used throughout the package."""

from __future__ import annotations

from typing import Dict, List, Sequence

from .circuit import CircuitError, CliffordCircuit, Location
from .codes import rotated_surface_layout
from .pauli import PauliOperator


def _on(n: int, kind: str, qubits: Sequence[int]) -> PauliOperator:
    x = z = 0
    for q in qubits:
        if kind in "XY":
            x |= 1 << q
        if kind in "ZY":
            z |= 1 << q
    return PauliOperator(n, x, z)


def fill_idle(layers: List[List[Location]], n: int) -> List[List[Location]]:
    """Add an Idle location on every qubit left untouched by a layer."""
    out = []
    for layer in layers:
        used = {q for loc in layer for q in loc.qubits}
        out.append(list(layer) + [Location("Idle", (q,)) for q in range(n) if q not in used])
    return out


def repetition_memory(rounds: int, idle: bool = True) -> CliffordCircuit:
    """Three-qubit X-basis repetition code with one ancilla reading X1X2 each round.

    Each round is three layers: CNOT(a, 1), CNOT(a, 2), measure X on the ancilla.
    The ancilla starts in |+> and is never reset.
    """
    if rounds < 1:
        raise CircuitError("need at least one round")
    n, a = 4, 3
    layers: List[List[Location]] = []
    meas: List[int] = []
    for _ in range(rounds):
        layers.append([Location("CNOT", (a, 0))])
        layers.append([Location("CNOT", (a, 1))])
        layers.append([Location("MeasurePauli", (a,), "X")])
        meas.append(len(meas))
    if idle:
        layers = fill_idle(layers, n)
    stabs = [_on(n, "X", [0, 1, a]), _on(n, "X", [1, 2]), _on(n, "X", [a])]
    return CliffordCircuit(
        n,
        layers,
        stabs,
        initial_logical_x=[_on(n, "X", [0])],
        initial_logical_z=[_on(n, "Z", [0, 1, 2])],
        metadata={"kind": "repetition_memory", "rounds": rounds},
    )


def _surface_schedule(d: int):
    """CNOT partners per ancilla for the four entangling layers.

    X checks visit NW, SW, NE, SE and Z checks NW, NE, SW, SE, so hook errors
    run perpendicular to the logical operator of the same type.
    """
    plaquettes = rotated_surface_layout(d)
    sched = []
    for kind, qubits in plaquettes:
        rows = [q // d for q in qubits]
        cols = [q % d for q in qubits]
        # recover the plaquette corner (r, c) of its NW cell, possibly off-lattice
        if len(qubits) == 4:
            r0, c0 = min(rows), min(cols)
        elif min(cols) == max(cols):  # vertical boundary pair
            r0 = min(rows)
            c0 = cols[0] - 1 if cols[0] == 0 else cols[0]
        else:  # horizontal boundary pair
            c0 = min(cols)
            r0 = rows[0] - 1 if rows[0] == 0 else rows[0]
        nw, ne, sw, se = (r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1)
        order = (nw, sw, ne, se) if kind == "X" else (nw, ne, sw, se)
        steps = []
        for r, c in order:
            q = r * d + c
            steps.append(q if 0 <= r < d and 0 <= c < d and q in qubits else None)
        sched.append((kind, qubits, steps))
    return sched


def surface_memory(d: int, rounds: int, idle: bool = True) -> CliffordCircuit:
    """Rotated surface code memory experiment in the logical |0> state.

    Data qubits are 0..d^2-1 (row-major), one ancilla per plaquette follows.
    Each round has seven layers: H on X ancillas, four CNOT layers, H on X
    ancillas, Z measurement of all ancillas. Ancillas are never reset. A final
    layer measures every data qubit in Z.
    """
    if rounds < 1:
        raise CircuitError("need at least one round")
    sched = _surface_schedule(d)
    nd = d * d
    n = nd + len(sched)
    anc = [nd + i for i in range(len(sched))]
    x_anc = [a for a, (kind, _, _) in zip(anc, sched) if kind == "X"]
    layers: List[List[Location]] = []
    anc_meas: List[List[int]] = []
    m = 0
    for _ in range(rounds):
        layers.append([Location("H", (a,)) for a in x_anc])
        for step in range(4):
            layer = []
            for a, (kind, _, steps) in zip(anc, sched):
                q = steps[step]
                if q is None:
                    continue
                layer.append(Location("CNOT", (a, q) if kind == "X" else (q, a)))
            layers.append(layer)
        layers.append([Location("H", (a,)) for a in x_anc])
        layers.append([Location("MeasurePauli", (a,), "Z") for a in anc])
        anc_meas.append(list(range(m, m + len(anc))))
        m += len(anc)
    layers.append([Location("MeasurePauli", (q,), "Z") for q in range(nd)])
    data_meas = list(range(m, m + nd))
    if idle:
        layers = fill_idle(layers, n)

    # per ancilla: (plaquette x ancilla Z) and (ancilla Z) as initial stabilizers
    stabs = []
    init_slots: Dict[int, List[int]] = {}
    for i, (a, (kind, qubits, _)) in enumerate(zip(anc, sched)):
        plaq = _on(n, kind, qubits)
        stabs.append(PauliOperator(n, plaq.x, plaq.z | (1 << a)))
        stabs.append(_on(n, "Z", [a]))
        init_slots[i] = [2 * i, 2 * i + 1]
    lx = _on(n, "X", range(d))
    lz = _on(n, "Z", range(0, nd, d))
    meta = {
        "kind": "surface_memory",
        "d": d,
        "rounds": rounds,
        "plaquettes": [{"type": kind, "data": list(qs), "ancilla": a} for a, (kind, qs, _) in zip(anc, sched)],
        "ancilla_meas": anc_meas,
        "data_meas": data_meas,
        "init_slots": {str(k): v for k, v in init_slots.items()},
    }
    return CliffordCircuit(n, layers, stabs, initial_logical_x=[lx], initial_logical_z=[lz], metadata=meta)


def steane_ghz(basis: str, idle: bool = True) -> CliffordCircuit:
    """Two Steane blocks entangled into a logical Bell pair, then read out transversally.

    Block A is qubits 0-6 and block B qubits 7-13, both starting in logical |0>.
    Layers: transversal H on A, transversal CNOT A->B, every qubit measured in
    ``basis`` (X, Y or Z).
    """
    from .codes import steane

    basis = basis.upper()
    if basis not in ("X", "Y", "Z"):
        raise CircuitError(f"basis must be X, Y or Z, got {basis!r}")
    code = steane()
    n = 14

    def shift(P: PauliOperator, k: int) -> PauliOperator:
        return PauliOperator(n, P.x << k, P.z << k)

    stabs = [shift(g, k) for k in (0, 7) for g in code.stabilizer_gens]
    layers: List[List[Location]] = [
        [Location("H", (q,)) for q in range(7)],
        [Location("CNOT", (q, q + 7)) for q in range(7)],
        [Location("MeasurePauli", (q,), basis) for q in range(n)],
    ]
    if idle:
        layers = fill_idle(layers, n)
    return CliffordCircuit(
        n,
        layers,
        stabs,
        initial_logical_x=[shift(code.logical_x[0], k) for k in (0, 7)],
        initial_logical_z=[shift(code.logical_z[0], k) for k in (0, 7)],
        metadata={"kind": "steane_ghz", "basis": basis},
    )
