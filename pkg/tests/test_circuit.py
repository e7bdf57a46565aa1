import json

import numpy as np
import pytest

from synlearn.circuit import (
    CircuitError,
    CliffordCircuit,
    Location,
    build_parity_structure,
    conjugate_layer,
    initial_tableau,
    run_circuit,
)
from synlearn.circuit_library import repetition_memory, steane_ghz, surface_memory
from synlearn.pauli import PauliOperator

# -- dense statevector oracle ----------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j])
LETTER = {"X": X, "Y": Y, "Z": Z}


def op_on(n, mats):
    """Kronecker product with qubit 0 as the most significant factor."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n):
        out = np.kron(out, mats.get(q, I2))
    return out


def gate_matrix(n, loc):
    g, qs = loc.gate, loc.qubits
    if g in ("H", "S", "X", "Y", "Z", "Idle"):
        return op_on(n, {qs[0]: {"H": H, "S": S, "X": X, "Y": Y, "Z": Z, "Idle": I2}[g]})
    P0, P1 = np.diag([1, 0]).astype(complex), np.diag([0, 1]).astype(complex)
    a, b = qs
    if g == "CNOT":
        return op_on(n, {a: P0}) + op_on(n, {a: P1, b: X})
    if g == "CZ":
        return op_on(n, {a: P0}) + op_on(n, {a: P1, b: Z})
    if g == "SWAP":
        return (op_on(n, {}) + op_on(n, {a: X, b: X}) + op_on(n, {a: Y, b: Y}) + op_on(n, {a: Z, b: Z})) / 2
    raise ValueError(g)


def phase_free_matrix(P):
    mats = {}
    for q in range(P.n):
        xb, zb = (P.x >> q) & 1, (P.z >> q) & 1
        if xb or zb:
            mats[q] = (X if xb else I2) @ (Z if zb else I2)
    return op_on(P.n, mats)


def random_layers(n, depth, rng, measure=True):
    layers = []
    for _ in range(depth):
        free = list(rng.permutation(n))
        layer = []
        while free:
            q = int(free.pop())
            c = rng.random()
            if c < 0.35 and free:
                layer.append(Location(str(rng.choice(["CNOT", "CZ", "SWAP"])), (q, int(free.pop()))))
            elif c < 0.75:
                layer.append(Location(str(rng.choice(["H", "S", "X", "Y", "Z", "Idle"])), (q,)))
            elif measure:
                layer.append(Location("MeasurePauli", (q,), str(rng.choice(list("XYZ")))))
        layers.append(layer)
    return layers


@pytest.mark.parametrize("seed", range(40))
def test_tableau_matches_statevector(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    layers = random_layers(n, 6, rng)
    circ = CliffordCircuit(n, layers, [PauliOperator(n, 0, 1 << q) for q in range(n)])
    tab = initial_tableau(circ)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    sim_rng = np.random.default_rng(seed + 100)
    for layer in layers:
        for loc in layer:
            res = tab.apply(loc, sim_rng)
            if loc.gate != "MeasurePauli":
                psi = gate_matrix(n, loc) @ psi
                continue
            M = op_on(n, {loc.qubits[0]: LETTER[loc.pauli]})
            proj = (np.eye(2**n) + (1 - 2 * res[0]) * M) / 2
            prob = np.vdot(psi, proj @ psi).real
            if res[1]:
                assert prob == pytest.approx(0.5, abs=1e-9)
            else:
                assert prob == pytest.approx(1.0, abs=1e-9)
            psi = proj @ psi / np.sqrt(prob)


@pytest.mark.parametrize("seed", range(30))
def test_conjugation_matches_dense_unitary(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    (layer,) = random_layers(n, 1, rng, measure=False)
    P = PauliOperator(n, int(rng.integers(2**n)), int(rng.integers(2**n)))
    x, z = conjugate_layer(P.x, P.z, layer)
    U = np.eye(2**n, dtype=complex)
    for loc in layer:
        U = gate_matrix(n, loc) @ U
    # conjugate_layer gives the phase-free part of U^dagger P U
    lhs = U.conj().T @ phase_free_matrix(P) @ U
    Q = phase_free_matrix(PauliOperator(n, x, z))
    overlap = abs(np.trace(Q.conj().T @ lhs)) / 2**n
    assert overlap == pytest.approx(1.0)


def test_invalid_circuits():
    with pytest.raises(CircuitError):
        Location("T", (0,))
    with pytest.raises(CircuitError):
        Location("CNOT", (1, 1))
    with pytest.raises(CircuitError):
        CliffordCircuit(2, [[Location("H", (0,)), Location("S", (0,))]], [PauliOperator.from_label("ZI"), PauliOperator.from_label("IZ")])
    with pytest.raises(CircuitError):
        surface_memory(3, 0)
    with pytest.raises(CircuitError):
        steane_ghz("W")


def test_repetition_parity_structure():
    circ = repetition_memory(3)
    ps = build_parity_structure(circ)
    assert ps.measurement_kinds == ["deterministic"] * 3
    assert len(ps.O_perp) == 3 and not ps.K_L
    out = run_circuit(circ)
    assert ps.check_values(out).tolist() == [0, 0, 0]
    # an X-type fault on data qubit 1 before the first CNOT is invisible; a Z fault flips the checks
    flipped = run_circuit(circ, errors={0: (0, 1 << 1)})
    assert ps.check_values(flipped).tolist() == [1, 0, 0]


def test_surface_memory_counts():
    for d, r in ((3, 1), (3, 4), (5, 2)):
        circ = surface_memory(d, r)
        ps = build_parity_structure(circ)
        n_anc = d * d - 1
        assert circ.T == 7 * r + 1
        assert len(ps.O_perp) == n_anc * r + (d * d - 1) // 2
        assert len(ps.K_L) == 1
        assert not any(ps.check_values(run_circuit(circ, rng=np.random.default_rng(s))).any() for s in range(3))


def test_ghz_logical_outcomes():
    for basis in "XYZ":
        circ = steane_ghz(basis)
        ps = build_parity_structure(circ)
        assert len(ps.O_perp) == 6 and len(ps.K_L) == 2


def test_json_roundtrip():
    circ = surface_memory(3, 1)
    back = CliffordCircuit.from_dict(json.loads(circ.dumps()))
    assert back.layers == circ.layers
    assert back.initial_stabilizers == circ.initial_stabilizers
    assert back.metadata == circ.metadata


def test_prepare_zero_rejected_by_parity_builder():
    circ = CliffordCircuit(1, [[Location("PrepareZero", (0,))], [Location("MeasurePauli", (0,), "Z")]], [PauliOperator.from_label("Z")])
    with pytest.raises(CircuitError):
        build_parity_structure(circ)
