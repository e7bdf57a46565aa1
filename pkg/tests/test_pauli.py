import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synlearn.pauli import (
    DimensionError,
    PauliOperator,
    binary_commutator,
    embed,
    inverse_walsh_hadamard,
    local_from_label,
    local_index,
    local_label,
    multiply,
    scalar_commutator,
    walsh_hadamard,
    walsh_matrix,
)


def paulis(n):
    return st.builds(lambda x, z: PauliOperator(n, x, z), st.integers(0, (1 << n) - 1), st.integers(0, (1 << n) - 1))


def matrix(P):
    """Dense matrix of a phase-free Pauli: tensor of I, X, XZ, Z per qubit (qubit 0 leftmost)."""
    I2 = np.eye(2)
    X = np.array([[0, 1], [1, 0]])
    Z = np.diag([1, -1])
    out = np.ones((1, 1))
    for q in range(P.n):
        f = I2
        if (P.x >> q) & 1:
            f = X
        if (P.z >> q) & 1:
            f = f @ Z
        out = np.kron(out, f)
    return out


pairs = st.integers(1, 6).flatmap(lambda n: st.tuples(paulis(n), paulis(n), paulis(n)))


@given(pairs)
@settings(max_examples=300, deadline=None)
def test_commutator_is_symplectic_bilinear(abc):
    a, b, c = abc
    assert binary_commutator(multiply(a, b), c) == binary_commutator(a, c) ^ binary_commutator(b, c)
    assert binary_commutator(a, b) == binary_commutator(b, a)
    assert binary_commutator(a, a) == 0


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(paulis(n), paulis(n))))
@settings(max_examples=100, deadline=None)
def test_commutator_matches_matrix_commutation(ab):
    a, b = ab
    A, B = matrix(a), matrix(b)
    anticommute = np.allclose(A @ B, -B @ A)
    assert binary_commutator(a, b) == int(anticommute)
    assert scalar_commutator(a, b) == (-1 if anticommute else 1)


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(paulis(n), paulis(n))))
def test_product_is_xor_and_associative_with_identity(ab):
    a, b = ab
    p = multiply(a, b)
    assert (p.x, p.z) == (a.x ^ b.x, a.z ^ b.z)
    assert multiply(p, b) == a
    assert multiply(a, PauliOperator.identity(a.n)) == a


def test_label_roundtrip_and_sparse():
    P = PauliOperator.from_label("XIYZ")
    assert P.to_label() == "XIYZ"
    assert P.weight() == 3
    assert PauliOperator.from_label(P.to_sparse(), 4) == P
    assert PauliOperator.from_label("X2 Z5", 6).to_label() == "IXIIZI"


def test_dimension_mismatch_raises():
    with pytest.raises(DimensionError):
        multiply(PauliOperator(2, 1, 0), PauliOperator(3, 1, 0))
    with pytest.raises(ValueError):
        PauliOperator(2, 4, 0)


@given(st.integers(1, 3).flatmap(lambda k: st.tuples(st.just(k), st.integers(0, 4**k - 1))))
def test_local_index_roundtrip(ki):
    k, idx = ki
    support = list(range(2 * k - 1, -1, -2))
    P = embed(idx, support, 2 * k)
    assert local_index(P, support) == idx
    assert local_from_label(local_label(idx, k)) == idx


@given(st.integers(1, 3).flatmap(lambda k: st.lists(st.floats(-1, 1), min_size=4**k, max_size=4**k)))
@settings(max_examples=200, deadline=None)
def test_walsh_hadamard_roundtrip(v):
    v = np.array(v)
    assert np.allclose(inverse_walsh_hadamard(walsh_hadamard(v)), v, atol=1e-12, rtol=0)


def test_walsh_matrix_entries_are_scalar_commutators():
    for k in (1, 2):
        W = walsh_matrix(k)
        for a in range(4**k):
            for e in range(4**k):
                Pa, Pe = embed(a, list(range(k)), k), embed(e, list(range(k)), k)
                assert W[a, e] == scalar_commutator(Pa, Pe)
        assert np.allclose(W @ W, 4**k * np.eye(4**k))


def test_walsh_rejects_bad_length():
    with pytest.raises(ValueError):
        walsh_hadamard(np.ones(8))
    with pytest.raises(ValueError):
        walsh_hadamard(np.ones(4**5))
