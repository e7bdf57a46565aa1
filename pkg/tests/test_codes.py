import json

import pytest

from conftest import four_two_two
from synlearn.codes import (
    CodeError,
    SubsystemCode,
    bivariate_bicycle,
    color_832,
    five_qubit,
    named_code,
    pure_distance,
    repetition,
    rotated_surface,
    steane,
    syndrome_of,
)
from synlearn.pauli import PauliOperator, binary_commutator
from synlearn.symplectic import check_commuting


@pytest.mark.parametrize(
    "code,n,k,d",
    [(steane(), 7, 1, 3), (five_qubit(), 5, 1, 3), (rotated_surface(3), 9, 1, 2), (repetition(3), 3, 1, 1), (four_two_two(), 4, 2, 2)],
)
def test_parameters(code, n, k, d):
    assert code.n == n and code.k == k
    assert pure_distance(code) == d


def test_rotated_surface_parameters():
    for d in (3, 5):
        c = rotated_surface(d)
        assert c.n == d * d and len(c.stabilizer_gens) == d * d - 1 and c.k == 1
        assert check_commuting(c.stabilizer_gens)
        for lx, lz in zip(c.logical_x, c.logical_z):
            assert binary_commutator(lx, lz) == 1
    # boundary stabilizers have weight 2, so the pure distance is 2 for every d
    assert pure_distance(rotated_surface(5), max_weight=3) == 2


def test_color_and_bivariate_bicycle():
    c = color_832()
    assert (c.n, c.k) == (8, 3)
    bb = bivariate_bicycle(6, 6)
    assert (bb.n, bb.k) == (72, 12)


def test_syndrome_of_single_qubit_error():
    c = steane()
    s = syndrome_of(c, PauliOperator.from_label("X1", 7))
    assert s.value != 0
    assert syndrome_of(c, PauliOperator.identity(7)).value == 0


def test_dependent_or_foreign_generators_rejected():
    g = [PauliOperator.from_label(s) for s in ("ZZI", "IZZ")]
    with pytest.raises(CodeError):
        SubsystemCode(3, g + [PauliOperator.from_label("ZIZ")])
    with pytest.raises(CodeError):
        SubsystemCode(3, g, measured_gens=[PauliOperator.from_label("XXX")])
    with pytest.raises(CodeError):
        named_code("nope")


def test_json_roundtrip():
    c = rotated_surface(3)
    back = SubsystemCode.from_dict(json.loads(c.dumps()))
    assert back.stabilizer_gens == c.stabilizer_gens
    assert back.logical_x == c.logical_x
