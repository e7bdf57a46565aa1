import numpy as np
import pytest

from synlearn.codes import SubsystemCode
from synlearn.pauli import PauliOperator


def four_two_two() -> SubsystemCode:
    """[[4,2,2]] code: XXXX and ZZZZ, distance 2."""
    ops = [PauliOperator.from_label(s) for s in ("XXXX", "ZZZZ")]
    lx = [PauliOperator.from_label(s) for s in ("XXII", "XIXI")]
    lz = [PauliOperator.from_label(s) for s in ("ZIZI", "ZZII")]
    return SubsystemCode(4, ops, logical_x=lx, logical_z=lz, name="four_two_two")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
