"""Learning Pauli error rates and logical error rates from syndrome data."""

from .pauli import PauliOperator
from .codes import SubsystemCode, named_code
from .noise import LocalChannel, NoiseModel
from .circuit import CliffordCircuit, build_parity_structure
from .spacetime import SpacetimeCode, build_spacetime_code

__all__ = [
    "PauliOperator",
    "SubsystemCode",
    "named_code",
    "LocalChannel",
    "NoiseModel",
    "CliffordCircuit",
    "build_parity_structure",
    "SpacetimeCode",
    "build_spacetime_code",
]

__version__ = "0.1.0"
