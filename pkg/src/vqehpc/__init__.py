"""Desk-scale VQE pipeline with partitioned simulation and a worker farm."""
from .ci import CisdResult, exact_diagonalize
from .fermion import IntegralTable, jordan_wigner, parse_fcidump, qubit_hamiltonian_from_fcidump, read_fcidump
from .pauli import QubitHamiltonian, PauliTerm, pauli_multiply, sort_terms
from .pipeline import RunConfig, StageError, run_vqe
from .statevector import StateVector

__all__ = [
    "CisdResult",
    "IntegralTable",
    "PauliTerm",
    "QubitHamiltonian",
    "RunConfig",
    "StageError",
    "StateVector",
    "exact_diagonalize",
    "jordan_wigner",
    "parse_fcidump",
    "pauli_multiply",
    "qubit_hamiltonian_from_fcidump",
    "read_fcidump",
    "run_vqe",
    "sort_terms",
]
__version__ = "0.1.0"
