"""Uniform front for the local and the partitioned simulator."""
from __future__ import annotations

from .pauli import QubitHamiltonian
from .partitioned import (
    Communicator,
    PartitionedState,
    apply_pauli_rotation_distributed,
    expectation_distributed,
    init_partitioned_basis_state,
)
from .statevector import (
    StateVector,
    apply_pauli_rotation,
    expectation_hamiltonian,
    init_basis_state,
)


class LocalEngine:
    worker_count = 1

    def basis_state(self, n_qubits: int, index: int) -> StateVector:
        return init_basis_state(n_qubits, index)

    def rotate(self, state: StateVector, p: str, theta: float) -> None:
        apply_pauli_rotation(state, p, theta)

    def expectation(self, state: StateVector, h: QubitHamiltonian) -> float:
        return expectation_hamiltonian(state, h)

    def to_vector(self, state: StateVector) -> StateVector:
        return state


class PartitionedEngine:
    """``worker_count`` emulated ranks sharing one :class:`Communicator`."""

    def __init__(self, worker_count: int, comm: Communicator | None = None):
        self.worker_count = worker_count
        self.comm = comm or Communicator()

    def basis_state(self, n_qubits: int, index: int) -> PartitionedState:
        return init_partitioned_basis_state(n_qubits, index, self.worker_count, self.comm)

    def rotate(self, state: PartitionedState, p: str, theta: float) -> None:
        apply_pauli_rotation_distributed(state, p, theta)

    def expectation(self, state: PartitionedState, h: QubitHamiltonian) -> float:
        return expectation_distributed(state, h)

    def to_vector(self, state: PartitionedState) -> StateVector:
        return state.gather()


def make_engine(partitions: int = 1):
    return LocalEngine() if partitions == 1 else PartitionedEngine(partitions)
