import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqehpc.engines import LocalEngine, PartitionedEngine
from vqehpc.partitioned import (
    Communicator,
    CommunicationError,
    LayoutError,
    PartitionedState,
    apply_pauli_rotation_distributed,
    expectation_distributed,
    gather,
    memory_per_worker,
    min_workers,
    scatter,
)
from vqehpc.pauli import QubitHamiltonian
from vqehpc.statevector import apply_pauli_rotation, expectation_hamiltonian, random_state

GiB = 1 << 30


def test_memory_formula():
    assert memory_per_worker(30, 1) == 16 * GiB
    assert memory_per_worker(36, 64) == 16 * GiB
    assert memory_per_worker(10, 2) == 2**13
    with pytest.raises(LayoutError):
        memory_per_worker(10, 3)


def test_min_workers():
    assert min_workers(36, 16 * GiB) == 64
    assert min_workers(32, 16 * GiB) == 4
    assert min_workers(10, 1 << 20) == 1


def test_scatter_layout(rng):
    psi = random_state(2, rng)
    s = scatter(psi, 2)
    np.testing.assert_array_equal(s[0].amplitudes, psi.amplitudes[:2])
    np.testing.assert_array_equal(s[1].amplitudes, psi.amplitudes[2:])
    one = scatter(psi, 1)
    np.testing.assert_array_equal(one[0].amplitudes, psi.amplitudes)


@pytest.mark.parametrize("w", [1, 2, 4, 8])
def test_gather_scatter_identity(rng, w):
    psi = random_state(6, rng)
    np.testing.assert_array_equal(gather(scatter(psi, w)).amplitudes, psi.amplitudes)


def test_gather_rejects_inconsistent(rng):
    s = scatter(random_state(4, rng), 4)
    with pytest.raises(LayoutError):
        gather(s[:3])
    with pytest.raises(LayoutError):
        gather([s[1], s[0], s[2], s[3]])


def test_low_qubit_gate_is_local(rng):
    comm = Communicator()
    state = PartitionedState(scatter(random_state(6, rng), 4), comm)
    apply_pauli_rotation_distributed(state, "ZXYIZI", 0.3)  # qubits 0..3 are local, 4..5 select the rank
    assert comm.bytes_exchanged == 0
    apply_pauli_rotation_distributed(state, "IIIIZZ", 0.3)  # high Z is a per-rank sign
    assert comm.bytes_exchanged == 0


@pytest.mark.parametrize("wire", [False, True])
def test_high_qubit_x_matches_local(rng, wire):
    psi = random_state(6, rng)
    comm = Communicator(wire=wire)
    state = PartitionedState(scatter(psi, 2), comm)
    apply_pauli_rotation_distributed(state, "IIIIIX", 1.1)
    psi_ref = psi.copy()
    apply_pauli_rotation(psi_ref, "IIIIIX", 1.1)
    np.testing.assert_allclose(state.gather().amplitudes, psi_ref.amplitudes, atol=1e-12)
    assert comm.bytes_exchanged == 2 * 16 * 32


def test_failed_exchange_leaves_slices_untouched(rng):
    psi = random_state(5, rng)
    state = PartitionedState(scatter(psi, 4), Communicator(fail_after=0))
    before = [s.amplitudes.copy() for s in state.slices]
    with pytest.raises(CommunicationError):
        apply_pauli_rotation_distributed(state, "XIIIX", 0.5)
    for b, s in zip(before, state.slices):
        np.testing.assert_array_equal(b, s.amplitudes)


def test_expectation_examples(rng):
    psi = random_state(8, rng)
    terms = [(float(rng.normal()), "".join(rng.choice(list("IXYZ"), 8))) for _ in range(40)]
    h = QubitHamiltonian.from_terms(8, terms, 0.2)
    comm = Communicator()
    state = PartitionedState(scatter(psi, 4), comm)
    assert expectation_distributed(state, h) == pytest.approx(expectation_hamiltonian(psi, h), abs=1e-10)
    comm.reset_counters()
    diag = QubitHamiltonian.from_terms(8, [(0.3, "ZIIIIIIZ"), (-0.2, "IIZIIIZI")])
    assert expectation_distributed(state, diag) == pytest.approx(expectation_hamiltonian(psi, diag), abs=1e-12)
    assert comm.bytes_exchanged == 0
    assert expectation_distributed(state, QubitHamiltonian.from_terms(8, [], 1.25)) == pytest.approx(1.25)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4, 8]))
def test_engines_agree(seed, w):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    local, part = LocalEngine(), PartitionedEngine(w)
    a = local.basis_state(n, int(rng.integers(2**n)))
    idx = int(np.flatnonzero(a.amplitudes)[0])
    b = part.basis_state(n, idx)
    for _ in range(int(rng.integers(1, 20))):
        p = "".join(rng.choice(list("IXYZ"), n))
        t = float(rng.uniform(-np.pi, np.pi))
        local.rotate(a, p, t)
        part.rotate(b, p, t)
    np.testing.assert_allclose(part.to_vector(b).amplitudes, a.amplitudes, atol=1e-12)
    assert abs(b.norm_squared() - 1) < 1e-10
