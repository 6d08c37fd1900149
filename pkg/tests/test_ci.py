import numpy as np
import pytest

from vqehpc.ci import apply_excitation, exact_diagonalize
from vqehpc.fermion import hf_reference_index, qubit_hamiltonian_from_fcidump
from vqehpc.pauli import QubitHamiltonian
from vqehpc.statevector import expectation_hamiltonian, init_basis_state

from conftest import fixture_path
from oracles import hamiltonian_dense, sector_ground_energy

FIXTURES = ["h2_sto3g", "h2_631g", "h4_sto3g", "lih_cas3"]


@pytest.fixture(scope="module")
def problems():
    return {name: qubit_hamiltonian_from_fcidump(fixture_path(name)) for name in FIXTURES}


def test_single_z():
    e, _ = exact_diagonalize(QubitHamiltonian.from_terms(1, [(1.0, "Z")]), None, "FCI")
    assert e == pytest.approx(-1.0)


def test_offset_only():
    e, cisd = exact_diagonalize(QubitHamiltonian.from_terms(2, [], 0.75), 1, "FCI")
    assert e == pytest.approx(0.75)
    assert cisd.reference_coefficient == pytest.approx(1.0)


@pytest.mark.parametrize("name", FIXTURES)
def test_fci_matches_reference(problems, reference_energies, name):
    h, t = problems[name]
    e, _ = exact_diagonalize(h, t.n_electrons, "FCI")
    assert e == pytest.approx(reference_energies[name]["fci"], abs=1e-9)


@pytest.mark.parametrize("name", ["h2_sto3g", "h2_631g", "h4_sto3g"])
def test_cisd_matches_reference_and_ordering(problems, reference_energies, name):
    h, t = problems[name]
    ref = reference_energies[name]
    e_cisd, cisd = exact_diagonalize(h, t.n_electrons, "CISD")
    e_fci, _ = exact_diagonalize(h, t.n_electrons, "FCI")
    e_hf = expectation_hamiltonian(init_basis_state(h.n_qubits, hf_reference_index(h.n_qubits, t.n_electrons)), h)
    assert e_cisd == pytest.approx(ref["cisd"], abs=1e-9)
    assert e_hf == pytest.approx(ref["hf"], abs=1e-9)
    assert e_fci <= e_cisd + 1e-12 <= e_hf + 2e-12
    norm = cisd.reference_coefficient**2 + sum(c * c for c in cisd.singles.values()) + sum(c * c for c in cisd.doubles.values())
    assert norm == pytest.approx(1.0, abs=1e-10)
    assert cisd.reference_coefficient > 0


def test_two_electron_cisd_equals_fci(problems):
    h, t = problems["h2_sto3g"]
    assert exact_diagonalize(h, 2, "CISD")[0] == pytest.approx(exact_diagonalize(h, 2, "FCI")[0], abs=1e-12)


def test_dense_sector_oracle(problems):
    h, t = problems["lih_cas3"]
    m = hamiltonian_dense(h.n_qubits, [(w.weight, w.string) for w in h.terms], h.offset).real
    assert exact_diagonalize(h, 2, "FCI")[0] == pytest.approx(sector_ground_energy(m, 6, 2, 0), abs=1e-10)


def test_amplitudes_reconstruct_eigenvector(problems):
    # rebuilding psi from the stored excitation amplitudes gives the eigenvector
    h, t = problems["h4_sto3g"]
    e, cisd = exact_diagonalize(h, 4, "CISD")
    ref = hf_reference_index(8, 4)
    psi = np.zeros(256)
    psi[ref] = cisd.reference_coefficient
    for (p, q), c in cisd.singles.items():
        sign, det = apply_excitation(ref, (p,), (q,))
        psi[det] += sign * c
    for (p, q, r, s), c in cisd.doubles.items():
        sign, det = apply_excitation(ref, (p, q), (r, s))
        psi[det] += sign * c
    m = h.to_matrix().real
    assert psi @ psi == pytest.approx(1.0, abs=1e-12)
    assert psi @ m @ psi == pytest.approx(e, abs=1e-10)
    # eigenvector of the Hamiltonian projected onto the CISD determinants
    support = np.flatnonzero(psi)
    np.testing.assert_allclose((m @ psi)[support], e * psi[support], atol=1e-9)


def test_qubit_guard():
    with pytest.raises(ValueError):
        exact_diagonalize(QubitHamiltonian.from_terms(17, [(1.0, "Z" * 17)]), 1)
