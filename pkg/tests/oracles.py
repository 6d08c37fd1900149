"""Reference implementations that share no code with the package.

Each oracle is built the slow, obvious way: explicit loops over basis
states, dense matrices, brute-force enumeration.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_dense(s: str) -> np.ndarray:
    """Matrix of a Pauli string with character k acting on bit k of the basis index."""
    n = len(s)
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        for row in range(dim):
            v = 1.0 + 0j
            for k, ch in enumerate(s):
                v *= _SINGLE[ch][(row >> k) & 1, (col >> k) & 1]
                if v == 0:
                    break
            m[row, col] = v
    return m


def hamiltonian_dense(n_qubits: int, terms, offset: float = 0.0) -> np.ndarray:
    m = offset * np.eye(2**n_qubits, dtype=complex)
    for w, s in terms:
        m += w * pauli_dense(s)
    return m


def annihilator(j: int, n_modes: int) -> np.ndarray:
    """``a_j`` on the occupation-number basis; the sign counts occupied modes below j."""
    dim = 2**n_modes
    a = np.zeros((dim, dim))
    for occ in range(dim):
        if not (occ >> j) & 1:
            continue
        below = bin(occ & ((1 << j) - 1)).count("1")
        a[occ ^ (1 << j), occ] = (-1) ** below
    return a


def fock_operator(terms: dict, n_modes: int) -> np.ndarray:
    """Dense matrix of ``Σ c · Π ops`` with ops given as ``(mode, is_creation)``."""
    ann = [annihilator(j, n_modes) for j in range(n_modes)]
    dim = 2**n_modes
    total = np.zeros((dim, dim), dtype=complex)
    for ops, c in terms.items():
        m = np.eye(dim, dtype=complex)
        for j, dag in ops:
            m = m @ (ann[j].T if dag else ann[j])
        total += c * m
    return total


def molecular_hamiltonian_dense(core, h1, g) -> np.ndarray:
    """Textbook second-quantized Hamiltonian from spatial integrals (chemist (pq|rs))."""
    n = h1.shape[0]
    modes = 2 * n
    ann = [annihilator(j, modes) for j in range(modes)]
    cre = [a.T for a in ann]
    dim = 2**modes
    H = core * np.eye(dim)
    for p, q in itertools.product(range(n), repeat=2):
        for s in (0, 1):
            H += h1[p, q] * cre[2 * p + s] @ ann[2 * q + s]
    for p, q, r, t in itertools.product(range(n), repeat=4):
        if g[p, q, r, t] == 0:
            continue
        for s1 in (0, 1):
            for s2 in (0, 1):
                H += 0.5 * g[p, q, r, t] * (
                    cre[2 * p + s1] @ cre[2 * r + s2] @ ann[2 * t + s2] @ ann[2 * q + s1]
                )
    return H


def number_operator_dense(n_modes: int) -> np.ndarray:
    return np.diag([bin(c).count("1") for c in range(2**n_modes)]).astype(float)


def sector_ground_energy(H: np.ndarray, n_modes: int, n_electrons: int, sz2: int | None = None) -> float:
    keep = []
    for c in range(2**n_modes):
        if bin(c).count("1") != n_electrons:
            continue
        if sz2 is not None:
            na = sum((c >> (2 * i)) & 1 for i in range(n_modes // 2))
            nb = sum((c >> (2 * i + 1)) & 1 for i in range(n_modes // 2))
            if na - nb != sz2:
                continue
        keep.append(c)
    block = H[np.ix_(keep, keep)]
    return float(np.linalg.eigvalsh(block)[0])


def expm_hermitian_rotation(P: np.ndarray, theta: float) -> np.ndarray:
    """``exp(-i θ/2 P)`` via eigen-decomposition."""
    vals, vecs = np.linalg.eigh(P)
    return vecs @ np.diag(np.exp(-0.5j * theta * vals)) @ vecs.conj().T


def expm_antihermitian(G: np.ndarray, theta: float) -> np.ndarray:
    """``exp(θ G)`` for anti-Hermitian ``G`` through the Hermitian ``iG``."""
    vals, vecs = np.linalg.eigh(1j * G)
    return vecs @ np.diag(np.exp(-1j * theta * vals)) @ vecs.conj().T


def brute_force_plan(bench: dict, n_parallel: int, n_sequential: int, budget: int, p_min: int):
    """Every (p, s) with p·s ≤ budget, filtered to powers of two afterwards."""
    best = None
    for p in range(1, budget + 1):
        for s in range(1, budget // p + 1):
            if p & (p - 1) or s & (s - 1) or p < p_min or p not in bench:
                continue
            t = bench[p] * (math.ceil(n_parallel / s) + n_sequential)
            key = (t, p * s, p)
            if best is None or key < best[0]:
                best = (key, p, s)
    return None if best is None else (best[1], best[2], best[0][0])


def brute_force_scan(energy_at, delta_e: float) -> float:
    """Evaluate all ten retained fractions up front, then apply the stop rule."""
    fractions = [k / 10 for k in range(10, 0, -1)]
    energies = [energy_at(f) for f in fractions]
    for i, e in enumerate(energies):
        if abs(e - energies[0]) >= delta_e:
            return round(fractions[i] + 0.1, 10)
    return 0.1
