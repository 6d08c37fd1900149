"""Exact ground states in a fixed-particle determinant sector (FCI / CISD).

Both modes diagonalize the qubit Hamiltonian restricted to a set of
computational-basis determinants.  The sector keeps the electron count and
the alpha/beta split of the Hartree-Fock reference, so every excitation is
spin-conserving.  CISD further keeps only determinants at most two
excitations away from the reference.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .fermion import hf_reference_index
from .pauli import QubitHamiltonian

MAX_QUBITS = 16
_DENSE_LIMIT = 1500

Single = tuple[int, int]  # (p, q): a†_p a_q, p virtual, q occupied
Double = tuple[int, int, int, int]  # (p, q, r, s): a†_p a†_q a_r a_s, p>q virtual, r>s occupied


@dataclass(frozen=True)
class CisdResult:
    """Ground-state CI vector expressed as excitation amplitudes.

    Each amplitude is ``<HF| T† |psi>`` for the excitation operator ``T`` of
    its key, so ``T|HF>`` carries exactly the coefficient stored here (the
    fermionic sign of the determinant is already folded in).
    """

    reference_coefficient: float
    singles: dict[Single, float] = field(default_factory=dict)
    doubles: dict[Double, float] = field(default_factory=dict)
    energy: float = 0.0
    n_qubits: int = 0
    n_electrons: int = 0
    higher_weight: float = 0.0  # norm² outside {HF, S, D}; zero in CISD mode


def _annihilate(state: int, k: int) -> tuple[int, int]:
    if not state >> k & 1:
        return 0, 0
    sign = -1 if bin(state & ((1 << k) - 1)).count("1") & 1 else 1
    return sign, state ^ (1 << k)


def _create(state: int, k: int) -> tuple[int, int]:
    if state >> k & 1:
        return 0, 0
    sign = -1 if bin(state & ((1 << k) - 1)).count("1") & 1 else 1
    return sign, state | (1 << k)


def apply_excitation(state: int, creations: tuple[int, ...], annihilations: tuple[int, ...]) -> tuple[int, int]:
    """Apply ``a†_c1 a†_c2 ... a_a1 a_a2 ...`` to a determinant; returns (sign, det)."""
    sign = 1
    for k in reversed(annihilations):
        s, state = _annihilate(state, k)
        sign *= s
        if not sign:
            return 0, 0
    for k in reversed(creations):
        s, state = _create(state, k)
        sign *= s
        if not sign:
            return 0, 0
    return sign, state


def _spin_counts(det: int, n_qubits: int) -> tuple[int, int]:
    a = sum(det >> k & 1 for k in range(0, n_qubits, 2))
    b = sum(det >> k & 1 for k in range(1, n_qubits, 2))
    return a, b


def sector_determinants(n_qubits: int, n_electrons: int | None, mode: str = "FCI") -> np.ndarray:
    """Determinant indices of the sector, ascending."""
    if n_electrons is None:
        if mode != "FCI":
            raise ValueError("CISD needs an electron count")
        return np.arange(2**n_qubits, dtype=np.int64)
    ref = hf_reference_index(n_qubits, n_electrons)
    ref_spin = _spin_counts(ref, n_qubits)
    dets = []
    for occ in combinations(range(n_qubits), n_electrons):
        d = sum(1 << k for k in occ)
        if _spin_counts(d, n_qubits) != ref_spin:
            continue
        if mode == "CISD" and bin(d & ~ref).count("1") > 2:
            continue
        dets.append(d)
    return np.array(sorted(dets), dtype=np.int64)


def sector_matrix(h: QubitHamiltonian, dets: np.ndarray):
    """Sparse projection of ``h`` onto the span of ``dets``."""
    dim = len(dets)
    pos = np.full(2**h.n_qubits, -1, dtype=np.int64)
    pos[dets] = np.arange(dim)
    rows, cols, vals = [np.arange(dim)], [np.arange(dim)], [np.full(dim, h.offset, dtype=complex)]
    w, xm, zm, ny = h.compiled()
    for wi, x, z, y in zip(w, xm, zm, ny):
        target = pos[dets ^ x]
        keep = target >= 0
        sign = 1.0 - 2.0 * (np.bitwise_count(dets[keep] & z) & 1)
        rows.append(target[keep])
        cols.append(np.arange(dim)[keep])
        vals.append(wi * (1j**y) * sign)
    m = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    return m


def exact_diagonalize(
    h: QubitHamiltonian, n_electrons: int | None, mode: str = "FCI"
) -> tuple[float, CisdResult]:
    """Lowest eigenpair of ``h`` in the FCI or CISD determinant sector."""
    mode = mode.upper()
    if mode not in ("FCI", "CISD"):
        raise ValueError(f"unknown mode {mode!r}")
    n = h.n_qubits
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the exact-diagonalization guard of {MAX_QUBITS}")
    dets = sector_determinants(n, n_electrons, mode)
    if len(dets) == 0:
        raise ValueError("empty determinant sector")
    m = sector_matrix(h, dets)
    if len(dets) <= _DENSE_LIMIT:
        vals, vecs = np.linalg.eigh(m.toarray())
        e0, v = vals[0], vecs[:, 0]
    else:
        vals, vecs = eigsh(m, k=1, which="SA", tol=1e-12)
        e0, v = vals[0], vecs[:, 0]
    # the sector matrices here are real symmetric; fix the global phase on the largest entry first
    v = v * np.exp(-1j * np.angle(v[np.argmax(np.abs(v))]))
    v = v.real
    v /= np.linalg.norm(v)

    ref = hf_reference_index(n, n_electrons) if n_electrons is not None else 0
    amp = dict(zip(dets.tolist(), v.tolist()))
    c0 = amp.get(ref, 0.0)
    if c0 < 0:
        v = -v
        amp = {k: -a for k, a in amp.items()}
        c0 = -c0
    singles: dict[Single, float] = {}
    doubles: dict[Double, float] = {}
    higher = 0.0
    for det, a in amp.items():
        if det == ref:
            continue
        created = [k for k in range(n) if (det & ~ref) >> k & 1]
        removed = [k for k in range(n) if (ref & ~det) >> k & 1]
        if len(created) != len(removed):  # full-space mode: other particle numbers
            higher += a * a
        elif len(created) == 1:
            (p,), (q,) = created, removed
            sign, _ = apply_excitation(ref, (p,), (q,))
            singles[(p, q)] = sign * a
        elif len(created) == 2:
            q, p = created  # ascending -> p > q
            s, r = removed
            sign, _ = apply_excitation(ref, (p, q), (r, s))
            doubles[(p, q, r, s)] = sign * a
        else:
            higher += a * a
    return float(e0), CisdResult(c0, singles, doubles, float(e0), n, n_electrons or 0, higher)
