"""Full state-vector simulator restricted to basis preparation and Pauli rotations.

Basis index bit ``k`` is qubit ``k``.  A Pauli string acts through bit masks:

    P|c> = i**n_y * (-1)**popcount(c & z_mask) * |c ^ x_mask>

so no gate matrices are ever built.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .pauli import PauliError, QubitHamiltonian, check_string, masks

EXPECTATION_IMAG_TOL = 1e-12
_PHASE = (1, 1j, -1, -1j)


def parity_sign(idx: np.ndarray, mask: int) -> np.ndarray:
    """``(-1)**popcount(idx & mask)`` as float64."""
    return 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)


class StateVector:
    """``2**n`` complex128 amplitudes.  One writer at a time; gates mutate in place."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(2**n_qubits, dtype=np.complex128)
            amplitudes[0] = 1.0
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (2**n_qubits,):
            raise ValueError(f"expected {2**n_qubits} amplitudes, got {amplitudes.shape}")
        self.amplitudes = amplitudes
        self._idx = np.arange(2**n_qubits, dtype=np.int64)

    @property
    def memory_bytes(self) -> int:
        return amplitude_bytes(self.n_qubits)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


def amplitude_bytes(n_qubits: int) -> int:
    """Bytes of amplitude storage: 16 per complex double, ``2**(n + 4)``."""
    return 1 << (n_qubits + 4)


def init_basis_state(n_qubits: int, index: int) -> StateVector:
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    a = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return StateVector(n_qubits, a / np.linalg.norm(a))


def _check(psi: StateVector, p: str) -> None:
    check_string(p)
    if len(p) != psi.n_qubits:
        raise PauliError(f"string of length {len(p)} on a {psi.n_qubits}-qubit state")


def apply_pauli(psi: StateVector, p: str) -> np.ndarray:
    """Return ``P psi`` as a new array (``psi`` untouched)."""
    _check(psi, p)
    xm, zm, ny = masks(p)
    return _apply_masks(psi.amplitudes, psi._idx, xm, zm, ny)


def _apply_masks(amps: np.ndarray, idx: np.ndarray, xm: int, zm: int, ny: int) -> np.ndarray:
    # (P psi)[c] = i^ny (-1)^{popcount((c^x) & z)} psi[c ^ x]
    src = idx ^ xm if xm else idx
    out = amps[src] if xm else amps.copy()
    if zm:
        out *= parity_sign(src, zm)
    if ny % 4:
        out *= _PHASE[ny % 4]
    return out


def apply_pauli_rotation(psi: StateVector, p: str, theta: float) -> None:
    """``psi <- exp(-i theta/2 P) psi`` in place."""
    _check(psi, p)
    xm, zm, ny = masks(p)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    a = psi.amplitudes
    if xm == 0:
        # diagonal: P = ±1 per basis state, no partner amplitudes needed
        if zm == 0:
            a *= complex(c, -s)
        else:
            sign = parity_sign(psi._idx, zm)
            a *= c - 1j * s * sign
        return
    pa = _apply_masks(a, psi._idx, xm, zm, ny)
    a *= c
    a += (-1j * s) * pa


def expectation_pauli(psi: StateVector, p: str) -> float:
    """``<psi|P|psi>``; the imaginary residue is asserted tiny and dropped."""
    _check(psi, p)
    xm, zm, ny = masks(p)
    return _expectation_masks(psi.amplitudes, psi._idx, xm, zm, ny)


def _expectation_masks(amps, idx, xm, zm, ny) -> float:
    if xm == 0:
        prob = amps.real**2 + amps.imag**2
        val = float(np.dot(prob, parity_sign(idx, zm))) if zm else float(prob.sum())
        return val
    v = complex(np.vdot(amps, _apply_masks(amps, idx, xm, zm, ny)))
    if abs(v.imag) > EXPECTATION_IMAG_TOL * max(1.0, float(np.vdot(amps, amps).real)):
        raise ArithmeticError(f"non-real Pauli expectation {v}")
    return v.real


def expectation_hamiltonian(psi: StateVector, h: QubitHamiltonian) -> float:
    """``offset + Σ w_i <P_i>``, summed in term order."""
    if h.n_qubits != psi.n_qubits:
        raise PauliError(f"{h.n_qubits}-qubit Hamiltonian on a {psi.n_qubits}-qubit state")
    return h.offset + float(np.dot(h.weights, pauli_expectations(psi.amplitudes, psi._idx, h)))


def pauli_expectations(amps: np.ndarray, idx: np.ndarray, h: QubitHamiltonian) -> np.ndarray:
    """Per-term ``Σ_c conj(a[c]) (P a)[c]`` over a full vector.

    Terms sharing an X mask reuse one ``conj(a) * a[c ^ x]`` product, which is
    where the time goes for chemistry Hamiltonians.
    """
    w, xms, zms, nys = h.compiled()
    out = np.empty(len(w))
    prob = None
    groups: dict[int, np.ndarray] = {}
    for k, (xm, zm, ny) in enumerate(zip(xms.tolist(), zms.tolist(), nys.tolist())):
        if xm == 0:
            if prob is None:
                prob = amps.real**2 + amps.imag**2
            out[k] = np.dot(prob, parity_sign(idx, zm))
            continue
        prod = groups.get(xm)
        if prod is None:
            prod = groups[xm] = np.conj(amps) * amps[idx ^ xm]
        # sign is evaluated on the source index c ^ x
        val = complex(np.dot(prod, parity_sign(idx ^ xm, zm))) * _PHASE[ny % 4]
        out[k] = val.real
    return out


# -- debug dump -------------------------------------------------------------


def dump_amplitudes(psi: StateVector, path: str | Path) -> None:
    """8-byte little-endian qubit count, then 2**n little-endian complex128."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", psi.n_qubits))
        fh.write(psi.amplitudes.astype("<c16").tobytes())


def load_amplitudes(path: str | Path) -> StateVector:
    data = Path(path).read_bytes()
    (n,) = struct.unpack_from("<Q", data)
    body = np.frombuffer(data, dtype="<c16", offset=8)
    if len(body) != 2**n:
        raise ValueError(f"dump holds {len(body)} amplitudes, header says {n} qubits")
    return StateVector(n, body.astype(np.complex128))
