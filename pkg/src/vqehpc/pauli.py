"""Pauli strings, weighted qubit Hamiltonians, ordering and truncation.

A Pauli string is stored as a plain ``str`` over ``"IXYZ"``; character ``k``
acts on qubit ``k``.  Hamiltonians are immutable and hold the all-identity
coefficient separately as ``offset`` so that truncation never touches it.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, NamedTuple

import numpy as np

AXES = "IXYZ"

# single-qubit products: (a, b) -> (power of i, a*b)
_TABLE: dict[tuple[str, str], tuple[int, str]] = {}
for _a in AXES:
    _TABLE[("I", _a)] = (0, _a)
    _TABLE[(_a, "I")] = (0, _a)
for _a in "XYZ":
    _TABLE[(_a, _a)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _TABLE[(_a, _b)] = (1, _c)
    _TABLE[(_b, _a)] = (3, _c)

_PHASES = (1, 1j, -1, -1j)

_STRING_RE = re.compile(r"^[IXYZ]*$")


class PauliError(ValueError):
    pass


def check_string(s: str, n_qubits: int | None = None) -> str:
    if not isinstance(s, str) or not _STRING_RE.match(s):
        raise PauliError(f"not a Pauli string: {s!r}")
    if n_qubits is not None and len(s) != n_qubits:
        raise PauliError(f"length mismatch: {s!r} has {len(s)} axes, expected {n_qubits}")
    return s


def identity(n_qubits: int) -> str:
    return "I" * n_qubits


def single(n_qubits: int, qubit: int, axis: str) -> str:
    """``axis`` on ``qubit``, identity elsewhere."""
    return "I" * qubit + axis + "I" * (n_qubits - qubit - 1)


def pauli_multiply(a: str, b: str) -> tuple[complex, str]:
    """Product ``a·b`` as ``(phase, string)`` with phase in {1, -1, 1j, -1j}."""
    if len(a) != len(b):
        raise PauliError(f"length mismatch: {len(a)} vs {len(b)}")
    power = 0
    out = []
    for x, y in zip(a, b):
        p, c = _TABLE[(x, y)]
        power += p
        out.append(c)
    phase = _PHASES[power % 4]
    return phase, "".join(out)


def masks(s: str) -> tuple[int, int, int]:
    """Bit masks ``(x_mask, z_mask, n_y)`` for engine kernels.

    ``x_mask`` marks X and Y axes (bit flips), ``z_mask`` marks Z and Y axes
    (phase flips); Y = i·X·Z contributes the extra ``i**n_y``.
    """
    xm = zm = ny = 0
    for k, c in enumerate(s):
        if c == "X":
            xm |= 1 << k
        elif c == "Y":
            xm |= 1 << k
            zm |= 1 << k
            ny += 1
        elif c == "Z":
            zm |= 1 << k
    return xm, zm, ny


_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def string_matrix(s: str) -> np.ndarray:
    """Dense matrix of a Pauli string (qubit k is bit k of the basis index)."""
    m = np.ones((1, 1), dtype=complex)
    # kron puts its first factor on the most significant bit
    for c in reversed(s):
        m = np.kron(m, _PAULI_MATS[c])
    return m


class PauliTerm(NamedTuple):
    weight: float
    string: str


def _sort_key(t: PauliTerm) -> tuple[float, str]:
    # "IXYZ" is already alphabetical, so plain str order is I<X<Y<Z
    return (-abs(t.weight), t.string)


@dataclass(frozen=True)
class QubitHamiltonian:
    """``offset·I + Σ weight·string`` over ``n_qubits`` qubits."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()
    offset: float = 0.0
    _compiled: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @classmethod
    def from_terms(
        cls, n_qubits: int, terms: Iterable[tuple[float, str]], offset: float = 0.0
    ) -> "QubitHamiltonian":
        """Merge duplicate strings, fold the all-I term into the offset, drop zeros."""
        merged: dict[str, float] = {}
        ident = identity(n_qubits)
        offset = float(offset)
        for w, s in terms:
            check_string(s, n_qubits)
            w = float(w)
            if not math.isfinite(w):
                raise PauliError(f"non-finite weight {w} on {s}")
            if s == ident:
                offset += w
            else:
                merged[s] = merged.get(s, 0.0) + w
        out = tuple(PauliTerm(w, s) for s, w in merged.items() if w != 0.0)
        return cls(n_qubits, out, offset)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms], dtype=float)

    def compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Cached ``(weights, x_masks, z_masks, n_y)`` arrays for the engines."""
        c = self._compiled.get("masks")
        if c is None:
            ms = [masks(t.string) for t in self.terms]
            c = (
                self.weights,
                np.array([m[0] for m in ms], dtype=np.int64),
                np.array([m[1] for m in ms], dtype=np.int64),
                np.array([m[2] for m in ms], dtype=np.int64),
            )
            self._compiled["masks"] = c
        return c

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        m = self.offset * np.eye(dim, dtype=complex)
        for w, s in self.terms:
            m += w * string_matrix(s)
        return m

    def to_sparse(self):
        """CSR matrix built from the bit masks (no dense intermediate)."""
        from scipy import sparse

        dim = 2**self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, vals = [idx], [idx], [np.full(dim, self.offset, dtype=complex)]
        w, xm, zm, ny = self.compiled()
        for wi, x, z, y in zip(w, xm, zm, ny):
            # P|c> = i^ny (-1)^{popcount(c & z)} |c ^ x>
            sign = 1.0 - 2.0 * (np.bitwise_count(idx & z) & 1)
            rows.append(idx ^ x)
            cols.append(idx)
            vals.append(wi * (1j**y) * sign)
        m = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        )
        return m.tocsr()


def sort_terms(h: QubitHamiltonian) -> QubitHamiltonian:
    """Order by descending ``|weight|``, ties by axis string (I<X<Y<Z)."""
    return QubitHamiltonian(h.n_qubits, tuple(sorted(h.terms, key=_sort_key)), h.offset)


def cutoff_by_threshold(h: QubitHamiltonian, th1: float) -> QubitHamiltonian:
    """Keep terms with ``|weight| > th1``; the offset is never cut."""
    if th1 < 0:
        raise PauliError(f"negative threshold {th1}")
    kept = tuple(t for t in h.terms if abs(t.weight) > th1)
    return QubitHamiltonian(h.n_qubits, kept, h.offset)


def retained_count(n_terms: int, ratio: float) -> int:
    # n*ratio through Decimal so 7*0.5 and 10*0.7 round as written, not as binary floats
    return int((Decimal(n_terms) * Decimal(repr(ratio))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def retain_fraction(h: QubitHamiltonian, ratio: float) -> QubitHamiltonian:
    """Keep the leading ``round_half_up(N·ratio)`` terms of a sorted Hamiltonian."""
    if not 0.0 <= ratio <= 1.0:
        raise PauliError(f"ratio {ratio} outside [0, 1]")
    k = retained_count(len(h.terms), ratio)
    return QubitHamiltonian(h.n_qubits, h.terms[:k], h.offset)


def tail_weight(h: QubitHamiltonian, th1: float) -> float:
    """Σ|w| over the terms ``cutoff_by_threshold(h, th1)`` would drop."""
    return float(sum(abs(t.weight) for t in h.terms if abs(t.weight) <= th1))


# -- text format ------------------------------------------------------------


def format_hamiltonian(h: QubitHamiltonian) -> str:
    lines = [f"qubits: {h.n_qubits}", f"offset: {h.offset!r}"]
    lines += [f"{t.weight!r} {t.string}" for t in h.terms]
    return "\n".join(lines) + "\n"


def parse_hamiltonian(text: str) -> QubitHamiltonian:
    """Inverse of :func:`format_hamiltonian`; ``#`` starts a comment."""
    n_qubits = None
    offset = 0.0
    terms: list[tuple[float, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition(":")
        try:
            if sep and key.strip() == "qubits":
                n_qubits = int(val)
                continue
            if sep and key.strip() == "offset":
                offset = float(val)
                continue
            coeff, s = line.split()
            terms.append((float(coeff), s))
        except ValueError as exc:
            raise PauliError(f"line {lineno}: cannot parse {raw!r}") from exc
    if n_qubits is None:
        raise PauliError("missing 'qubits:' header")
    return QubitHamiltonian.from_terms(n_qubits, terms, offset)
