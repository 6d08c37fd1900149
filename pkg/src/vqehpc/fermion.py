"""Electronic-structure integrals to a qubit Hamiltonian.

FCIDUMP integrals -> second-quantized operator -> Jordan-Wigner Pauli sum.

Spin orbitals are interleaved: spatial orbital ``i`` (0-based) owns qubit
``2i`` (alpha) and ``2i + 1`` (beta).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .pauli import QubitHamiltonian, pauli_multiply

JW_IMAG_TOL = 1e-12


class FcidumpError(ValueError):
    pass


class NonHermitianError(ValueError):
    pass


def _two_body_canonical(i: int, j: int, k: int, l: int) -> tuple[int, int, int, int]:
    # 8-fold real-orbital symmetry: (ij|kl) = (ji|kl) = (ij|lk) = (kl|ij) = ...
    a, b = max(i, j), min(i, j)
    c, d = max(k, l), min(k, l)
    if (a, b) < (c, d):
        a, b, c, d = c, d, a, b
    return a, b, c, d


@dataclass(frozen=True)
class IntegralTable:
    """Integrals over spatial orbitals; indices are 1-based as in FCIDUMP.

    ``one_body`` and ``two_body`` store one canonical representative per
    symmetry class; use :meth:`h1` / :meth:`h2` or the dense accessors to
    read with symmetry applied.  ``two_body`` is chemist notation (pq|rs).
    """

    n_spatial_orbitals: int
    n_electrons: int
    core_energy: float = 0.0
    one_body: dict[tuple[int, int], float] = field(default_factory=dict)
    two_body: dict[tuple[int, int, int, int], float] = field(default_factory=dict)
    ms2: int = 0

    def h1(self, p: int, q: int) -> float:
        return self.one_body.get((max(p, q), min(p, q)), 0.0)

    def h2(self, p: int, q: int, r: int, s: int) -> float:
        return self.two_body.get(_two_body_canonical(p, q, r, s), 0.0)

    def one_body_matrix(self) -> np.ndarray:
        n = self.n_spatial_orbitals
        m = np.zeros((n, n))
        for (p, q), v in self.one_body.items():
            m[p - 1, q - 1] = m[q - 1, p - 1] = v
        return m

    def two_body_tensor(self) -> np.ndarray:
        """Dense chemist-notation tensor ``g[p,q,r,s] = (pq|rs)``, 0-based."""
        n = self.n_spatial_orbitals
        g = np.zeros((n, n, n, n))
        for (i, j, k, l), v in self.two_body.items():
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in (
                (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
            ):
                g[a, b, c, d] = v
        return g


_NAMELIST_INT = re.compile(r"\b(NORB|NELEC|MS2)\s*=\s*(-?\d+)", re.IGNORECASE)


def parse_fcidump(text: str) -> IntegralTable:
    """Parse FCIDUMP text (namelist header, then ``value i j k l`` lines)."""
    lines = text.splitlines()
    header = []
    body_start = None
    for n, line in enumerate(lines):
        header.append(line)
        if re.search(r"&END|^\s*/\s*$", line, re.IGNORECASE):
            body_start = n + 1
            break
    if body_start is None:
        raise FcidumpError("namelist header not terminated by &END or /")
    fields = {k.upper(): int(v) for k, v in _NAMELIST_INT.findall(" ".join(header))}
    for key in ("NORB", "NELEC"):
        if key not in fields:
            raise FcidumpError(f"missing {key} in header")
    norb = fields["NORB"]
    core = 0.0
    one: dict[tuple[int, int], float] = {}
    two: dict[tuple[int, int, int, int], float] = {}
    for lineno in range(body_start, len(lines)):
        parts = lines[lineno].split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"line {lineno + 1}: expected 5 fields, got {len(parts)}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {lineno + 1}: malformed numeric field") from exc
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise FcidumpError(f"line {lineno + 1}: index out of range 0..{norb}")
        if i == j == k == l == 0:
            core = value
        elif k == l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"line {lineno + 1}: bad one-body indices {i} {j}")
            one[(max(i, j), min(i, j))] = value
        else:
            if 0 in (i, j, k, l):
                # orbital energies (i 0 0 0) and similar records carry nothing we use
                continue
            two[_two_body_canonical(i, j, k, l)] = value
    return IntegralTable(norb, fields["NELEC"], core, one, two, fields.get("MS2", 0))


def read_fcidump(path: str | Path) -> IntegralTable:
    return parse_fcidump(Path(path).read_text())


# -- fermion operators --------------------------------------------------------

Ladder = tuple[int, bool]  # (spin-orbital index, is_creation)


def _normal_order(ops: tuple[Ladder, ...], coeff: float) -> dict[tuple[Ladder, ...], float]:
    """Normal-order one product: creations first, each group by descending index."""
    out: dict[tuple[Ladder, ...], float] = {}
    stack = [(list(ops), coeff)]
    while stack:
        term, c = stack.pop()
        if c == 0:
            continue
        zero = False
        # insertion sort with anticommutation; {a_i, a_j^dag} = delta_ij
        for i in range(1, len(term)):
            for j in range(i, 0, -1):
                left, right = term[j - 1], term[j]
                if not left[1] and right[1]:
                    if left[0] == right[0]:
                        stack.append((term[: j - 1] + term[j + 1 :], c))
                    term[j - 1], term[j] = right, left
                    c = -c
                elif left[1] == right[1]:
                    if left[0] == right[0]:
                        zero = True
                        break
                    if left[0] < right[0]:
                        term[j - 1], term[j] = right, left
                        c = -c
                    else:
                        break
                else:
                    break
            if zero:
                break
        if not zero:
            key = tuple(term)
            out[key] = out.get(key, 0.0) + c
    return out


class FermionOperator:
    """Sum of normal-ordered ladder-operator products with real coefficients.

    ``terms`` maps a tuple of ``(index, is_creation)`` pairs to its
    coefficient; the empty tuple is the scalar part.
    """

    def __init__(self, terms: dict[tuple[Ladder, ...], float] | None = None):
        self.terms: dict[tuple[Ladder, ...], float] = {}
        for ops, c in (terms or {}).items():
            self.add(ops, c)

    def add(self, ops, coeff: float) -> None:
        for key, c in _normal_order(tuple((int(i), bool(d)) for i, d in ops), coeff).items():
            self.terms[key] = self.terms.get(key, 0.0) + c

    @classmethod
    def product(cls, ops, coeff: float = 1.0) -> "FermionOperator":
        f = cls()
        f.add(ops, coeff)
        return f

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        out = FermionOperator(self.terms)
        for ops, c in other.terms.items():
            out.terms[ops] = out.terms.get(ops, 0.0) + c
        return out

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other * -1.0

    def __mul__(self, scalar: float) -> "FermionOperator":
        return FermionOperator({k: v * scalar for k, v in self.terms.items()})

    __rmul__ = __mul__

    def dagger(self) -> "FermionOperator":
        return FermionOperator(
            {tuple((i, not d) for i, d in reversed(ops)): c for ops, c in self.terms.items()}
        )

    @property
    def constant(self) -> float:
        return self.terms.get((), 0.0)

    def n_modes(self) -> int:
        idx = [i for ops in self.terms for i, _ in ops]
        return max(idx) + 1 if idx else 0

    def __repr__(self) -> str:
        return f"FermionOperator({len(self.terms)} terms)"


def assemble_fermion_hamiltonian(t: IntegralTable) -> FermionOperator:
    """Spin-orbital Hamiltonian from spatial integrals.

    H = core + Σ h_pq a†_P a_Q + ½ Σ h_PQRS a†_P a†_Q a_R a_S

    Chemist (pq|rs) to physicist index map, spatial p,q,r,s and spins σ,τ:
        P = (p, σ), Q = (r, τ), R = (s, τ), S = (q, σ),  h_PQRS = (pq|rs)
    i.e. electron 1 moves q -> p keeping σ, electron 2 moves s -> r keeping τ.
    """
    n = t.n_spatial_orbitals
    h1 = t.one_body_matrix()
    g = t.two_body_tensor()
    f = FermionOperator()
    if t.core_energy:
        f.add((), t.core_energy)
    for p in range(n):
        for q in range(n):
            if h1[p, q] == 0:
                continue
            for sigma in (0, 1):
                f.add(((2 * p + sigma, True), (2 * q + sigma, False)), h1[p, q])
    for p, q, r, s in zip(*np.nonzero(g)):
        v = 0.5 * g[p, q, r, s]
        for sigma in (0, 1):
            for tau in (0, 1):
                P, Q = 2 * p + sigma, 2 * r + tau
                R, S = 2 * s + tau, 2 * q + sigma
                if P == Q or R == S:
                    continue
                f.add(((P, True), (Q, True), (R, False), (S, False)), v)
    f.terms = {k: v for k, v in f.terms.items() if v != 0.0}
    return f


@lru_cache(maxsize=None)
def _jw_ladder(index: int, creation: bool, n: int) -> tuple[tuple[complex, str], ...]:
    # a†_j -> ½(X_j - iY_j) Z_{<j};  a_j -> ½(X_j + iY_j) Z_{<j}
    z = "Z" * index
    rest = "I" * (n - index - 1)
    s = -0.5j if creation else 0.5j
    return ((0.5, z + "X" + rest), (s, z + "Y" + rest))


def jordan_wigner_terms(f: FermionOperator, n_qubits: int | None = None) -> dict[str, complex]:
    """Complex Pauli expansion of any fermion operator (no Hermiticity check)."""
    n = max(f.n_modes(), 1) if n_qubits is None else n_qubits
    acc: dict[str, complex] = {}
    for ops, coeff in f.terms.items():
        partial = {"I" * n: complex(coeff)}
        for idx, dag in ops:
            nxt: dict[str, complex] = {}
            for s1, c1 in partial.items():
                for c2, s2 in _jw_ladder(idx, dag, n):
                    ph, s = pauli_multiply(s1, s2)
                    nxt[s] = nxt.get(s, 0) + c1 * c2 * ph
            partial = nxt
        for s, c in partial.items():
            acc[s] = acc.get(s, 0) + c
    return acc


def jordan_wigner(f: FermionOperator, n_qubits: int | None = None) -> QubitHamiltonian:
    """Hermitian fermion operator to a real-weighted Pauli sum.

    Imaginary residues (and real cancellation noise) below ``JW_IMAG_TOL``
    are dropped; a larger imaginary part means the input was not Hermitian.
    """
    n = f.n_modes() if n_qubits is None else n_qubits
    if n_qubits is not None and f.n_modes() > n_qubits:
        raise ValueError(f"operator acts on {f.n_modes()} modes, only {n_qubits} qubits")
    acc = jordan_wigner_terms(f, max(n, 1)) if f.terms else {}
    terms = []
    offset = 0.0
    for s, c in acc.items():
        if abs(c.imag) > JW_IMAG_TOL:
            raise NonHermitianError(f"imaginary coefficient {c} on {s}")
        if abs(c.real) <= JW_IMAG_TOL:
            continue
        if n == 0 or set(s) == {"I"}:
            offset += c.real
        else:
            terms.append((c.real, s))
    return QubitHamiltonian.from_terms(n, terms, offset)


def hf_reference_index(n_qubits: int, n_electrons: int) -> int:
    """Basis index with the ``n_electrons`` lowest spin orbitals occupied."""
    if n_electrons > n_qubits:
        raise ValueError(f"{n_electrons} electrons do not fit in {n_qubits} qubits")
    if n_electrons < 0:
        raise ValueError("negative electron count")
    return (1 << n_electrons) - 1


def qubit_hamiltonian_from_fcidump(path: str | Path) -> tuple[QubitHamiltonian, IntegralTable]:
    t = read_fcidump(path)
    return jordan_wigner(assemble_fermion_hamiltonian(t), 2 * t.n_spatial_orbitals), t
