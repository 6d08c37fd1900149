"""CI-seeded single/double excitation ansatz.

Each excitation ``T`` becomes the unitary ``exp(θ (T - T†))``.  After the
Jordan-Wigner map the anti-Hermitian generator is ``i Σ b_k P_k`` with
mutually commuting strings, so the gate is exactly a product of Pauli
rotations ``exp(-i φ_k/2 P_k)`` with ``φ_k = -2 b_k θ``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ci import CisdResult
from .engines import LocalEngine
from .fermion import FermionOperator, hf_reference_index, jordan_wigner_terms
from .pauli import QubitHamiltonian, pauli_multiply

_DECOMP_TOL = 1e-12


@dataclass(frozen=True)
class ExcitationOp:
    """``kind`` is ``"S"`` (p <- q) or ``"D"`` (p q <- r s); indices are spin orbitals."""

    kind: str
    indices: tuple[int, ...]
    parameter_index: int = 0

    @property
    def creations(self) -> tuple[int, ...]:
        return self.indices[: len(self.indices) // 2]

    @property
    def annihilations(self) -> tuple[int, ...]:
        return self.indices[len(self.indices) // 2 :]

    def operator(self) -> FermionOperator:
        """``T - T†`` for ``T = a†_p (a†_q) a_r (a_s)``."""
        ops = [(i, True) for i in self.creations] + [(i, False) for i in self.annihilations]
        t = FermionOperator.product(ops)
        return t - t.dagger()


@dataclass(frozen=True)
class AnsatzConfig:
    th2: float = 1e-6

    def __post_init__(self):
        if self.th2 < 0:
            raise ValueError("th2 must be non-negative")


@dataclass(frozen=True)
class AnsatzCircuit:
    n_qubits: int
    n_electrons: int
    gates: tuple[ExcitationOp, ...]
    theta0: tuple[float, ...]
    rotation_decomposition: tuple[tuple[tuple[str, float], ...], ...] = field(repr=False)

    @property
    def n_parameters(self) -> int:
        return len(self.gates)

    @property
    def reference_index(self) -> int:
        return hf_reference_index(self.n_qubits, self.n_electrons)

    def rotation_count(self) -> int:
        return sum(len(d) for d in self.rotation_decomposition)


def select_excitations(cisd: CisdResult, cfg: AnsatzConfig = AnsatzConfig()) -> list[ExcitationOp]:
    """Excitations with nonzero ``|c| >= th2``: singles, then doubles, each by descending ``|c|``."""
    out: list[ExcitationOp] = []
    for kind, table in (("S", cisd.singles), ("D", cisd.doubles)):
        picked = [(k, c) for k, c in table.items() if c != 0.0 and abs(c) >= cfg.th2]
        picked.sort(key=lambda kc: (-abs(kc[1]), kc[0]))
        for key, _ in picked:
            out.append(ExcitationOp(kind, tuple(key), len(out)))
    return out


def initial_parameters(cisd: CisdResult, selected: list[ExcitationOp]) -> np.ndarray:
    """``θ0_i = arctan(c_i / c_0)``: exact amplitude split for an isolated excitation."""
    c0 = cisd.reference_coefficient
    if c0 == 0:
        raise ValueError("reference coefficient is zero; arctan seeding undefined")
    theta = []
    for g in selected:
        table = cisd.singles if g.kind == "S" else cisd.doubles
        theta.append(math.atan(table[g.indices] / c0))
    return np.array(theta, dtype=float)


def _commute(a: str, b: str) -> bool:
    pa, _ = pauli_multiply(a, b)
    pb, _ = pauli_multiply(b, a)
    return pa == pb


def decompose(g: ExcitationOp, n_qubits: int) -> tuple[tuple[str, float], ...]:
    """Pauli rotations ``(string, angle per unit θ)`` realizing ``exp(θ(T - T†))``."""
    if any(not 0 <= i < n_qubits for i in g.indices):
        raise ValueError(f"excitation {g.indices} outside {n_qubits} qubits")
    if len(set(g.indices)) != len(g.indices):
        raise ValueError(f"repeated spin orbital in {g.indices}")
    terms = jordan_wigner_terms(g.operator(), n_qubits)
    out = []
    for s, c in sorted(terms.items()):
        if abs(c) <= _DECOMP_TOL:
            continue
        if abs(c.real) > _DECOMP_TOL:
            raise ArithmeticError(f"generator not anti-Hermitian on {s}: {c}")
        out.append((s, -2.0 * c.imag))
    strings = [s for s, _ in out]
    for i, a in enumerate(strings):
        for b in strings[i + 1 :]:
            if not _commute(a, b):
                raise ArithmeticError(f"non-commuting decomposition terms {a}, {b}")
    return tuple(out)


def build_circuit(
    selected: list[ExcitationOp], n_qubits: int, n_electrons: int, theta0=None
) -> AnsatzCircuit:
    theta0 = np.zeros(len(selected)) if theta0 is None else np.asarray(theta0, dtype=float)
    if theta0.shape != (len(selected),):
        raise ValueError("one initial parameter per excitation required")
    # singles first (rightmost factor acts first); the sort is stable
    pairs = sorted(zip(selected, theta0.tolist()), key=lambda gt: gt[0].kind != "S")
    gates = tuple(ExcitationOp(g.kind, g.indices, i) for i, (g, _) in enumerate(pairs))
    theta0 = tuple(t for _, t in pairs)
    return AnsatzCircuit(
        n_qubits, n_electrons, gates, theta0, tuple(decompose(g, n_qubits) for g in gates)
    )


def circuit_from_cisd(cisd: CisdResult, cfg: AnsatzConfig = AnsatzConfig()) -> AnsatzCircuit:
    selected = select_excitations(cisd, cfg)
    return build_circuit(selected, cisd.n_qubits, cisd.n_electrons, initial_parameters(cisd, selected))


def prepare_state(circ: AnsatzCircuit, theta, engine=None, shift: tuple[int, int, float] | None = None):
    """``U(θ)|HF>`` on ``engine``; ``shift=(gate, term, δ)`` offsets one rotation angle."""
    engine = engine or LocalEngine()
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circ.n_parameters,):
        raise ValueError(f"expected {circ.n_parameters} parameters, got {theta.shape}")
    state = engine.basis_state(circ.n_qubits, circ.reference_index)
    for gi, (t, decomp) in enumerate(zip(theta, circ.rotation_decomposition)):
        for ti, (s, coeff) in enumerate(decomp):
            angle = coeff * t
            if shift is not None and shift[0] == gi and shift[1] == ti:
                angle += shift[2]
            engine.rotate(state, s, angle)
    return state


def energy(circ: AnsatzCircuit, theta, h: QubitHamiltonian, engine=None) -> float:
    engine = engine or LocalEngine()
    return engine.expectation(prepare_state(circ, theta, engine), h)


def parameter_shift_gradient(circ: AnsatzCircuit, theta, h: QubitHamiltonian, engine=None) -> np.ndarray:
    """Analytic ``dE/dθ`` via the ±π/2 shift rule on every constituent rotation."""
    engine = engine or LocalEngine()
    grad = np.zeros(circ.n_parameters)
    for gi, decomp in enumerate(circ.rotation_decomposition):
        for ti, (_, coeff) in enumerate(decomp):
            plus = engine.expectation(prepare_state(circ, theta, engine, (gi, ti, math.pi / 2)), h)
            minus = engine.expectation(prepare_state(circ, theta, engine, (gi, ti, -math.pi / 2)), h)
            grad[gi] += coeff * (plus - minus) / 2
    return grad


# -- dump format ----------------------------------------------------------------


def format_circuit(circ: AnsatzCircuit) -> str:
    lines = [f"ansatz qubits={circ.n_qubits} electrons={circ.n_electrons} gates={len(circ.gates)}"]
    for g, t in zip(circ.gates, circ.theta0):
        lines.append(" ".join([g.kind, *map(str, g.indices), repr(t)]))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> AnsatzCircuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("ansatz"):
        raise ValueError("missing 'ansatz' header")
    head = dict(kv.split("=") for kv in lines[0].split()[1:])
    n, ne, count = int(head["qubits"]), int(head["electrons"]), int(head["gates"])
    selected, theta0 = [], []
    for ln in lines[1:]:
        parts = ln.split()
        kind = parts[0]
        width = {"S": 2, "D": 4}.get(kind)
        if width is None or len(parts) != width + 2:
            raise ValueError(f"bad gate line {ln!r}")
        selected.append(ExcitationOp(kind, tuple(int(x) for x in parts[1 : 1 + width]), len(selected)))
        theta0.append(float(parts[-1]))
    if len(selected) != count:
        raise ValueError(f"header says {count} gates, found {len(selected)}")
    return build_circuit(selected, n, ne, theta0)
