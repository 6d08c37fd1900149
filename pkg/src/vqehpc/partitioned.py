"""State vector split across ``W = 2**k`` emulated ranks.

Rank ``r`` owns the global indices whose top ``k`` bits equal ``r``, i.e. the
contiguous block ``[r << L, (r + 1) << L)`` with ``L = n - k`` local qubits.
Gates whose X/Y axes all sit on local qubits never communicate; an X/Y axis
on a high qubit pairs rank ``r`` with ``r ^ (x_mask >> L)`` and the pair swap
slices before each updates its own block.

Ranks live in one process.  Every inter-rank transfer still goes through a
:class:`Communicator`, which counts bytes and can route messages through the
binary frame codec so the code path is the same one a remote rank would use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliError, QubitHamiltonian, check_string, masks
from .protocol import AmplitudeMessage, decode_frame, encode_frame
from .statevector import _PHASE, StateVector, _apply_masks, parity_sign

AMPLITUDE_BYTES = 16


class LayoutError(ValueError):
    pass


class CommunicationError(RuntimeError):
    pass


def _is_pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def memory_per_worker(n_qubits: int, worker_count: int) -> int:
    """Bytes of amplitudes per worker: ``2**(n - log2 W + 4)``."""
    if not _is_pow2(worker_count):
        raise LayoutError(f"worker count {worker_count} is not a power of two")
    k = worker_count.bit_length() - 1
    if k > n_qubits:
        raise LayoutError(f"{worker_count} workers exceed 2**{n_qubits} amplitudes")
    return 1 << (n_qubits - k + 4)


def min_workers(n_qubits: int, per_worker_budget_bytes: int) -> int:
    """Smallest power-of-two worker count whose slices fit the budget."""
    if per_worker_budget_bytes < AMPLITUDE_BYTES:
        raise ValueError("budget below one amplitude")
    w = 1
    while memory_per_worker(n_qubits, w) > per_worker_budget_bytes:
        w *= 2
    return w


@dataclass(frozen=True)
class PartitionLayout:
    n_qubits: int
    worker_count: int
    rank: int

    def __post_init__(self):
        if not _is_pow2(self.worker_count):
            raise LayoutError(f"worker count {self.worker_count} is not a power of two")
        if self.worker_count > 2**self.n_qubits:
            raise LayoutError("more workers than amplitudes")
        if not 0 <= self.rank < self.worker_count:
            raise LayoutError(f"rank {self.rank} outside [0, {self.worker_count})")

    @property
    def high_qubits(self) -> int:
        return self.worker_count.bit_length() - 1

    @property
    def local_qubits(self) -> int:
        return self.n_qubits - self.high_qubits

    @property
    def slice_length(self) -> int:
        return 1 << self.local_qubits

    @property
    def start(self) -> int:
        return self.rank << self.local_qubits


@dataclass
class LocalSlice:
    layout: PartitionLayout
    amplitudes: np.ndarray


class Communicator:
    """Pairwise amplitude exchange between in-process ranks.

    ``wire=True`` pushes every message through ``encode_frame``/``decode_frame``.
    ``fail_after`` injects a failure after that many successful exchanges
    (used to test that a failed gate leaves the slices untouched).
    """

    def __init__(self, wire: bool = False, fail_after: int | None = None):
        self.wire = wire
        self.fail_after = fail_after
        self.bytes_exchanged = 0
        self.messages = 0
        self.exchanges = 0
        self._seq = 0

    def reset_counters(self) -> None:
        self.bytes_exchanged = self.messages = self.exchanges = 0

    def exchange(self, outgoing: list[tuple[int, int, np.ndarray]]) -> dict[int, np.ndarray]:
        """Deliver ``(src, dst, amplitudes)`` messages; returns ``dst -> amplitudes``.

        All sends complete before any receive is handed out (a barrier).
        """
        if self.fail_after is not None and self.exchanges >= self.fail_after:
            raise CommunicationError("injected exchange failure")
        self._seq += 1
        inbox: dict[int, np.ndarray] = {}
        for src, dst, amps in outgoing:
            if dst in inbox:
                raise CommunicationError(f"rank {dst} addressed twice in one exchange")
            if self.wire:
                msg = decode_frame(encode_frame(AmplitudeMessage(self._seq, src, dst, amps)))
                if (msg.src, msg.dst) != (src, dst):
                    raise CommunicationError("frame routing mismatch")
                inbox[dst] = msg.amplitudes
            else:
                inbox[dst] = amps.copy()
            self.bytes_exchanged += AMPLITUDE_BYTES * len(amps)
            self.messages += 1
        self.exchanges += 1
        return inbox


class PartitionedState:
    """All rank slices of one state plus the communicator they share."""

    def __init__(self, slices: list[LocalSlice], comm: Communicator | None = None):
        self.slices = slices
        self.comm = comm or Communicator()
        self._check()
        self._idx = np.arange(self.layout0.slice_length, dtype=np.int64)

    @property
    def layout0(self) -> PartitionLayout:
        return self.slices[0].layout

    @property
    def n_qubits(self) -> int:
        return self.layout0.n_qubits

    @property
    def worker_count(self) -> int:
        return self.layout0.worker_count

    def _check(self) -> None:
        if not self.slices:
            raise LayoutError("no slices")
        n, w = self.slices[0].layout.n_qubits, self.slices[0].layout.worker_count
        if len(self.slices) != w:
            raise LayoutError(f"{len(self.slices)} slices for {w} workers")
        for r, sl in enumerate(self.slices):
            lay = sl.layout
            if (lay.n_qubits, lay.worker_count, lay.rank) != (n, w, r):
                raise LayoutError(f"slice {r} has inconsistent layout {lay}")
            if sl.amplitudes.shape != (lay.slice_length,):
                raise LayoutError(f"slice {r} holds {sl.amplitudes.shape} amplitudes")

    def memory_per_worker(self) -> int:
        return memory_per_worker(self.n_qubits, self.worker_count)

    def gather(self) -> StateVector:
        return gather(self.slices)

    def norm_squared(self) -> float:
        return float(sum(np.vdot(s.amplitudes, s.amplitudes).real for s in self.slices))


def scatter(psi: StateVector, worker_count: int) -> list[LocalSlice]:
    n = psi.n_qubits
    out = []
    for r in range(worker_count):
        lay = PartitionLayout(n, worker_count, r)
        out.append(LocalSlice(lay, psi.amplitudes[lay.start : lay.start + lay.slice_length].copy()))
    return out


def gather(slices: list[LocalSlice]) -> StateVector:
    PartitionedState(slices)  # layout validation only
    return StateVector(slices[0].layout.n_qubits, np.concatenate([s.amplitudes for s in slices]))


def init_partitioned_basis_state(n_qubits: int, index: int, worker_count: int, comm: Communicator | None = None) -> PartitionedState:
    if not 0 <= index < 2**n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    slices = []
    for r in range(worker_count):
        lay = PartitionLayout(n_qubits, worker_count, r)
        amps = np.zeros(lay.slice_length, dtype=np.complex128)
        if lay.start <= index < lay.start + lay.slice_length:
            amps[index - lay.start] = 1.0
        slices.append(LocalSlice(lay, amps))
    return PartitionedState(slices, comm)


def _as_state(slices) -> PartitionedState:
    return slices if isinstance(slices, PartitionedState) else PartitionedState(list(slices))


def _split(state: PartitionedState, p: str):
    check_string(p)
    if len(p) != state.n_qubits:
        raise PauliError(f"string of length {len(p)} on a {state.n_qubits}-qubit state")
    xm, zm, ny = masks(p)
    L = state.layout0.local_qubits
    low = (1 << L) - 1
    return xm >> L, xm & low, zm >> L, zm & low, ny, L


def apply_pauli_rotation_distributed(slices, p: str, theta: float) -> None:
    """``exp(-i theta/2 P)`` on a partitioned state; commits only if every rank succeeds."""
    state = _as_state(slices)
    hx, lx, hz, lz, ny, L = _split(state, p)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    idx = state._idx
    new: list[np.ndarray] = []
    if hx == 0:
        for r, sl in enumerate(state.slices):
            # high Z axes reduce to a per-rank sign
            rank_sign = -1.0 if bin(r & hz).count("1") & 1 else 1.0
            pa = _apply_masks(sl.amplitudes, idx, lx, lz, ny) * rank_sign
            new.append(c * sl.amplitudes - 1j * s * pa)
    else:
        inbox = state.comm.exchange(
            [(r, r ^ hx, sl.amplitudes) for r, sl in enumerate(state.slices)]
        )
        for r, sl in enumerate(state.slices):
            partner = r ^ hx
            src_local = idx ^ lx
            pa = inbox[r][src_local]
            # sign from the source's global index (partner << L | src_local)
            sign = parity_sign(src_local, lz) * (-1.0 if bin(partner & hz).count("1") & 1 else 1.0)
            pa = pa * sign * _PHASE[ny % 4]
            new.append(c * sl.amplitudes - 1j * s * pa)
    for sl, a in zip(state.slices, new):
        sl.amplitudes[:] = a


def partial_expectations(state: PartitionedState, h: QubitHamiltonian) -> list[float]:
    """Per-rank ``Σ_k w_k Σ_{c in rank} conj(psi[c]) (P_k psi)[c]``."""
    if h.n_qubits != state.n_qubits:
        raise PauliError(f"{h.n_qubits}-qubit Hamiltonian on a {state.n_qubits}-qubit state")
    L = state.layout0.local_qubits
    low = (1 << L) - 1
    idx = state._idx
    w, xms, zms, nys = h.compiled()
    partner_cache: dict[int, dict[int, np.ndarray]] = {}
    out = []
    per_rank_terms = [np.empty(len(w)) for _ in state.slices]
    for k, (xm, zm, ny) in enumerate(zip(xms.tolist(), zms.tolist(), nys.tolist())):
        hx, lx, hz, lz = xm >> L, xm & low, zm >> L, zm & low
        if hx and hx not in partner_cache:
            partner_cache[hx] = state.comm.exchange(
                [(r, r ^ hx, sl.amplitudes) for r, sl in enumerate(state.slices)]
            )
        for r, sl in enumerate(state.slices):
            a = sl.amplitudes
            src_local = idx ^ lx
            partner = r ^ hx
            src = partner_cache[hx][r] if hx else a
            sign = parity_sign(src_local, lz) * (-1.0 if bin(partner & hz).count("1") & 1 else 1.0)
            v = complex(np.dot(np.conj(a) * src[src_local], sign)) * _PHASE[ny % 4]
            per_rank_terms[r][k] = v.real
    for terms in per_rank_terms:
        out.append(float(np.dot(w, terms)))
    return out


def expectation_distributed(slices, h: QubitHamiltonian) -> float:
    """``offset + Σ_r partial_r`` with the reduction in rank order."""
    state = _as_state(slices)
    total = h.offset
    for part in partial_expectations(state, h):
        total += part
    return total
