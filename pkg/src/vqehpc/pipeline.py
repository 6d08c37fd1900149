"""End-to-end run: integrals -> qubit Hamiltonian -> cutoff -> CISD seed -> VQE."""
from __future__ import annotations

import contextlib
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .ansatz import AnsatzConfig, circuit_from_cisd, energy, format_circuit
from .ci import exact_diagonalize
from .coordinator import RemoteExecutor, WorkerRegistry, local_workers
from .engines import make_engine
from .fermion import assemble_fermion_hamiltonian, jordan_wigner, read_fcidump
from .optimizer import LocalExecutor, ObjectiveSpec, OptimizerConfig, optimize, write_result, write_trace_csv
from .partitioned import min_workers
from .pauli import (
    QubitHamiltonian,
    cutoff_by_threshold,
    format_hamiltonian,
    parse_hamiltonian,
    retain_fraction,
    sort_terms,
)
from .planner import EfficiencyModel, Plan, choose_plan, parse_bench
from .worker import Problem

GiB = 1 << 30


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}]: {message}")
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    fcidump: str | None = None
    hamiltonian: str | None = None  # Hamiltonian text file instead of an FCIDUMP
    electrons: int | None = None  # required with ``hamiltonian``
    th1: float | None = None
    retained_fraction: float | None = None
    th2: float = 1e-6
    energy_tolerance: float = 1e-7
    max_iterations: int = 200
    finite_difference_step: float = 1e-4
    line_search_max_evals: int = 3
    plan: str = "1,1"  # "p,s" or "auto"
    bench: str | None = None
    node_budget: int = 1
    node_memory: int = 16 * GiB
    workers: tuple[str, ...] = ()
    output_dir: str = "run"
    seed: int = 0
    exact_reference: bool = False

    def __post_init__(self):
        if self.th1 is not None and self.retained_fraction is not None:
            raise ValueError("set exactly one of th1 / retained_fraction")
        if self.th1 is None and self.retained_fraction is None:
            object.__setattr__(self, "th1", 0.0)
        if (self.fcidump is None) == (self.hamiltonian is None):
            raise ValueError("set exactly one of fcidump / hamiltonian")
        if self.hamiltonian is not None and self.electrons is None:
            raise ValueError("a Hamiltonian file needs 'electrons'")
        if self.plan == "auto" and not self.bench:
            raise ValueError("plan 'auto' requires a bench table path")

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            energy_tolerance=self.energy_tolerance,
            max_iterations=self.max_iterations,
            finite_difference_step=self.finite_difference_step,
            line_search_max_evals=self.line_search_max_evals,
        )


_CONVERT = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, value):
    if value is None:
        return None
    kind = _CONVERT[key]
    if not isinstance(value, str):
        return value
    if "tuple" in kind:
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if "bool" in kind:
        return value.strip().lower() in ("1", "true", "yes", "on")
    if "int" in kind and "float" not in kind:
        return int(float(value)) if "e" in value.lower() else int(value)
    if "float" in kind:
        return float(value)
    return value


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` comments."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _CONVERT:
            raise ValueError(f"config line {lineno}: unknown or malformed entry {raw!r}")
        out[key] = value.strip()
    return out


def make_config(values: dict) -> RunConfig:
    return RunConfig(**{k: _coerce(k, v) for k, v in values.items() if v is not None})


def load_problem_hamiltonian(cfg: RunConfig) -> tuple[QubitHamiltonian, int]:
    try:
        if cfg.fcidump is not None:
            table = read_fcidump(cfg.fcidump)
        else:
            h = parse_hamiltonian(Path(cfg.hamiltonian).read_text())
    except (OSError, ValueError) as exc:
        raise StageError("input", str(exc)) from exc
    if cfg.fcidump is not None:
        try:
            h = jordan_wigner(assemble_fermion_hamiltonian(table), 2 * table.n_spatial_orbitals)
        except ValueError as exc:
            raise StageError("hamiltonian", str(exc)) from exc
        return sort_terms(h), table.n_electrons
    return sort_terms(h), int(cfg.electrons)


def apply_cutoff(h: QubitHamiltonian, cfg: RunConfig) -> QubitHamiltonian:
    if cfg.retained_fraction is not None:
        return retain_fraction(h, cfg.retained_fraction)
    return cutoff_by_threshold(h, cfg.th1)


def resolve_plan(cfg: RunConfig, n_qubits: int, n_parameters: int) -> tuple[int, int, Plan | None]:
    if cfg.plan != "auto":
        p, s = (int(x) for x in cfg.plan.split(","))
        return p, s, None
    bench = parse_bench(Path(cfg.bench).read_text())
    model = EfficiencyModel(max(2 * n_parameters, 1), cfg.line_search_max_evals)
    p_min = min_workers(n_qubits, cfg.node_memory)
    plan = choose_plan(bench, model, max(cfg.node_budget, p_min), p_min)
    return plan.partitions, plan.servers, plan


def run_vqe(cfg: RunConfig) -> dict:
    """Run the pipeline and write ``trace.csv``, ``result.json``, ``summary.txt``."""
    t_start = time.perf_counter()
    h_full, n_electrons = load_problem_hamiltonian(cfg)
    try:
        h = apply_cutoff(h_full, cfg)
    except ValueError as exc:
        raise StageError("cutoff", str(exc)) from exc
    try:
        _, cisd = exact_diagonalize(h_full, n_electrons, "CISD")
    except ValueError as exc:
        raise StageError("cisd", str(exc)) from exc
    try:
        circ = circuit_from_cisd(cisd, AnsatzConfig(cfg.th2))
    except ValueError as exc:
        raise StageError("ansatz", str(exc)) from exc
    try:
        p, s, plan = resolve_plan(cfg, h.n_qubits, circ.n_parameters)
        engine = make_engine(p)
    except (OSError, ValueError) as exc:
        raise StageError("plan", str(exc)) from exc

    obj = ObjectiveSpec(lambda th: energy(circ, th, h, engine), circ.n_parameters)
    try:
        with _executor(cfg, obj, Problem(h, circ, p), s) as executor:
            result = optimize(obj, circ.theta0, cfg.optimizer_config(), executor)
    except Exception as exc:
        raise StageError("optimize", str(exc)) from exc

    out = Path(cfg.output_dir)
    summary = {
        "energy": result.energy,
        "status": result.status,
        "iterations": result.iterations,
        "initial_energy": result.initial_energy,
        "n_qubits": h.n_qubits,
        "n_electrons": n_electrons,
        "n_parameters": circ.n_parameters,
        "terms_before_cutoff": len(h_full),
        "terms_after_cutoff": len(h),
        "plan": {"partitions": p, "servers": s, "auto": plan is not None},
        "seed": cfg.seed,
    }
    if plan is not None:
        summary["plan"].update(predicted_seconds=plan.seconds, eps_mpi=plan.eps_mpi, eps_dp=plan.eps_dp)
    if cfg.exact_reference:
        summary["fci_energy"] = exact_diagonalize(h, n_electrons, "FCI")[0]
    summary["wall_seconds"] = time.perf_counter() - t_start
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(result.trace, out / "trace.csv")
        write_result(result, out / "result.json")
        (out / "hamiltonian.txt").write_text(format_hamiltonian(h))
        (out / "circuit.txt").write_text(format_circuit(circ))
        (out / "summary.txt").write_text("".join(f"{k}: {json.dumps(v)}\n" for k, v in summary.items()))
    except OSError as exc:
        raise StageError("output", str(exc)) from exc
    summary["result"] = result
    return summary


@contextlib.contextmanager
def _executor(cfg: RunConfig, obj: ObjectiveSpec, problem: Problem, servers: int):
    if servers <= 1 and not cfg.workers:
        yield LocalExecutor(obj.evaluate)
        return
    if cfg.workers:
        registry = WorkerRegistry(cfg.workers, problem.partitions)
        try:
            registry.load_problem(problem.to_blob())
            yield RemoteExecutor(registry)
        finally:
            registry.close()
        return
    with local_workers(servers, problem.partitions) as registry:
        registry.load_problem(problem.to_blob())
        yield RemoteExecutor(registry)
