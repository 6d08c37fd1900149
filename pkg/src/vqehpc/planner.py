"""Speed-up/efficiency models and the partitions × servers split search.

``p`` is the number of ranks one state vector is split over (MPI-style) and
``s`` the number of independent servers farming out circuit evaluations.
The whole system uses ``p * s`` nodes.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class EfficiencyModel:
    n_parallel: int  # N_p: independent evaluations per iteration
    n_sequential: int  # N_s: evaluations that must run one after another

    def __post_init__(self):
        if self.n_parallel < 1 or self.n_sequential < 1:
            raise ValueError("N_p and N_s must be positive integers")


def amdahl(n_parallel: float, n_sequential: float, n: float) -> tuple[float, float]:
    """Ideal ``(speedup, efficiency)`` on ``n`` workers."""
    total = n_parallel + n_sequential
    return total / (n_parallel / n + n_sequential), total / (n_parallel + n_sequential * n)


def dp_efficiency(n_parallel: int, n_sequential: int, servers: int) -> float:
    """Efficiency with whole evaluations per server: ``(N_p+N_s) / (s·(⌈N_p/s⌉ + N_s))``."""
    return (n_parallel + n_sequential) / (servers * (math.ceil(n_parallel / servers) + n_sequential))


def dp_speedup(n_parallel: int, n_sequential: int, servers: int) -> float:
    """Speed-up matching :func:`dp_efficiency` (idle surplus servers included)."""
    return (n_parallel + n_sequential) / (math.ceil(n_parallel / servers) + n_sequential)


BenchTable = dict[int, float]


def _is_pow2(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def validate_bench(bench: BenchTable) -> None:
    for p, t in bench.items():
        if not _is_pow2(p):
            raise PlanError(f"partition count {p} is not a power of two")
        if not t > 0:
            raise PlanError(f"non-positive time {t} for p={p}")


def mpi_efficiency(bench: BenchTable, p: int, p_min: int | None = None) -> float:
    """Speed-up over the minimum configuration divided by the extra parallelism."""
    p_min = min(bench) if p_min is None else p_min
    for q in (p, p_min):
        if q not in bench:
            raise PlanError(f"no benchmark entry for p={q}")
    return (bench[p_min] / bench[p]) / (p / p_min)


def predict_iteration_time(bench: BenchTable, p: int, s: int, model: EfficiencyModel) -> float:
    """``t(p) · (⌈N_p/s⌉ + N_s)``."""
    if p not in bench:
        raise PlanError(f"no benchmark entry for p={p}")
    return bench[p] * (math.ceil(model.n_parallel / s) + model.n_sequential)


@dataclass(frozen=True)
class Plan:
    partitions: int
    servers: int
    seconds: float
    eps_mpi: float
    eps_dp: float

    @property
    def nodes(self) -> int:
        return self.partitions * self.servers

    @property
    def efficiency(self) -> float:
        return self.eps_mpi * self.eps_dp


def _pow2_upto(limit: int, start: int = 1):
    x = start
    while x <= limit:
        yield x
        x *= 2


def feasible_plans(bench: BenchTable, model: EfficiencyModel, node_budget: int, p_min: int) -> list[Plan]:
    """Every power-of-two ``(p, s)`` with ``p >= p_min``, ``p·s <= budget`` and a measured ``t(p)``."""
    validate_bench(bench)
    if not _is_pow2(p_min):
        raise PlanError(f"p_min {p_min} is not a power of two")
    if node_budget < p_min:
        raise PlanError(f"node budget {node_budget} below the minimum partition count {p_min}")
    if p_min not in bench:
        raise PlanError(f"benchmark lacks the minimum partition count {p_min}")
    plans = []
    for p in _pow2_upto(node_budget, p_min):
        if p not in bench:
            continue
        for s in _pow2_upto(node_budget // p):
            plans.append(
                Plan(
                    p,
                    s,
                    predict_iteration_time(bench, p, s, model),
                    mpi_efficiency(bench, p, p_min),
                    dp_efficiency(model.n_parallel, model.n_sequential, s),
                )
            )
    return plans


def choose_plan(bench: BenchTable, model: EfficiencyModel, node_budget: int, p_min: int) -> Plan:
    """Fastest predicted split; ties go to fewer nodes, then fewer partitions."""
    plans = feasible_plans(bench, model, node_budget, p_min)
    return min(plans, key=lambda pl: (pl.seconds, pl.nodes, pl.partitions))


# -- files ------------------------------------------------------------------------


def parse_bench(text: str) -> BenchTable:
    bench: BenchTable = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            p, t = line.split()
            bench[int(p)] = float(t)
        except ValueError as exc:
            raise PlanError(f"line {lineno}: expected 'p t_seconds', got {raw!r}") from exc
    validate_bench(bench)
    return bench


def format_bench(bench: BenchTable) -> str:
    return "".join(f"{p} {bench[p]!r}\n" for p in sorted(bench))


def write_heatmap_csv(plans: list[Plan], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["partitions", "servers", "nodes", "seconds", "eps_mpi", "eps_dp", "efficiency"])
        for pl in sorted(plans, key=lambda pl: (pl.partitions, pl.servers)):
            w.writerow([pl.partitions, pl.servers, pl.nodes, repr(pl.seconds),
                        f"{pl.eps_mpi:.6f}", f"{pl.eps_dp:.6f}", f"{pl.efficiency:.6f}"])


def bench_mpi(run_once, partition_counts, repeats: int = 3) -> BenchTable:
    """Time ``run_once(p)`` for each partition count; keeps the fastest of ``repeats``."""
    bench: BenchTable = {}
    for p in partition_counts:
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            run_once(p)
            best = min(best, time.perf_counter() - t0)
        bench[p] = best
    return bench
