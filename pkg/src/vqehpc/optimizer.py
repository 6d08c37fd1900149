"""BFGS over central-difference gradients with a capped backtracking search.

Every iteration does one independent batch of ``2 * N_p`` energy evaluations
(the gradient) followed by at most ``line_search_max_evals`` sequential ones.
Those two counts are what the efficiency model in :mod:`vqehpc.planner`
consumes, so they are recorded per iteration from the actual calls.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


class EvaluationError(RuntimeError):
    """An energy evaluation failed; ``index`` is its position in the batch."""

    def __init__(self, index: int, message: str):
        super().__init__(f"evaluation {index} failed: {message}")
        self.index = index


class GradientError(RuntimeError):
    def __init__(self, parameter_index: int, cause: Exception):
        super().__init__(f"gradient evaluation for parameter {parameter_index} failed: {cause}")
        self.parameter_index = parameter_index


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ObjectiveSpec:
    evaluate: Callable[[np.ndarray], float]
    n_parameters: int


@dataclass(frozen=True)
class OptimizerConfig:
    energy_tolerance: float = 1e-7
    max_iterations: int = 200
    finite_difference_step: float = 1e-4
    line_search_max_evals: int = 3
    gradient_tolerance: float = 1e-9
    armijo: float = 1e-4
    backtrack: float = 0.25

    def __post_init__(self):
        if self.energy_tolerance <= 0 or self.finite_difference_step <= 0:
            raise ValueError("tolerance and finite-difference step must be positive")
        if self.line_search_max_evals < 1:
            raise ValueError("line search needs at least one evaluation")


@dataclass
class IterationRecord:
    iteration: int
    theta: list[float]
    energy: float
    gradient_norm: float
    parallel_evaluations: int
    sequential_evaluations: int
    seconds: float


@dataclass
class OptimizeResult:
    theta: np.ndarray
    energy: float
    status: str  # "converged" | "max_iterations" | "stalled"
    initial_energy: float
    trace: list[IterationRecord] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


class LocalExecutor:
    """Evaluates a batch in order in this process."""

    def __init__(self, evaluate: Callable[[np.ndarray], float]):
        self.evaluate = evaluate
        self.batch_sizes: list[int] = []

    def __call__(self, thetas: Sequence[np.ndarray]) -> list[float]:
        self.batch_sizes.append(len(thetas))
        out = []
        for i, t in enumerate(thetas):
            try:
                out.append(float(self.evaluate(np.asarray(t, dtype=float))))
            except Exception as exc:
                raise EvaluationError(i, str(exc)) from exc
        return out


def _check_finite(values: Sequence[float]) -> None:
    for v in values:
        if not math.isfinite(v):
            raise OptimizationError(f"non-finite energy {v}")


def parallel_gradient(obj: ObjectiveSpec, theta, h: float, executor=None) -> np.ndarray:
    """Central differences; all ``2 * N_p`` shifted points go out as one batch.

    Batch order is ``(+h e_0, -h e_0, +h e_1, -h e_1, ...)``.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    executor = executor or LocalExecutor(obj.evaluate)
    theta = np.asarray(theta, dtype=float)
    batch = []
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        batch += [theta + e, theta - e]
    if not batch:
        return np.zeros(0)
    try:
        values = executor(batch)
    except EvaluationError as exc:
        raise GradientError(exc.index // 2, exc) from exc
    _check_finite(values)
    values = np.asarray(values)
    return (values[0::2] - values[1::2]) / (2 * h)


def optimize(obj: ObjectiveSpec, theta0, cfg: OptimizerConfig = OptimizerConfig(), executor=None) -> OptimizeResult:
    executor = executor or LocalExecutor(obj.evaluate)
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.shape != (obj.n_parameters,):
        raise ValueError(f"theta0 has shape {theta.shape}, expected ({obj.n_parameters},)")
    (energy,) = executor([theta])
    _check_finite([energy])
    result = OptimizeResult(theta, energy, "converged", energy)
    if obj.n_parameters == 0:
        return result

    n = obj.n_parameters
    hinv = np.eye(n)
    fresh = True  # hinv is (a multiple of) the identity
    step_cap = 1.0
    prev: tuple[np.ndarray, np.ndarray] | None = None  # (step, old gradient)
    status = "max_iterations"
    for it in range(1, cfg.max_iterations + 1):
        t0 = time.perf_counter()
        g = parallel_gradient(obj, theta, cfg.finite_difference_step, executor)
        if prev is not None:
            s, g_old = prev
            y = g - g_old
            sy = float(s @ y)
            if sy > 1e-16:
                if fresh:
                    hinv = np.eye(n) * (sy / float(y @ y))
                rho = 1.0 / sy
                v = np.eye(n) - rho * np.outer(s, y)
                hinv = v @ hinv @ v.T + rho * np.outer(s, s)
                fresh = False
        gnorm = float(np.linalg.norm(g))
        if gnorm < cfg.gradient_tolerance:
            result.trace.append(IterationRecord(it, theta.tolist(), energy, gnorm, 2 * n, 0, time.perf_counter() - t0))
            status = "converged"
            break

        d = -hinv @ g
        if float(g @ d) >= 0:
            hinv, fresh = np.eye(n), True
            d = -g
        if fresh:
            # no curvature yet: cap the trial step length (radians)
            d = d * (step_cap / max(step_cap, float(np.linalg.norm(d))))
        slope = float(g @ d)

        alpha = 1.0
        best = None
        evals = 0
        for _ in range(cfg.line_search_max_evals):
            trial = theta + alpha * d
            (e_trial,) = executor([trial])
            _check_finite([e_trial])
            evals += 1
            if best is None or e_trial < best[1]:
                best = (trial, e_trial, alpha)
            if e_trial <= energy + cfg.armijo * alpha * slope:
                best = (trial, e_trial, alpha)
                break
            alpha *= cfg.backtrack

        accepted = best is not None and best[1] < energy
        if accepted:
            new_theta, new_energy, alpha = best
            prev = (new_theta - theta, g)
        else:
            new_theta, new_energy = theta, energy
            prev = None
        delta = abs(new_energy - energy)
        theta, energy = new_theta, new_energy
        result.trace.append(
            IterationRecord(it, theta.tolist(), energy, gnorm, 2 * n, evals, time.perf_counter() - t0)
        )
        if accepted and delta < cfg.energy_tolerance:
            status = "converged"
            break
        if not accepted:
            if fresh:
                step_cap *= cfg.backtrack**cfg.line_search_max_evals
                if step_cap < 1e-12:
                    status = "stalled"
                    break
            hinv, fresh = np.eye(n), True

    result.theta, result.energy, result.status = theta, energy, status
    return result


# -- persistence ------------------------------------------------------------------

TRACE_COLUMNS = ["iteration", "energy", "grad_norm", "parallel_evals", "sequential_evals", "seconds"]


def write_trace_csv(trace: list[IterationRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([r.iteration, repr(r.energy), repr(r.gradient_norm), r.parallel_evaluations,
                        r.sequential_evaluations, f"{r.seconds:.6f}"])


def write_result(result: OptimizeResult, path: str | Path, **extra) -> None:
    record = {
        "theta": [float(t) for t in result.theta],
        "energy": result.energy,
        "status": result.status,
        "initial_energy": result.initial_energy,
        "iterations": result.iterations,
        **extra,
    }
    Path(path).write_text(json.dumps(record, indent=2) + "\n")


def trace_as_dicts(trace: list[IterationRecord]) -> list[dict]:
    return [asdict(r) for r in trace]
