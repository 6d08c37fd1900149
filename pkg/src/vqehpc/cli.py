"""Command-line entry point: ``vqehpc <run|plan|bench-mpi|cutoff-scan|worker|transform>``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import planner
from .ansatz import AnsatzConfig, circuit_from_cisd, energy, prepare_state
from .ci import exact_diagonalize
from .cutoff import cutoff_scan, write_report_csv
from .engines import PartitionedEngine
from .optimizer import ObjectiveSpec, optimize
from .partitioned import min_workers
from .pauli import cutoff_by_threshold, format_hamiltonian, parse_hamiltonian, retain_fraction, sort_terms
from .pipeline import GiB, RunConfig, StageError, load_problem_hamiltonian, make_config, parse_config_text, run_vqe
from .worker import DEFAULT_LISTEN_ENV, serve_worker

DATA = Path(__file__).parent / "data"


def _add_run_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key = value file; flags override its entries")
    for f in dataclasses.fields(RunConfig):
        names = [f"--{f.name}"]
        if "_" in f.name:
            names.append(f"--{f.name.replace('_', '-')}")
        sp.add_argument(*names, dest=f.name, default=None, help=f"(config key '{f.name}')")


def cmd_run(args) -> int:
    values = parse_config_text(Path(args.config).read_text()) if args.config else {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name)
        if v is not None:
            values[f.name] = v
    try:
        cfg = make_config(values)
    except (TypeError, ValueError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    try:
        summary = run_vqe(cfg)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    print(f"energy {summary['energy']!r} status {summary['status']} iterations {summary['iterations']}")
    print(f"terms {summary['terms_before_cutoff']} -> {summary['terms_after_cutoff']}, "
          f"plan p={summary['plan']['partitions']} s={summary['plan']['servers']}, "
          f"{summary['wall_seconds']:.2f} s; outputs in {cfg.output_dir}")
    return 0


def cmd_plan(args) -> int:
    bench = planner.parse_bench(Path(args.bench).read_text())
    model = planner.EfficiencyModel(args.n_parallel, args.n_sequential)
    p_min = args.p_min
    if p_min is None:
        p_min = min_workers(args.qubits, args.node_memory) if args.qubits else min(bench)
    plans = planner.feasible_plans(bench, model, args.budget, p_min)
    best = planner.choose_plan(bench, model, args.budget, p_min)
    if args.heatmap:
        planner.write_heatmap_csv(plans, args.heatmap)
    print(f"plan p={best.partitions} s={best.servers} nodes={best.nodes} "
          f"predicted={best.seconds:.6g}s eps_mpi={best.eps_mpi:.4f} eps_dp={best.eps_dp:.4f} "
          f"combined={best.efficiency:.4f}")
    return 0


def cmd_bench_mpi(args) -> int:
    cfg = RunConfig(fcidump=args.fcidump)
    h, ne = load_problem_hamiltonian(cfg)
    _, cisd = exact_diagonalize(h, ne, "CISD")
    circ = circuit_from_cisd(cisd)
    counts = [int(p) for p in args.partitions.split(",")]

    def once(p):
        eng = PartitionedEngine(p)
        eng.expectation(prepare_state(circ, circ.theta0, eng), h)

    bench = planner.bench_mpi(once, counts, args.repeats)
    text = planner.format_bench(bench)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)
    return 0


def _vqe_energy_runner(h_full, n_electrons, th2):
    _, cisd = exact_diagonalize(h_full, n_electrons, "CISD")
    circ = circuit_from_cisd(cisd, AnsatzConfig(th2))

    def run(h):
        obj = ObjectiveSpec(lambda th: energy(circ, th, h), circ.n_parameters)
        return optimize(obj, circ.theta0).energy

    return run


def cmd_cutoff_scan(args) -> int:
    h_small, ne = load_problem_hamiltonian(RunConfig(fcidump=args.fcidump))
    h_large = None
    if args.target:
        if args.target.endswith(".txt"):
            h_large = sort_terms(parse_hamiltonian(Path(args.target).read_text()))
        else:
            h_large, _ = load_problem_hamiltonian(RunConfig(fcidump=args.target))
    report = cutoff_scan(h_small, _vqe_energy_runner(h_small, ne, args.th2), args.delta_e, h_large)
    if args.output:
        write_report_csv(report, args.output)
    for r in report.rows:
        print(f"retained {r.retained_fraction:.1f} (cut {r.cutoff_ratio:.1f}) terms {r.terms:5d} "
              f"E {r.energy:.10f} err {r.abs_error:.3e}")
    print(f"recommended retained fraction {report.recommended_fraction:.1f} "
          f"(cutoff ratio {report.recommended_cutoff_ratio:.1f})"
          + (f", th1 {report.recommended_th1!r}" if report.recommended_th1 is not None else ""))
    return 0


def cmd_worker(args) -> int:
    serve_worker(args.listen, announce=lambda ep: print(f"listening {ep}", flush=True))
    return 0


def cmd_transform(args) -> int:
    h, _ = load_problem_hamiltonian(RunConfig(fcidump=args.fcidump))
    if args.retained_fraction is not None:
        h = retain_fraction(h, args.retained_fraction)
    elif args.th1 is not None:
        h = cutoff_by_threshold(h, args.th1)
    text = format_hamiltonian(h)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vqehpc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="full VQE pipeline")
    _add_run_flags(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("plan", help="choose a partitions x servers split")
    sp.add_argument("--bench", required=True, help="file of 'p t_seconds' lines")
    sp.add_argument("--n-parallel", type=int, required=True)
    sp.add_argument("--n-sequential", type=int, default=3)
    sp.add_argument("--budget", type=int, required=True, help="node budget")
    sp.add_argument("--p-min", type=int)
    sp.add_argument("--qubits", type=int, help="derive p_min from the per-node memory")
    sp.add_argument("--node-memory", type=int, default=16 * GiB)
    sp.add_argument("--heatmap", help="write every feasible split to this CSV")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("bench-mpi", help="time one circuit per partition count")
    sp.add_argument("--fcidump", default=str(DATA / "h2_631g.fcidump"))
    sp.add_argument("--partitions", default="1,2,4,8")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_bench_mpi)

    sp = sub.add_parser("cutoff-scan", help="retention-fraction search on a small problem")
    sp.add_argument("--fcidump", required=True)
    sp.add_argument("--delta-e", type=float, default=1.6e-3)
    sp.add_argument("--th2", type=float, default=1e-6)
    sp.add_argument("--target", help="larger FCIDUMP or Hamiltonian .txt to derive th1 for")
    sp.add_argument("--output", help="report CSV")
    sp.set_defaults(func=cmd_cutoff_scan)

    sp = sub.add_parser("worker", help="serve energy evaluations")
    sp.add_argument("--listen", default=None, help=f"host:port (default ${DEFAULT_LISTEN_ENV} or 127.0.0.1:0)")
    sp.set_defaults(func=cmd_worker)

    sp = sub.add_parser("transform", help="FCIDUMP -> sorted Hamiltonian text")
    sp.add_argument("fcidump")
    sp.add_argument("--th1", type=float)
    sp.add_argument("--retained-fraction", type=float)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_transform)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
