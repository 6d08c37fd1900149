"""Benchmark the partitioned engine, then tabulate predicted iteration time for every split.

Writes ``bench.txt`` and ``heatmap.csv`` into ``--out`` and prints a p × s grid.
"""
import argparse
from pathlib import Path

from vqehpc.ansatz import circuit_from_cisd, prepare_state
from vqehpc.ci import exact_diagonalize
from vqehpc.engines import PartitionedEngine
from vqehpc.fermion import qubit_hamiltonian_from_fcidump
from vqehpc.pauli import sort_terms
from vqehpc.planner import EfficiencyModel, bench_mpi, choose_plan, feasible_plans, format_bench, write_heatmap_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "vqehpc" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fcidump", default=str(DATA / "h4_sto3g.fcidump"))
    ap.add_argument("--budget", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", default="heatmap_out")
    args = ap.parse_args()

    h, table = qubit_hamiltonian_from_fcidump(args.fcidump)
    h = sort_terms(h)
    _, cisd = exact_diagonalize(h, table.n_electrons, "CISD")
    circ = circuit_from_cisd(cisd)

    def once(p):
        eng = PartitionedEngine(p)
        eng.expectation(prepare_state(circ, circ.theta0, eng), h)

    bench = bench_mpi(once, [1, 2, 4, 8], args.repeats)
    model = EfficiencyModel(max(2 * circ.n_parameters, 1), 3)
    plans = feasible_plans(bench, model, args.budget, 1)
    best = choose_plan(bench, model, args.budget, 1)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.txt").write_text(format_bench(bench))
    write_heatmap_csv(plans, out / "heatmap.csv")

    servers = sorted({pl.servers for pl in plans})
    grid = {(pl.partitions, pl.servers): pl.seconds for pl in plans}
    print(f"N_p={model.n_parallel} N_s={model.n_sequential}, predicted seconds per iteration")
    print("p\\s " + "".join(f"{s:>10d}" for s in servers))
    for p in sorted(bench):
        cells = "".join(f"{grid[p, s]:10.4f}" if (p, s) in grid else f"{'':>10}" for s in servers)
        print(f"{p:<4d}{cells}")
    print(f"best p={best.partitions} s={best.servers} predicted {best.seconds:.4f}s")


if __name__ == "__main__":
    main()
