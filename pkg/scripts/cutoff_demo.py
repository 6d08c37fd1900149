"""Scan retention fractions on H2/6-31G and carry the choice over to H4/STO-3G.

Runs VQE at each fraction on the small problem, then runs the large problem
uncut and cut at the recommended threshold and reports the energy cost.
"""
import argparse
from pathlib import Path

from vqehpc.ansatz import circuit_from_cisd, energy
from vqehpc.ci import exact_diagonalize
from vqehpc.cutoff import cutoff_scan, error_report, write_report_csv
from vqehpc.fermion import qubit_hamiltonian_from_fcidump
from vqehpc.optimizer import ObjectiveSpec, optimize
from vqehpc.pauli import cutoff_by_threshold, sort_terms

DATA = Path(__file__).resolve().parents[1] / "src" / "vqehpc" / "data"


def load(name):
    h, table = qubit_hamiltonian_from_fcidump(DATA / f"{name}.fcidump")
    return sort_terms(h), table.n_electrons


def vqe_runner(h_full, n_electrons):
    _, cisd = exact_diagonalize(h_full, n_electrons, "CISD")
    circ = circuit_from_cisd(cisd)

    def run(h):
        obj = ObjectiveSpec(lambda th: energy(circ, th, h), circ.n_parameters)
        return optimize(obj, circ.theta0).energy

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--small", default="h2_631g")
    ap.add_argument("--large", default="h4_sto3g")
    ap.add_argument("--delta-e", type=float, default=1.6e-3)
    ap.add_argument("--output", default="cutoff_report.csv")
    args = ap.parse_args()

    h_small, ne_small = load(args.small)
    h_large, ne_large = load(args.large)
    report = cutoff_scan(h_small, vqe_runner(h_small, ne_small), args.delta_e, h_large)
    write_report_csv(report, args.output)
    for r in report.rows:
        print(f"retained {r.retained_fraction:.1f}  terms {r.terms:4d}  E {r.energy:.8f}  err {r.abs_error:.2e}")
    print(f"recommended fraction {report.recommended_fraction:.1f}, th1 {report.recommended_th1:.3e}")

    run_large = vqe_runner(h_large, ne_large)
    e_full = run_large(h_large)
    h_cut = cutoff_by_threshold(h_large, report.recommended_th1)
    e_cut = run_large(h_cut)
    a, r = error_report(e_cut, e_full)
    print(f"{args.large}: {len(h_large)} -> {len(h_cut)} terms, E_full {e_full:.8f}, "
          f"E_cut {e_cut:.8f}, |dE| {a:.2e} Ha ({r:.2e} relative)")


if __name__ == "__main__":
    main()
