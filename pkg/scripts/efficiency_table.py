"""Ideal speed-up and efficiency of the evaluation farm for a range of server counts.

Prints the continuous Amdahl figures next to the whole-evaluation variant
(each server runs an integer number of circuit evaluations per iteration).

    python scripts/efficiency_table.py --n-parallel 100 --n-sequential 2
"""
import argparse

from vqehpc.planner import amdahl, dp_efficiency, dp_speedup


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-parallel", type=int, default=100)
    ap.add_argument("--n-sequential", type=int, default=2)
    ap.add_argument("--max-servers", type=int, default=8)
    args = ap.parse_args()

    print(f"{'s':>3} {'amdahl S':>9} {'amdahl E':>9} {'whole S':>8} {'whole E':>8}")
    for s in range(1, args.max_servers + 1):
        a_s, a_e = amdahl(args.n_parallel, args.n_sequential, s)
        w_s = dp_speedup(args.n_parallel, args.n_sequential, s)
        w_e = dp_efficiency(args.n_parallel, args.n_sequential, s)
        print(f"{s:3d} {a_s:9.4f} {a_e:9.4f} {w_s:8.4f} {w_e:8.4f}")


if __name__ == "__main__":
    main()
