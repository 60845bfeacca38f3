"""Timing and accuracy of the eigen and Denman-Beavers square-root routes versus n.

    python3 scripts/matpow_scaling.py --sizes 50,100,200,400 --cond 1e6
"""

import argparse

from fracwave.matfun import benchmark_power_methods


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200,400")
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--cond", type=float, default=1e3)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rows = benchmark_power_methods(sizes, args.p, args.reps, seed=args.seed, cond=args.cond)
    print(f"{'n':>5} {'method':>15} {'median [ms]':>12} {'residual':>10}")
    for r in rows:
        print(f"{r.n:>5} {r.method:>15} {1e3 * r.median_seconds:>12.3f} {r.residual:>10.2e}")


if __name__ == "__main__":
    main()
