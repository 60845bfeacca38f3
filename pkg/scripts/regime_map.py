"""Damping ratio and regime of every mode for a range of exponents.

Prints, for each y, how many modes of the configured mesh are under-,
critically and over-damped at the given alpha0, and the cut-off wavenumber
where zeta = 1.

    python3 scripts/regime_map.py --alpha0 0.1 --n-elements 100
"""

import argparse
from collections import Counter

import numpy as np

from fracwave.fem import assemble, build_uniform_mesh
from fracwave.modal import dispersion_curve, eigendecompose


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha0", type=float, default=0.1)
    ap.add_argument("--length", type=float, default=1.0)
    ap.add_argument("--n-elements", type=int, default=100)
    ap.add_argument("--exponents", default="0,0.5,1,1.5,2")
    args = ap.parse_args()

    basis = eigendecompose(assemble(build_uniform_mesh(args.length, args.n_elements)).K)
    for y in (float(v) for v in args.exponents.split(",")):
        rows = dispersion_curve(basis, args.alpha0, y)
        counts = Counter(r.regime for r in rows)
        cut = "none" if y == 1 else f"{args.alpha0 ** (1 / (1 - y)):.4g}"
        pv = [r.phase_velocity for r in rows if r.phase_velocity is not None]
        slowest = f"{min(pv):.4f}" if pv else "-"
        print(f"y={y:4.2f}  under={counts['underdamped']:4d}  critical={counts['critical']:2d}  "
              f"over={counts['overdamped']:4d}  zeta=1 at omega={cut}  slowest phase velocity={slowest}")
    print(f"omega range [{basis.omegas.min():.4g}, {basis.omegas.max():.4g}]")


if __name__ == "__main__":
    main()
