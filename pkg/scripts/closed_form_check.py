"""Finite-scatterer Monte Carlo against the closed-form CV^2 grid.

    python scripts/closed_form_check.py --draws 20000
"""

import argparse

from chhard.arrays import build_linear
from chhard.core import SubsetSelection, cv_squared, normalize, subset_gain
from chhard.synth import gen_finite_scatterer
from chhard.theory import cv_squared_closed

ANTENNAS = (1, 4, 16, 64, 128)
PATHS = (1, 3, 10, 30, 100)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--draws", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    geometry = build_linear(max(ANTENNAS))
    full = SubsetSelection(tuple(range(geometry.n_ports)), "original")
    print("   P     M   empirical   closed   rel.err")
    for P in PATHS:
        t = gen_finite_scatterer(P, geometry, args.draws, 1, seed=args.seed + P)
        for M in ANTENNAS:
            emp = cv_squared(subset_gain(normalize(t, 0, full.prefix(M))))
            ref = cv_squared_closed(M, P)
            print(f"{P:4d} {M:5d}   {emp:9.4f} {ref:8.4f}   {abs(emp - ref) / ref:7.2%}")


if __name__ == "__main__":
    main()
