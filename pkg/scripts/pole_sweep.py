"""Slowest reduced-system pole over random leader-rooted topologies, per n and alpha.

Prints a table of max Re(pole) (worst case over the draws) and the spectral
gap to the imaginary axis; every entry should be strictly negative.
"""

import argparse

import numpy as np

from oscsync.graph import build_laplacian, decompose, reduced_system_poles
from oscsync.verification import random_spanning_topology


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--draws", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--alphas", type=float, nargs="+", default=[0.25, 1.0, 4.0, 16.0])
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print("n  " + "".join(f"alpha={a:<10g}" for a in args.alphas))
    for n in range(1, 9):
        worst = np.full(len(args.alphas), -np.inf)
        for _ in range(args.draws):
            dec = decompose(build_laplacian(random_spanning_topology(rng, n)))
            for k, alpha in enumerate(args.alphas):
                worst[k] = max(worst[k], reduced_system_poles(dec, alpha).real.max())
        print(f"{n:<3d}" + "".join(f"{w:<16.3e}" for w in worst))


if __name__ == "__main__":
    main()
