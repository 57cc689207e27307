"""Find the reaction radius that annihilates a target fraction by the CIR peak time.

Reference release: equal A and B counts from two transmitters at the default
distance, 60 degrees apart, receiver at the origin.
"""

import argparse

from mcarith.particle import annihilated_fraction, calibrate_reaction_radius
from mcarith.physics import ChannelGeometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target", type=float, default=0.5)
    ap.add_argument("--n-each", type=int, default=10_000)
    ap.add_argument("--iterations", type=int, default=10)
    ap.add_argument("--lo", type=float, default=1e-6)
    ap.add_argument("--hi", type=float, default=2e-5)
    ap.add_argument("--check-seeds", type=int, default=2)
    args = ap.parse_args()

    geom = ChannelGeometry()
    radius = calibrate_reaction_radius(
        geom, args.target, lo=args.lo, hi=args.hi, iterations=args.iterations, n_each=args.n_each
    )
    print(f"radius = {radius:.4g} m")
    for seed in range(args.check_seeds):
        print(f"seed {seed}: {annihilated_fraction(radius, geom, n_each=args.n_each, seed=seed):.3f} annihilated")


if __name__ == "__main__":
    main()
