"""Union bound against simulated error rate.

Sweeps (M, S, N) = (2, 2, 60), (2, 4, 60) and (2, 2, 120) by default and
prints the largest log10 gap between bound and simulation for each.
"""

import argparse
import math
from pathlib import Path

from mcarith.harness import output
from mcarith.harness.config import ExperimentConfig
from mcarith.harness.experiments import run_er_experiment

GRID = [3.0, 4.5, 6.0, 7.5, 9.0, 10.5, 12.0, 13.5, 15.0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/bound_vs_sim"))
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--variance", choices=["independent", "exact"], default="independent")
    ap.add_argument("--include-m4", action="store_true", help="also sweep M = 4, S = 4 (256 hypotheses)")
    args = ap.parse_args()

    cases = [(2, 2, 60), (2, 4, 60), (2, 2, 120)]
    if args.include_m4:
        cases.append((4, 4, 60))
    series = {}
    for M, S, N in cases:
        cfg = ExperimentConfig(
            mode="bound_vs_sim",
            M=M,
            alphabet=list(range(1, S + 1)),
            samples_per_symbol=N,
            snr_db=GRID,
            trials=args.trials,
            bound=True,
            variance=args.variance,
            seed=args.seed,
            workers=args.workers,
        )
        recs = run_er_experiment(cfg)
        stem = f"M{M}_S{S}_N{N}"
        output.write_er_csv(recs, args.out / f"{stem}.csv")
        output.write_plot_csv(recs, args.out / f"{stem}_plot.csv")
        output.write_meta(args.out / f"{stem}.meta.json", cfg)
        series[stem] = recs
        gaps = [abs(math.log10(r.bound) - math.log10(r.error_rate)) for r in recs if r.n_err and r.bound > 0]
        print(f"{stem}: max log10 gap {max(gaps):.3f} over {len(gaps)} points" if gaps else f"{stem}: no errors")
    output.plot_error_rates(series, args.out / "bound_vs_sim.svg", f"union bound ({args.variance} variance)")


if __name__ == "__main__":
    main()
