"""Error rate against SNR for alphabets of 2, 3 and 4 magnitudes (M = 2)."""

import argparse
from pathlib import Path

from mcarith.harness import output
from mcarith.harness.config import ExperimentConfig
from mcarith.harness.experiments import run_er_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/er_vs_alphabet"))
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    series = {}
    for S in (2, 3, 4):
        cfg = ExperimentConfig(
            M=2,
            alphabet=list(range(1, S + 1)),
            snr_db=[-6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0],
            trials=args.trials,
            seed=args.seed,
            workers=args.workers,
        )
        recs = run_er_experiment(cfg)
        output.write_er_csv(recs, args.out / f"S{S}.csv")
        output.write_plot_csv(recs, args.out / f"S{S}_plot.csv")
        output.write_meta(args.out / f"S{S}.meta.json", cfg)
        series[f"S={S}"] = recs
    output.plot_error_rates(series, args.out / "er_vs_alphabet.svg", "M = 2, N = 60")


if __name__ == "__main__":
    main()
