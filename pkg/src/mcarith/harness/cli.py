"""Command line entry point: ``mcarith {cir,er,bound,arith}``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from ..detector import CapacityError
from . import experiments, output
from .config import ConfigError, ExperimentConfig, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 4

_MODE_FOR = {
    "cir": "cir_validation",
    "er": "er_vs_snr",
    "bound": "bound_vs_sim",
    "arith": "arithmetic_demo",
}


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcarith", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "cir": "particle run against the closed-form impulse response",
        "er": "error rate against SNR",
        "bound": "error rate against SNR together with the union bound",
        "arith": "arithmetic round trips over the value alphabet",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="TOML config; defaults apply when omitted")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--out", type=Path, default=Path("results"))
        p.add_argument("--particle", action="store_true", help="use the particle engine for observations")
        p.add_argument("--trials", type=_positive)
        p.add_argument("--workers", type=_positive)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg.mode = _MODE_FOR[args.command]
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
        cfg.arithmetic.trials = args.trials
    if args.workers is not None:
        cfg.workers = args.workers
    if args.particle:
        cfg.particle = True
    if args.command == "bound":
        cfg.bound = True
    return cfg.validate()


def run(args) -> dict:
    cfg = resolve_config(args)
    out = args.out
    stem = args.command
    if args.command in ("er", "bound"):
        records = experiments.run_er_experiment(cfg)
        return output.emit_er_outputs(records, cfg, out, stem, title=f"M={cfg.M}, D={len(cfg.alphabet)}")
    if args.command == "cir":
        result = experiments.run_cir_validation(cfg)
        return {
            "csv": output.write_cir_csv(result, out / "cir.csv"),
            "svg": output.plot_cir(result, out / "cir.svg"),
            "meta": output.write_meta(out / "cir.meta.json", cfg, {"t_peak_s": result.t_peak}),
        }
    rows, summary = experiments.run_arithmetic_demo(cfg)
    return {
        "csv": output.write_arith_csv(rows, summary, out / "arith.csv"),
        "meta": output.write_meta(out / "arith.meta.json", cfg),
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        paths = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    print(f"done in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
