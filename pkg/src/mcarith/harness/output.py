"""CSV, JSON and SVG writers for experiment results.

Every writer is deterministic for a given input: fixed float formatting,
fixed column order, and SVGs without timestamps or random element ids.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import SNR_DEFINITION, CirValidation, ErrorRateRecord  # noqa: E402

ER_HEADER = ["snr_db", "error_rate", "n_err", "n_total", "bound"]
# Zero error rates are drawn at this floor on log axes and flagged.
PLOT_FLOOR = 1e-6

_SVG_META = {"Date": None, "Creator": None}


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_er_csv(records: Sequence[ErrorRateRecord], path) -> Path:
    path = _prepare(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ER_HEADER)
        for r in records:
            bound = "" if r.bound is None else _fmt(r.bound)
            w.writerow([_fmt(r.snr_db), _fmt(r.error_rate), r.n_err, r.n_total, bound])
    return path


def read_er_csv(path) -> list[ErrorRateRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        ErrorRateRecord(
            float(row["snr_db"]),
            int(row["n_err"]),
            int(row["n_total"]),
            float(row["bound"]) if row["bound"] else None,
        )
        for row in rows
    ]


def write_plot_csv(records: Sequence[ErrorRateRecord], path) -> Path:
    """Plot-ready copy of the error rates with zeros lifted to ``PLOT_FLOOR``."""
    path = _prepare(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "error_rate_plot", "at_floor", "bound"])
        for r in records:
            at_floor = r.n_err == 0
            y = PLOT_FLOOR if at_floor else max(r.error_rate, PLOT_FLOOR)
            bound = "" if r.bound is None else _fmt(r.bound)
            w.writerow([_fmt(r.snr_db), _fmt(y), int(at_floor), bound])
    return path


def write_meta(path, cfg, extra: dict | None = None) -> Path:
    path = _prepare(path)
    meta = {
        "snr_definition": SNR_DEFINITION,
        "samples_per_symbol": cfg.samples_per_symbol,
        "variance_form": cfg.variance,
        "bound_label": "union bound over pairwise Gaussian Z-tests",
        "config": asdict(cfg),
        # Modelling choices, unlike the diffusion coefficients which are physical constants.
        "invented_defaults": ["geometry.distances", "geometry.receiver_radius", "symbol_duration", "snr_definition"],
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def plot_error_rates(series: dict[str, Sequence[ErrorRateRecord]], path, title: str = "") -> Path:
    """Error rate (and bound, when present) against SNR on a log axis."""
    path = _prepare(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, records in series.items():
        snr = [r.snr_db for r in records]
        er = [max(r.error_rate, PLOT_FLOOR) for r in records]
        (line,) = ax.semilogy(snr, er, "o-", label=f"{label} simulated")
        floor = [(r.snr_db, PLOT_FLOOR) for r in records if r.n_err == 0]
        if floor:
            ax.semilogy(*zip(*floor), "v", color=line.get_color(), markerfacecolor="none")
        if any(r.bound is not None for r in records):
            pts = [(r.snr_db, max(r.bound, PLOT_FLOOR)) for r in records if r.bound is not None]
            ax.semilogy(*zip(*pts), "--", color=line.get_color(), label=f"{label} bound")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("computation error rate")
    ax.set_ylim(bottom=PLOT_FLOOR / 2)
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    return path


def _save(fig, path: Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "mcarith", "svg.fonttype": "none"}):
        fig.savefig(path, metadata=_SVG_META if path.suffix == ".svg" else None)
    plt.close(fig)


def write_cir_csv(result: CirValidation, path) -> Path:
    path = _prepare(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "theory_A", "sim_A", "theory_B", "sim_B", "theory_net", "sim_net"])
        for row in zip(
            result.times,
            result.theory_A,
            result.sim_A,
            result.theory_B,
            result.sim_B,
            result.theory_net,
            result.sim_net,
        ):
            w.writerow([_fmt(x) for x in row])
    return path


def plot_cir(result: CirValidation, path) -> Path:
    path = _prepare(path)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    t = result.times * 1e3
    if result.release_A:
        ax.plot(t, result.theory_A, "-", label="A closed form")
        ax.plot(t, result.sim_A, ".", label="A particle")
    if result.release_B:
        ax.plot(t, result.theory_B, "-", label="B closed form")
        ax.plot(t, result.sim_B, ".", label="B particle")
    ax.axvline(result.t_peak * 1e3, color="0.6", lw=0.8)
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("fraction of released molecules in receiver")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    return path


def write_arith_csv(rows, summary: dict, path) -> Path:
    path = _prepare(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["op", "a", "b", "expected", "decoded", "correct"])
        for r in rows:
            w.writerow([r.op, r.a, r.b, r.expected, r.decoded, int(r.correct)])
    summary_path = path.with_name(path.stem + "_summary.csv")
    with summary_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["op", "channel", "accuracy"])
        for (op, channel), acc in summary.items():
            w.writerow([op, channel, _fmt(acc)])
    return path


def emit_er_outputs(records: Sequence[ErrorRateRecord], cfg, out_dir, stem: str, title: str = "") -> dict:
    """Write the CSV, plot CSV, metadata and SVG for one error-rate sweep."""
    out_dir = Path(out_dir)
    paths = {
        "csv": write_er_csv(records, out_dir / f"{stem}.csv"),
        "plot_csv": write_plot_csv(records, out_dir / f"{stem}_plot.csv"),
        "meta": write_meta(out_dir / f"{stem}.meta.json", cfg),
    }
    paths["svg"] = plot_error_rates({stem: records}, out_dir / f"{stem}.svg", title)
    return paths
