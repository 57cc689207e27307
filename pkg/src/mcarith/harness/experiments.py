"""Experiment runners behind the CLI subcommands."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .. import analysis, detector, encoder, particle, physics, stats
from ..encoder import OperationContext, Species, ValueEncoding
from ..physics import ChannelGeometry
from ..stats import SamplingPlan
from .config import ExperimentConfig

SNR_DEFINITION = (
    "snr_db = 10*log10(lambda_peak), lambda_peak = expected count of species A at the "
    "strongest sample of one unit value sent by transmitter 0"
)


@dataclass(frozen=True)
class ErrorRateRecord:
    snr_db: float
    n_err: int
    n_total: int
    bound: float | None = None

    def __post_init__(self):
        if self.n_total < 1 or not 0 <= self.n_err <= self.n_total:
            raise ValueError("need 0 <= n_err <= n_total and n_total >= 1")

    @property
    def error_rate(self) -> float:
        return self.n_err / self.n_total

    @property
    def exact_rate(self) -> Fraction:
        return Fraction(self.n_err, self.n_total)

    @property
    def standard_error(self) -> float:
        p = self.error_rate
        return math.sqrt(p * (1 - p) / self.n_total)


def links_for(cfg: ExperimentConfig, distances=None) -> list[dict]:
    g = cfg.geometry
    distances = cfg.transmitter_distances()[: cfg.M] if distances is None else distances
    return [
        {
            Species.A: ChannelGeometry(d, g.receiver_radius, g.diffusion_A),
            Species.B: ChannelGeometry(d, g.receiver_radius, g.diffusion_B),
        }
        for d in distances
    ]


def sampling_plan(cfg: ExperimentConfig) -> SamplingPlan:
    return SamplingPlan(cfg.symbol_duration, cfg.samples_per_symbol, cfg.isi_length)


def peak_sample_cir(geom: ChannelGeometry, plan: SamplingPlan) -> float:
    return float(np.max(physics.cir(plan.offsets(), geom)))


def snr_to_scale(snr_db: float, geom: ChannelGeometry, plan: SamplingPlan) -> float:
    """Molecules per unit value giving ``10 log10(lambda_peak) == snr_db``."""
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return 10 ** (snr_db / 10) / peak_sample_cir(geom, plan)


def detection_model(cfg: ExperimentConfig, snr_db: float) -> detector.DetectionModel:
    links = links_for(cfg)
    plan = sampling_plan(cfg)
    scale = snr_to_scale(snr_db, links[0][Species.A], plan)
    enc = ValueEncoding(scale, frozenset(cfg.alphabet))
    return detector.DetectionModel(links, plan, enc, cfg.background)


def hypothesis_set(cfg: ExperimentConfig, snr_db: float) -> detector.HypothesisSet:
    return detector.enumerate_hypotheses(cfg.M, cfg.signed_alphabets(), detection_model(cfg, snr_db))


def _chunk_seed(seed: int, snr_index: int, chunk_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(snr_index, chunk_index))


def _true_intensities(hset, truth: np.ndarray, k: int):
    lam_A = hset.lambda_A[truth[:, k]]
    lam_B = hset.lambda_B[truth[:, k]]
    for j in range(1, min(hset.isi_length, k) + 1):
        lam_A = lam_A + hset.isi_A[truth[:, k - j], j - 1]
        lam_B = lam_B + hset.isi_B[truth[:, k - j], j - 1]
    return lam_A, lam_B


def _abstract_chunk(cfg: ExperimentConfig, hset, n: int, ss: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(ss)
    K = cfg.symbols_per_trial
    truth = rng.integers(0, len(hset), size=(n, K))
    counts = np.empty((n, K, hset.samples_per_symbol))
    for k in range(K):
        lam_A, lam_B = _true_intensities(hset, truth, k)
        if cfg.noiseless:
            counts[:, k] = lam_A - lam_B
        else:
            counts[:, k] = rng.poisson(lam_A) - rng.poisson(lam_B)
    decided = detector.detect_sequence(counts, hset, feedback=cfg.decision_feedback)
    return int(np.count_nonzero(decided != truth))


def particle_counts(cfg: ExperimentConfig, values_by_symbol, scale: float, seed: int) -> np.ndarray:
    """Net receiver counts (K, I) from one particle run of a value sequence."""
    g = cfg.geometry
    distances = cfg.transmitter_distances()[: cfg.M]
    positions = particle.transmitter_positions(distances)
    K = len(values_by_symbol)
    Ts = cfg.symbol_duration
    events = []
    for k, values in enumerate(values_by_symbol):
        for m, v in enumerate(values):
            count = int(round(abs(v) * scale))
            if count:
                sp = particle.SPECIES_A if v > 0 else particle.SPECIES_B
                events.append(particle.EmissionEvent(k * Ts, positions[m], sp, count))
    ref = ChannelGeometry(distances[0], g.receiver_radius, g.diffusion_A)
    ps = cfg.particle_sim
    dt = ps.dt or physics.peak_time(ref) / ps.steps_per_peak
    offsets = sampling_plan(cfg).offsets()
    times = np.concatenate([k * Ts + offsets for k in range(K)])
    sim_cfg = particle.SimConfig(
        dt=dt,
        total_time=K * Ts,
        reaction_radius=ps.reaction_radius,
        diffusion_A=g.diffusion_A,
        diffusion_B=g.diffusion_B,
        emissions=tuple(events),
        receiver_radius=g.receiver_radius,
        seed=seed,
    )
    trace = particle.run(sim_cfg, times)
    return trace.net.reshape(K, -1)


def _particle_chunk(cfg: ExperimentConfig, hset, n: int, ss: np.random.SeedSequence, scale: float) -> int:
    rng = np.random.default_rng(ss)
    K = cfg.symbols_per_trial
    truth = rng.integers(0, len(hset), size=(n, K))
    seeds = rng.integers(0, 2**63 - 1, size=n)
    counts = np.empty((n, K, hset.samples_per_symbol))
    for t in range(n):
        values = [hset[int(h)].values for h in truth[t]]
        counts[t] = particle_counts(cfg, values, scale, int(seeds[t]))
    decided = detector.detect_sequence(counts, hset, feedback=cfg.decision_feedback)
    return int(np.count_nonzero(decided != truth))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_er_experiment(cfg: ExperimentConfig) -> list[ErrorRateRecord]:
    """Error rate at every SNR point of ``cfg``.

    Trials are split into fixed-size chunks, each with its own seed derived
    from ``(seed, snr_index, chunk_index)``, so results do not depend on
    ``workers``.
    """
    cfg.validate()
    records = []
    for s_idx, snr in enumerate(cfg.snr_db):
        model = detection_model(cfg, snr)
        hset = detector.enumerate_hypotheses(cfg.M, cfg.signed_alphabets(), model)
        sizes = [min(cfg.chunk_size, cfg.trials - s) for s in range(0, cfg.trials, cfg.chunk_size)]
        jobs = [(c, n, _chunk_seed(cfg.seed, s_idx, c)) for c, n in enumerate(sizes)]
        if cfg.particle:
            scale = model.encoding.scale
            errs = _map(lambda j: _particle_chunk(cfg, hset, j[1], j[2], scale), jobs, cfg.workers)
        else:
            errs = _map(lambda j: _abstract_chunk(cfg, hset, j[1], j[2]), jobs, cfg.workers)
        bound = analysis.ber_upper_bound(hset, cfg.variance) if cfg.bound and len(hset) > 1 else None
        records.append(ErrorRateRecord(float(snr), sum(errs), cfg.trials * cfg.symbols_per_trial, bound))
    return records


@dataclass
class CirValidation:
    times: np.ndarray  # bin centres, s
    theory_A: np.ndarray  # expected occupancy fraction per released molecule
    theory_B: np.ndarray
    sim_A: np.ndarray
    sim_B: np.ndarray
    t_peak: float
    release_A: int
    release_B: int
    step_times: np.ndarray  # every simulated step, s
    step_bin: np.ndarray  # bin index of each step

    def bin_average(self, per_step: np.ndarray) -> np.ndarray:
        """Average a per-step series into the same bins as the simulated curves."""
        n_bins = len(self.times)
        total = np.bincount(self.step_bin, weights=per_step, minlength=n_bins)
        return total / np.bincount(self.step_bin, minlength=n_bins)

    @property
    def theory_net(self) -> np.ndarray:
        return self.theory_A - self.theory_B

    @property
    def sim_net(self) -> np.ndarray:
        return self.sim_A - self.sim_B

    def empirical_peak_time(self, species: str = "A", window: float = 0.95) -> float:
        """Peak of a least-squares parabola in log-log coordinates through the bins above ``window * max``.

        The curve is flat near its maximum, so a fit over several bins is far
        less noisy than the single highest bin; log-log coordinates make the
        right-skewed peak close to symmetric.
        """
        y = self.sim_A if species == "A" else self.sim_B
        k = int(np.argmax(y))
        lo, hi = k, k
        while lo > 0 and y[lo - 1] >= window * y[k]:
            lo -= 1
        while hi < len(y) - 1 and y[hi + 1] >= window * y[k]:
            hi += 1
        lo, hi = max(0, min(lo, k - 1)), min(len(y) - 1, max(hi, k + 1))
        seg = slice(lo, hi + 1)
        if np.any(y[seg] <= 0):
            return float(self.times[k])
        c2, c1, _ = np.polyfit(np.log(self.times[seg]), np.log(y[seg]), 2)
        if c2 >= 0:
            return float(self.times[k])
        return float(np.exp(-c1 / (2 * c2)))

    def relative_deviation(self, species: str = "A", lo: float = 0.2, hi: float = 5.0) -> np.ndarray:
        """``sim / theory - 1`` on the bins within ``[lo, hi] * t_peak``."""
        sim, th = (self.sim_A, self.theory_A) if species == "A" else (self.sim_B, self.theory_B)
        mask = (self.times >= lo * self.t_peak) & (self.times <= hi * self.t_peak)
        return sim[mask] / th[mask] - 1


def run_cir_validation(cfg: ExperimentConfig) -> CirValidation:
    """Binned receiver occupancy from a particle run next to the closed-form CIR.

    Counts are recorded every step up to ``horizon_peaks * t_peak`` and
    averaged into ``n_bins`` equal time bins; the theory curve is averaged
    over the same step times.
    """
    cfg.validate()
    g = cfg.geometry
    ps = cfg.particle_sim
    d = cfg.transmitter_distances()[0]
    geom_A = ChannelGeometry(d, g.receiver_radius, g.diffusion_A)
    geom_B = ChannelGeometry(d, g.receiver_radius, g.diffusion_B)
    tp = physics.peak_time(geom_A)
    dt = ps.dt or tp / ps.steps_per_peak
    horizon = ps.horizon_peaks * tp
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    step_times = dt * np.arange(1, n_steps + 1)

    pos_A, pos_B = particle.transmitter_positions([d, d])
    Q = ps.release_count
    q_A = Q if ps.species in ("A", "both") else 0
    q_B = Q if ps.species in ("B", "both") else 0
    events = []
    if q_A:
        events.append(particle.EmissionEvent(0.0, pos_A, particle.SPECIES_A, q_A))
    if q_B:
        events.append(particle.EmissionEvent(0.0, pos_B, particle.SPECIES_B, q_B))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sim_cfg = particle.SimConfig(
            dt=dt,
            total_time=step_times[-1],
            reaction_radius=ps.reaction_radius if ps.reaction else 0.0,
            diffusion_A=g.diffusion_A,
            diffusion_B=g.diffusion_B,
            emissions=tuple(events),
            receiver_radius=g.receiver_radius,
            seed=cfg.seed,
        )
    trace = particle.run(sim_cfg, step_times)

    edges = np.linspace(0.0, horizon, ps.n_bins + 1)
    which = np.clip(np.searchsorted(edges, step_times, side="left") - 1, 0, ps.n_bins - 1)
    def binned(values):
        return np.bincount(which, weights=values, minlength=ps.n_bins) / np.bincount(which, minlength=ps.n_bins)

    th_A = physics.cir(step_times, geom_A) if q_A else np.zeros(n_steps)
    th_B = physics.cir(step_times, geom_B) if q_B else np.zeros(n_steps)
    centres = binned(step_times)
    return CirValidation(
        times=centres,
        theory_A=binned(th_A),
        theory_B=binned(th_B),
        sim_A=binned(trace.count_A / q_A) if q_A else np.zeros(ps.n_bins),
        sim_B=binned(trace.count_B / q_B) if q_B else np.zeros(ps.n_bins),
        t_peak=tp,
        release_A=q_A,
        release_B=q_B,
        step_times=step_times,
        step_bin=which,
    )


@dataclass(frozen=True)
class ArithmeticChannel:
    """Equidistant transmitters with the B scale balanced to the A gain."""

    encoding: ValueEncoding
    links: list
    plan: SamplingPlan
    gain_A: float
    isi_gains_A: tuple[float, ...]

    def expected_counts(self, op: str, operands) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-interval ``(lambda_A, lambda_B)`` sample intensities."""
        schedules = encoder.plan_operation(op, operands, self.encoding)
        K = max(s.n_symbols for s in schedules)
        rows = []
        for k in range(1, K + 1):
            lam_A, lam_B = stats.intensity_profile(schedules, self.links, self.plan, k)
            rows.append((lam_A, lam_B))
        return rows

    def context(self, op: str) -> OperationContext:
        return OperationContext(op, self.gain_A, self.isi_gains_A)


def arithmetic_channel(cfg: ExperimentConfig) -> ArithmeticChannel:
    d = cfg.transmitter_distances()[0]
    links = links_for(cfg, [d, d])
    plan = sampling_plan(cfg)
    geom_A = links[0][Species.A]
    geom_B = links[0][Species.B]
    offsets = plan.offsets()
    gain_A = float(np.sum(physics.cir(offsets, geom_A)))
    gain_B = float(np.sum(physics.cir(offsets, geom_B)))
    isi = tuple(
        float(np.sum(physics.cir(offsets + j * plan.symbol_duration, geom_A)))
        for j in range(1, plan.isi_length + 1)
    )
    scale = cfg.arithmetic.lambda_peak / peak_sample_cir(geom_A, plan)
    enc = ValueEncoding(scale, frozenset(cfg.alphabet), scale_B=scale * gain_A / gain_B)
    return ArithmeticChannel(enc, links, plan, gain_A, isi)


@dataclass(frozen=True)
class ArithmeticRow:
    op: str
    a: int
    b: int
    expected: int
    decoded: int

    @property
    def correct(self) -> bool:
        return self.expected == self.decoded


def true_result(op: str, a: int, b: int) -> int:
    return {"add": a + b, "sub": a - b, "mul": a * b, "div": a // b}[op]


def _decode(chan: ArithmeticChannel, op: str, per_interval_counts) -> int:
    ctx = chan.context(op)
    if op in ("add", "sub"):
        return encoder.decode_result(per_interval_counts[0], chan.encoding, ctx)
    return encoder.decode_result(per_interval_counts, chan.encoding, ctx)


def run_arithmetic_demo(cfg: ExperimentConfig):
    """Exhaustive noiseless decoding plus a Poisson Monte Carlo for add/sub.

    Returns ``(rows, summary)``: one row per noiseless case and a dict of
    ``{(op, "noiseless" | "poisson"): accuracy}``.
    """
    cfg.validate()
    chan = arithmetic_channel(cfg)
    values = sorted(cfg.alphabet)
    rows = []
    summary = {}
    for op in cfg.arithmetic.operations:
        op_rows = []
        for a in values:
            for b in values:
                expected = chan.expected_counts(op, [a, b])
                counts = [float(np.sum(lam_A - lam_B)) for lam_A, lam_B in expected]
                op_rows.append(ArithmeticRow(op, a, b, true_result(op, a, b), _decode(chan, op, counts)))
        rows.extend(op_rows)
        summary[(op, "noiseless")] = sum(r.correct for r in op_rows) / len(op_rows)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1,)))
    for op in cfg.arithmetic.operations:
        if op not in ("add", "sub"):
            continue
        ok = 0
        n = cfg.arithmetic.trials
        pairs = rng.integers(0, len(values), size=(n, 2))
        for ia, ib in pairs:
            a, b = values[ia], values[ib]
            lam_A, lam_B = chan.expected_counts(op, [a, b])[0]
            net = float(np.sum(rng.poisson(lam_A) - rng.poisson(lam_B)))
            ok += _decode(chan, op, [net]) == true_result(op, a, b)
        summary[(op, "poisson")] = ok / n
    return rows, summary
