"""Experiment configuration: TOML files mapped onto nested dataclasses.

Top-level keys map onto ``ExperimentConfig`` fields; the ``[geometry]``,
``[particle_sim]`` and ``[arithmetic]`` tables map onto their own dataclasses.
Unknown keys anywhere are errors.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..physics import (
    DEFAULT_DISTANCE,
    DEFAULT_RECEIVER_RADIUS,
    DIFFUSION_A,
    DIFFUSION_B,
    ChannelGeometry,
    check_geometry,
)
from ..particle import DEFAULT_REACTION_RADIUS

MODES = ("cir_validation", "er_vs_snr", "bound_vs_sim", "arithmetic_demo")
DISTANCE_STEP = 2.5e-6


class ConfigError(ValueError):
    pass


def default_distances(M: int) -> list[float]:
    return [DEFAULT_DISTANCE + DISTANCE_STEP * m for m in range(M)]


@dataclass
class GeometryConfig:
    # One distance per transmitter; empty means 10 um + 2.5 um * m.
    distances: list[float] = field(default_factory=list)
    receiver_radius: float = DEFAULT_RECEIVER_RADIUS
    diffusion_A: float = DIFFUSION_A
    diffusion_B: float = DIFFUSION_B


@dataclass
class ParticleSimConfig:
    # dt = 0 means t_peak / steps_per_peak of the reference link.
    dt: float = 0.0
    steps_per_peak: int = 200
    reaction_radius: float = DEFAULT_REACTION_RADIUS
    # Settings used by cir_validation.
    release_count: int = 100_000
    species: str = "A"  # "A", "B" or "both"
    reaction: bool = False
    horizon_peaks: float = 5.0
    n_bins: int = 100


@dataclass
class ArithmeticConfig:
    operations: list[str] = field(default_factory=lambda: ["add", "sub", "mul", "div"])
    lambda_peak: float = 100.0
    trials: int = 10_000


@dataclass
class ExperimentConfig:
    mode: str = "er_vs_snr"
    M: int = 2
    alphabet: list[int] = field(default_factory=lambda: [1, 2])
    # Sign of each transmitter's values; empty means alternating +, -, +, ...
    signs: list[int] = field(default_factory=list)
    samples_per_symbol: int = 60
    symbol_duration: float = 0.03
    isi_length: int = 0
    symbols_per_trial: int = 1
    decision_feedback: bool = True
    snr_db: list[float] = field(default_factory=lambda: [0.0, 3.0, 6.0, 9.0, 12.0])
    trials: int = 10_000
    chunk_size: int = 10_000
    workers: int = 1
    bound: bool = False
    variance: str = "independent"
    noiseless: bool = False
    background: float = 0.0
    particle: bool = False
    seed: int = 0
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    particle_sim: ParticleSimConfig = field(default_factory=ParticleSimConfig)
    arithmetic: ArithmeticConfig = field(default_factory=ArithmeticConfig)

    def transmitter_signs(self) -> list[int]:
        if self.signs:
            return list(self.signs)
        return [1 if m % 2 == 0 else -1 for m in range(self.M)]

    def transmitter_distances(self) -> list[float]:
        return list(self.geometry.distances) or default_distances(self.M)

    def signed_alphabets(self) -> list[list[int]]:
        return [[s * v for v in self.alphabet] for s in self.transmitter_signs()]

    def validate(self) -> ExperimentConfig:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        if not self.alphabet or min(self.alphabet) < 1 or len(set(self.alphabet)) != len(self.alphabet):
            raise ConfigError("alphabet must be distinct positive integers")
        if self.signs and (len(self.signs) != self.M or any(s not in (1, -1) for s in self.signs)):
            raise ConfigError("signs must list +1 or -1 for each of the M transmitters")
        if len(self.transmitter_distances()) < self.M:
            raise ConfigError(f"geometry.distances needs at least M={self.M} entries")
        if any(not d > 0 for d in self.transmitter_distances()):
            raise ConfigError("distances must be positive")
        if self.samples_per_symbol < 1 or not self.symbol_duration > 0:
            raise ConfigError("need samples_per_symbol >= 1 and symbol_duration > 0")
        if self.isi_length < 0 or self.symbols_per_trial < 1:
            raise ConfigError("need isi_length >= 0 and symbols_per_trial >= 1")
        if self.trials < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ConfigError("trials, chunk_size and workers must be >= 1")
        if self.mode in ("er_vs_snr", "bound_vs_sim"):
            if not self.snr_db:
                raise ConfigError("snr_db grid must be nonempty")
            if any(not math.isfinite(x) for x in self.snr_db):
                raise ConfigError("snr_db values must be finite")
        if self.variance not in ("independent", "exact"):
            raise ConfigError("variance must be 'independent' or 'exact'")
        if self.background < 0:
            raise ConfigError("background must be non-negative")
        g = self.geometry
        if not (g.receiver_radius > 0 and g.diffusion_A > 0 and g.diffusion_B > 0):
            raise ConfigError("receiver_radius and diffusion coefficients must be positive")
        p = self.particle_sim
        if p.species not in ("A", "B", "both"):
            raise ConfigError("particle_sim.species must be 'A', 'B' or 'both'")
        if p.dt < 0 or p.steps_per_peak < 1 or p.reaction_radius < 0 or p.release_count < 0:
            raise ConfigError("invalid particle_sim settings")
        if p.n_bins < 3 or not p.horizon_peaks > 0:
            raise ConfigError("particle_sim needs n_bins >= 3 and horizon_peaks > 0")
        a = self.arithmetic
        bad = set(a.operations) - {"add", "sub", "mul", "div"}
        if bad:
            raise ConfigError(f"unknown arithmetic operations {sorted(bad)}")
        if not a.lambda_peak > 0 or a.trials < 1:
            raise ConfigError("arithmetic needs lambda_peak > 0 and trials >= 1")
        return self


_SECTIONS = {
    "geometry": GeometryConfig,
    "particle_sim": ParticleSimConfig,
    "arithmetic": ArithmeticConfig,
}


def _build(cls, data: dict, where: str):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS and cls is ExperimentConfig:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table")
            kwargs[key] = _build(_SECTIONS[key], value, f"[{key}]")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "top level").validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = config_from_dict(data)
    for d in cfg.transmitter_distances()[: cfg.M]:
        check_geometry(ChannelGeometry(d, cfg.geometry.receiver_radius, cfg.geometry.diffusion_A))
    return cfg
