"""Receiver count statistics.

Each sample of species A and B is Poisson with an intensity that sums the
current release and up to ``isi_length`` earlier ones. The observed net count
``N = N_A - N_B`` is therefore Skellam; the detector uses its Gaussian
approximation with mean ``lam_A - lam_B`` and variance ``lam_A + lam_B``.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive

from .encoder import EmissionSchedule, Species
from .physics import ChannelGeometry, cir

# Per-transmitter geometry for each species (species differ in diffusion coefficient).
Links = Sequence[Mapping[Species, ChannelGeometry]]

# Above this total intensity the Bessel form loses too much to cancellation.
_BESSEL_MAX_INTENSITY = 600.0


class DegenerateDistributionError(ValueError):
    """Both intensities are zero, so the Gaussian approximation has no variance."""


@dataclass(frozen=True)
class SamplingPlan:
    symbol_duration: float
    samples_per_symbol: int
    isi_length: int = 0

    def __post_init__(self):
        if not self.symbol_duration > 0:
            raise ValueError("symbol_duration must be positive")
        if self.samples_per_symbol < 1:
            raise ValueError("samples_per_symbol must be >= 1")
        if self.isi_length < 0:
            raise ValueError("isi_length must be >= 0")

    def offsets(self) -> np.ndarray:
        """Sampling instants within a symbol, ``(i/I) Ts`` for ``i = 1..I``."""
        I = self.samples_per_symbol
        return np.arange(1, I + 1) / I * self.symbol_duration


@dataclass(frozen=True)
class IntensityPair:
    lambda_A: float
    lambda_B: float

    def __post_init__(self):
        if self.lambda_A < 0 or self.lambda_B < 0:
            raise ValueError("intensities must be non-negative")

    @property
    def mean(self) -> float:
        return self.lambda_A - self.lambda_B

    @property
    def variance(self) -> float:
        return self.lambda_A + self.lambda_B


@dataclass(frozen=True)
class CountObservation:
    net: tuple[int, ...]
    count_A: tuple[int, ...] | None = None
    count_B: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.count_A is None) != (self.count_B is None):
            raise ValueError("give both per-species count sequences or neither")
        if self.count_A is not None:
            if not (len(self.count_A) == len(self.count_B) == len(self.net)):
                raise ValueError("count sequences differ in length")
            for n, a, b in zip(self.net, self.count_A, self.count_B):
                if a < 0 or b < 0 or n != a - b:
                    raise ValueError("per-species counts inconsistent with net counts")

    @classmethod
    def from_species(cls, count_A, count_B) -> CountObservation:
        a = tuple(int(x) for x in count_A)
        b = tuple(int(x) for x in count_B)
        return cls(tuple(x - y for x, y in zip(a, b)), a, b)


def intensity_profile(
    schedules: Sequence[EmissionSchedule],
    links: Links,
    plan: SamplingPlan,
    symbol: int,
    background: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Intensities of A and B at every sample of symbol ``symbol`` (1-based)."""
    if symbol < 1:
        raise ValueError("symbol indices start at 1")
    offsets = plan.offsets()
    lam = {Species.A: np.full(offsets.shape, float(background)),
           Species.B: np.full(offsets.shape, float(background))}
    L = min(symbol - 1, plan.isi_length)
    for sched in schedules:
        if not 0 <= sched.transmitter_id < len(links):
            raise ValueError(f"no link geometry for transmitter {sched.transmitter_id}")
        link = links[sched.transmitter_id]
        for species in Species:
            for j in range(L + 1):
                q = sched.count(symbol - j, species)
                if q:
                    lam[species] += q * cir(offsets + j * plan.symbol_duration, link[species])
    return lam[Species.A], lam[Species.B]


def intensity(
    schedules: Sequence[EmissionSchedule],
    links: Links,
    plan: SamplingPlan,
    symbol: int,
    sample: int,
    background: float = 0.0,
) -> IntensityPair:
    """Intensity pair at sample ``sample`` (1..I) of symbol ``symbol``."""
    if not 1 <= sample <= plan.samples_per_symbol:
        raise ValueError(f"sample index {sample} outside 1..{plan.samples_per_symbol}")
    lam_A, lam_B = intensity_profile(schedules, links, plan, symbol, background)
    return IntensityPair(float(lam_A[sample - 1]), float(lam_B[sample - 1]))


def poisson_logpmf(lam: float, n):
    n = np.asarray(n)
    if lam == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return n * math.log(lam) - lam - gammaln(n + 1)


def poisson_pmf(lam: float, n: int) -> float:
    if lam < 0 or n < 0:
        raise ValueError("poisson_pmf needs lam >= 0 and n >= 0")
    if lam == 0:
        return 1.0 if n == 0 else 0.0
    # direct form is exact for small arguments; n! overflows a float past 170
    if lam > 20 or n > 100:
        return math.exp(float(poisson_logpmf(lam, n)))
    return lam**n * math.exp(-lam) / math.factorial(n)


def _skellam_bessel(a: float, b: float, n: np.ndarray) -> np.ndarray:
    # e^{-(a+b)} (a/b)^{n/2} I_|n|(2 sqrt(ab)), with I scaled by e^{-x} for stability.
    x = 2.0 * math.sqrt(a * b)
    logp = -(a + b) + x + 0.5 * n * math.log(a / b)
    return np.exp(logp) * ive(np.abs(n), x)


def _skellam_convolution(a: float, b: float, n: np.ndarray) -> np.ndarray:
    kmax = int(math.ceil(b + 12.0 * math.sqrt(b) + 12))
    k = np.arange(kmax + 1)
    log_pb = poisson_logpmf(b, k)
    out = np.empty(n.shape)
    for idx, nn in np.ndenumerate(n):
        m = nn + k
        valid = m >= 0
        terms = np.zeros(k.shape)
        terms[valid] = np.exp(poisson_logpmf(a, m[valid]) + log_pb[valid])
        out[idx] = terms.sum()
    return out


def skellam_pmf(pair: IntensityPair, n):
    """Exact probability that ``N_A - N_B == n``. Vectorised over ``n``."""
    a, b = pair.lambda_A, pair.lambda_B
    n_arr = np.asarray(n, dtype=np.int64)
    if b == 0:
        out = np.where(n_arr >= 0, np.exp(poisson_logpmf(a, np.maximum(n_arr, 0))), 0.0)
    elif a == 0:
        out = np.where(n_arr <= 0, np.exp(poisson_logpmf(b, np.maximum(-n_arr, 0))), 0.0)
    elif a + b <= _BESSEL_MAX_INTENSITY:
        out = _skellam_bessel(a, b, n_arr)
    else:
        out = _skellam_convolution(a, b, n_arr)
    if np.ndim(n) == 0:
        return float(out)
    return out


def gaussian_loglik(n, pair: IntensityPair):
    var = pair.variance
    if var <= 0:
        raise DegenerateDistributionError("both intensities are zero")
    n = np.asarray(n, dtype=float)
    out = -((n - pair.mean) ** 2) / (2 * var) - 0.5 * math.log(2 * math.pi * var)
    return float(out) if out.ndim == 0 else out


def sample_counts(pair: IntensityPair, rng: np.random.Generator, size=None):
    """Independent Poisson draws ``(N_A, N_B)``."""
    return rng.poisson(pair.lambda_A, size), rng.poisson(pair.lambda_B, size)
