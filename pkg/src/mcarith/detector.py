"""Multi-sample MAP detection over the set of joint transmitter values.

Every hypothesis is a tuple of signed values, one per transmitter. Its
per-sample intensities are precomputed from the channel model and scored
with the summed Gaussian log-likelihood; priors are uniform, so MAP is ML.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .encoder import ValueEncoding, schedules_for_values
from .stats import CountObservation, IntensityPair, Links, SamplingPlan, intensity_profile

DEFAULT_ENUMERATION_CAP = 10**6

# Upper bound on (trials x hypotheses x samples) held in memory at once.
_SCORE_BLOCK = 2_000_000


class CapacityError(RuntimeError):
    pass


class DegenerateHypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionModel:
    """Channel context needed to turn value assignments into intensities."""

    links: Links
    plan: SamplingPlan
    encoding: ValueEncoding
    background: float = 0.0

    def lag_profile(self, values: Sequence[int], lag: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Intensities produced ``lag`` symbols after emitting ``values``, without background."""
        if len(values) > len(self.links):
            raise ValueError(f"{len(values)} values but only {len(self.links)} links")
        schedules = schedules_for_values(values, self.encoding)
        plan = self.plan
        if lag > plan.isi_length:
            plan = SamplingPlan(plan.symbol_duration, plan.samples_per_symbol, lag)
        return intensity_profile(schedules, self.links, plan, symbol=1 + lag)


@dataclass(eq=False)
class Hypothesis:
    values: tuple[int, ...]
    lambda_A: np.ndarray
    lambda_B: np.ndarray
    index: int = 0

    @property
    def mean(self) -> np.ndarray:
        return self.lambda_A - self.lambda_B

    @property
    def variance(self) -> np.ndarray:
        return self.lambda_A + self.lambda_B

    @property
    def is_silent(self) -> bool:
        return all(v == 0 for v in self.values)

    def pairs(self) -> list[IntensityPair]:
        return [IntensityPair(float(a), float(b)) for a, b in zip(self.lambda_A, self.lambda_B)]


@dataclass(eq=False)
class HypothesisSet:
    hypotheses: list[Hypothesis]
    D: int
    M: int
    # (H, L, I) intensities of each hypothesis 1..L symbols after emission.
    isi_A: np.ndarray | None = None
    isi_B: np.ndarray | None = None
    lambda_A: np.ndarray = field(init=False)
    lambda_B: np.ndarray = field(init=False)

    def __post_init__(self):
        values = [h.values for h in self.hypotheses]
        if len(set(values)) != len(values):
            raise ValueError("duplicate value assignments in hypothesis set")
        self.lambda_A = np.stack([h.lambda_A for h in self.hypotheses])
        self.lambda_B = np.stack([h.lambda_B for h in self.hypotheses])

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __getitem__(self, k: int) -> Hypothesis:
        return self.hypotheses[k]

    @property
    def samples_per_symbol(self) -> int:
        return self.lambda_A.shape[1]

    @property
    def isi_length(self) -> int:
        return 0 if self.isi_A is None else self.isi_A.shape[1]


def _per_transmitter(alphabet, M: int) -> list[list[int]]:
    alphabet = list(alphabet)
    if alphabet and isinstance(alphabet[0], (list, tuple)):
        if len(alphabet) != M:
            raise ValueError(f"got {len(alphabet)} per-transmitter alphabets for M={M}")
        return [list(a) for a in alphabet]
    return [alphabet] * M


def enumerate_hypotheses(
    M: int,
    alphabet,
    model: DetectionModel,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> HypothesisSet:
    """All joint assignments, lexicographic in transmitter then alphabet order.

    ``alphabet`` is a list of signed values shared by every transmitter, or a
    list of ``M`` such lists.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    per_tx = _per_transmitter(alphabet, M)
    sizes = {len(a) for a in per_tx}
    if 0 in sizes:
        raise ValueError("alphabet must be nonempty")
    if len(sizes) != 1:
        raise ValueError("all transmitters need the same number of values")
    D = sizes.pop()
    if D**M > cap:
        raise CapacityError(f"|S| = {D}^{M} = {D**M} exceeds the enumeration cap {cap}")

    bg = model.background
    L = model.plan.isi_length
    hyps, isi_A, isi_B = [], [], []
    for k, values in enumerate(itertools.product(*per_tx)):
        lam_A, lam_B = model.lag_profile(values)
        h = Hypothesis(tuple(values), lam_A + bg, lam_B + bg, k)
        if not h.is_silent and np.any(h.variance <= 0):
            raise DegenerateHypothesisError(f"hypothesis {values} has zero variance at some sample")
        hyps.append(h)
        if L:
            lags = [model.lag_profile(values, j) for j in range(1, L + 1)]
            isi_A.append(np.stack([a for a, _ in lags]))
            isi_B.append(np.stack([b for _, b in lags]))
    if L:
        return HypothesisSet(hyps, D, M, np.stack(isi_A), np.stack(isi_B))
    return HypothesisSet(hyps, D, M)


def _score_block(N: np.ndarray, lam_A: np.ndarray, lam_B: np.ndarray) -> np.ndarray:
    """Summed log-likelihoods, ``N`` is (T, I) and intensities (T or 1, H, I)."""
    mu = lam_A - lam_B
    var = lam_A + lam_B
    diff = N[:, None, :] - mu
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -(diff**2) / (2 * var) - 0.5 * np.log(2 * math.pi * var)
    degenerate = var <= 0
    if np.any(degenerate):
        # Silent hypothesis: a point mass at zero.
        terms = np.where(degenerate, np.where(diff == 0, 0.0, -np.inf), terms)
    return terms.sum(axis=2)


def score(counts, hset: HypothesisSet, isi_A=None, isi_B=None) -> np.ndarray:
    """Log-likelihood of every hypothesis for a batch of observations.

    ``counts`` is (T, I) net counts. ``isi_A``/``isi_B`` are optional (T, I)
    intensities from earlier symbols added to every hypothesis.
    """
    N = np.atleast_2d(np.asarray(counts, dtype=float))
    T, I = N.shape
    if I != hset.samples_per_symbol:
        raise ValueError(f"observation has {I} samples, hypotheses have {hset.samples_per_symbol}")
    H = len(hset)
    out = np.empty((T, H))
    block = max(1, _SCORE_BLOCK // (H * I))
    for s in range(0, T, block):
        e = min(T, s + block)
        lam_A = hset.lambda_A[None]
        lam_B = hset.lambda_B[None]
        if isi_A is not None:
            lam_A = lam_A + np.asarray(isi_A, dtype=float)[s:e, None, :]
            lam_B = lam_B + np.asarray(isi_B, dtype=float)[s:e, None, :]
        out[s:e] = _score_block(N[s:e], lam_A, lam_B)
    return out


def detect(counts, hset: HypothesisSet, isi_A=None, isi_B=None) -> np.ndarray:
    """Index of the most likely hypothesis for each observation row.

    Ties go to the lowest index (``argmax`` returns the first maximum).
    """
    return np.argmax(score(counts, hset, isi_A, isi_B), axis=1)


def map_detect(obs: CountObservation, hset: HypothesisSet) -> Hypothesis:
    return hset[int(detect(np.asarray(obs.net)[None, :], hset)[0])]


def isi_from_decisions(hset: HypothesisSet, history: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ISI intensities at the current symbol given earlier decided indices.

    ``history`` is (T, n) with the most recent symbol last; only the last
    ``isi_length`` columns matter.
    """
    T = history.shape[0]
    I = hset.samples_per_symbol
    isi_A = np.zeros((T, I))
    isi_B = np.zeros((T, I))
    for j in range(1, min(hset.isi_length, history.shape[1]) + 1):
        past = history[:, -j]
        isi_A += hset.isi_A[past, j - 1]
        isi_B += hset.isi_B[past, j - 1]
    return isi_A, isi_B


def detect_sequence(counts: np.ndarray, hset: HypothesisSet, feedback: bool = True) -> np.ndarray:
    """Symbol-by-symbol detection of (T, K, I) counts with optional decision feedback."""
    T, K, _ = counts.shape
    decided = np.zeros((T, K), dtype=np.int64)
    for k in range(K):
        if feedback and hset.isi_length and k > 0:
            isi_A, isi_B = isi_from_decisions(hset, decided[:, :k])
            decided[:, k] = detect(counts[:, k], hset, isi_A, isi_B)
        else:
            decided[:, k] = detect(counts[:, k], hset)
    return decided
