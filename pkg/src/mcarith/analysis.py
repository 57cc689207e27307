"""Pairwise error analysis for the Gaussian-metric detector.

For a true hypothesis ``r`` and an alternative ``e`` the detector errs when

    Z = sum_i (N_i - mu_e)^2 / (2 var_e) - (N_i - mu_r)^2 / (2 var_r) + 1/2 ln(var_e / var_r)

is non-positive, with ``N_i ~ Normal(mu_r, var_r)``. Treating ``Z`` as Gaussian
gives ``P(Z <= 0) ~= Q(E[Z] / sqrt(Var Z))``. The error-rate bound is the union
of these pairwise terms averaged over equally likely true hypotheses.

Two forms of ``Var Z`` are available:

``"independent"``
    Treats the two quadratic terms as independent. This overstates the
    variance by ``sum_i var_r / var_e`` and makes each pairwise term larger,
    which is what keeps the union sum above simulated error rates.
``"exact"``
    The true variance of ``Z`` under the Gaussian observation model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .detector import Hypothesis, HypothesisSet

VARIANCE_FORMS = ("independent", "exact")

# erfc keeps ~1e-13 relative accuracy up to here; beyond it use the scaled form.
_Q_DIRECT_LIMIT = 8.0


@dataclass(frozen=True)
class PairwiseStats:
    expected_Z: float
    variance_Z: float
    pairwise_error_probability: float


def q_function(x):
    """Standard Gaussian upper tail probability."""
    x_arr = np.asarray(x, dtype=float)
    out = np.where(
        x_arr <= _Q_DIRECT_LIMIT,
        0.5 * erfc(x_arr / math.sqrt(2)),
        np.exp(log_q_function(np.maximum(x_arr, _Q_DIRECT_LIMIT))),
    )
    return float(out) if out.ndim == 0 else out


def log_q_function(x):
    """``log Q(x)``, finite far into the tail where ``Q`` itself underflows."""
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        direct = np.log(0.5 * erfc(x_arr / math.sqrt(2)))
    # Q(x) = 1/2 erfcx(x/sqrt2) exp(-x^2/2)
    scaled = np.log(0.5 * erfcx(np.maximum(x_arr, 0) / math.sqrt(2))) - 0.5 * np.maximum(x_arr, 0) ** 2
    out = np.where(x_arr <= _Q_DIRECT_LIMIT, direct, scaled)
    return float(out) if out.ndim == 0 else out


def _moments(mu_r, var_r, mu_e, var_e, variance: str):
    if variance not in VARIANCE_FORMS:
        raise ValueError(f"variance must be one of {VARIANCE_FORMS}, got {variance!r}")
    if np.any(var_r <= 0) or np.any(var_e <= 0):
        raise ValueError("z moments need strictly positive variances")
    d2 = (mu_r - mu_e) ** 2
    ratio = var_r / var_e
    mean = np.sum((var_r + d2) / (2 * var_e) - 0.5 + 0.5 * np.log(var_e / var_r), axis=-1)
    var = np.sum((2 * var_r**2 + 4 * var_r * d2) / (4 * var_e**2) + 0.5, axis=-1)
    if variance == "exact":
        var = var - np.sum(ratio, axis=-1)
    return mean, var


def z_moments(true_hyp: Hypothesis, alt_hyp: Hypothesis, variance: str = "independent"):
    """``(E[Z], Var(Z))`` for deciding ``alt_hyp`` when ``true_hyp`` was sent."""
    if true_hyp.lambda_A.shape != alt_hyp.lambda_A.shape:
        raise ValueError("hypotheses have different sample counts")
    mean, var = _moments(true_hyp.mean, true_hyp.variance, alt_hyp.mean, alt_hyp.variance, variance)
    return float(mean), float(var)


def _pairwise_from_moments(mean, var):
    mean = np.asarray(mean, dtype=float)
    var = np.asarray(var, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.where(var > 0, mean / np.sqrt(var), np.where(mean > 0, np.inf, 0.0))
    return q_function(arg)


def pairwise_error(true_hyp: Hypothesis, alt_hyp: Hypothesis, variance: str = "independent") -> float:
    mean, var = z_moments(true_hyp, alt_hyp, variance)
    return float(_pairwise_from_moments(mean, var))


def pairwise_stats(true_hyp: Hypothesis, alt_hyp: Hypothesis, variance: str = "independent") -> PairwiseStats:
    mean, var = z_moments(true_hyp, alt_hyp, variance)
    return PairwiseStats(mean, var, float(_pairwise_from_moments(mean, var)))


def pairwise_matrix(hset: HypothesisSet, variance: str = "independent") -> np.ndarray:
    """(H, H) matrix of pairwise error terms, true hypothesis on the rows."""
    mu = hset.lambda_A - hset.lambda_B
    var = hset.lambda_A + hset.lambda_B
    H = len(hset)
    out = np.zeros((H, H))
    for r in range(H):
        mean, v = _moments(mu[r][None], var[r][None], mu, var, variance)
        out[r] = _pairwise_from_moments(mean, v)
    np.fill_diagonal(out, 0.0)
    return out


def ber_upper_bound(hset: HypothesisSet, variance: str = "independent") -> float:
    """Union bound on the computation error rate, clamped to [0, 1]."""
    H = len(hset)
    if H < 2:
        raise ValueError("the bound needs at least two hypotheses")
    # Fixed row-then-column reduction order.
    total = float(np.sum(pairwise_matrix(hset, variance).sum(axis=1)))
    return min(1.0, max(0.0, total / H))
