import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcarith.encoder import EmissionSchedule, Release, Species
from mcarith.physics import ChannelGeometry, cir
from mcarith.stats import (
    CountObservation,
    DegenerateDistributionError,
    IntensityPair,
    SamplingPlan,
    gaussian_loglik,
    intensity,
    intensity_profile,
    poisson_logpmf,
    poisson_pmf,
    sample_counts,
    skellam_pmf,
)
from oracles import poisson_pmf_direct, skellam_bruteforce

GA = ChannelGeometry(10e-6, 5e-6, 2.2e-9)
GB = ChannelGeometry(10e-6, 5e-6, 1.5e-9)
LINK = {Species.A: GA, Species.B: GB}
PLAN = SamplingPlan(0.03, 10, isi_length=2)


def sched(tx, *releases):
    return EmissionSchedule(tx, tuple(Release(s, sp, q) for s, sp, q in releases))


def test_sampling_offsets_exclude_zero():
    off = SamplingPlan(0.03, 6).offsets()
    assert off[0] == pytest.approx(0.005)
    assert off[-1] == pytest.approx(0.03)
    assert len(off) == 6


def test_silence_gives_zero_intensity():
    lam_A, lam_B = intensity_profile([sched(0)], [LINK], PLAN, symbol=3)
    assert np.all(lam_A == 0) and np.all(lam_B == 0)


def test_single_transmitter_no_isi():
    plan = SamplingPlan(0.03, 10)
    lam_A, lam_B = intensity_profile([sched(0, (1, Species.A, 300.0))], [LINK], plan, symbol=1)
    assert np.array_equal(lam_A, 300.0 * cir(plan.offsets(), GA))
    assert np.all(lam_B == 0)


def test_two_identical_transmitters_double():
    s0 = sched(0, (1, Species.A, 250.0))
    s1 = sched(1, (1, Species.A, 250.0))
    one, _ = intensity_profile([s0], [LINK, LINK], PLAN, symbol=1)
    two, _ = intensity_profile([s0, s1], [LINK, LINK], PLAN, symbol=1)
    assert np.array_equal(two, 2 * one)


def test_additive_over_transmitters_and_history():
    s0 = sched(0, (1, Species.A, 100.0), (2, Species.B, 50.0), (3, Species.A, 70.0))
    s1 = sched(1, (1, Species.B, 30.0), (3, Species.B, 20.0))
    links = [LINK, {Species.A: GA.with_diffusion(2.0e-9), Species.B: GB}]
    lam_A, lam_B = intensity_profile([s0, s1], links, PLAN, symbol=3)
    # term by term: every (transmitter, species, lag) contribution on its own
    off = PLAN.offsets()
    exp_A = np.zeros_like(off)
    exp_B = np.zeros_like(off)
    for s, link in ((s0, links[0]), (s1, links[1])):
        for j in range(3):
            for sp, acc in ((Species.A, exp_A), (Species.B, exp_B)):
                q = s.count(3 - j, sp)
                if q:
                    acc += q * cir(off + j * PLAN.symbol_duration, link[sp])
    assert np.allclose(lam_A, exp_A, rtol=1e-14, atol=0)
    assert np.allclose(lam_B, exp_B, rtol=1e-14, atol=0)


def test_isi_truncated_by_length():
    s0 = sched(0, (1, Species.A, 100.0))
    short = SamplingPlan(0.03, 10, isi_length=1)
    a2, _ = intensity_profile([s0], [LINK], short, symbol=2)
    a3, _ = intensity_profile([s0], [LINK], short, symbol=3)
    assert np.all(a2 > 0)
    assert np.all(a3 == 0)


def test_intensity_picks_one_sample():
    s0 = sched(0, (1, Species.A, 100.0), (1, Species.B, 40.0))
    lam_A, lam_B = intensity_profile([s0], [LINK], PLAN, 1)
    pair = intensity([s0], [LINK], PLAN, 1, sample=4)
    assert pair == IntensityPair(lam_A[3], lam_B[3])
    with pytest.raises(ValueError):
        intensity([s0], [LINK], PLAN, 1, sample=0)


def test_background_added_per_species():
    lam_A, lam_B = intensity_profile([sched(0)], [LINK], PLAN, 1, background=0.5)
    assert np.all(lam_A == 0.5) and np.all(lam_B == 0.5)


def test_missing_link_rejected():
    with pytest.raises(ValueError):
        intensity_profile([sched(3, (1, Species.A, 1.0))], [LINK], PLAN, 1)


def test_poisson_edge_values():
    assert poisson_pmf(0.0, 0) == 1.0
    assert poisson_pmf(0.0, 3) == 0.0
    with pytest.raises(ValueError):
        poisson_pmf(2.0, -1)
    assert sum(poisson_pmf(4.0, n) for n in range(201)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0, 11.5, 20.0])
def test_poisson_matches_direct(lam):
    for n in range(51):
        assert poisson_pmf(lam, n) == pytest.approx(poisson_pmf_direct(lam, n), rel=1e-12)


def test_poisson_logpmf_large_lambda_finite():
    assert math.isfinite(poisson_logpmf(1e6, 1_000_000))
    assert poisson_pmf(1e4, 10_000) == pytest.approx(1 / math.sqrt(2 * math.pi * 1e4), rel=1e-4)


@pytest.mark.parametrize("a,b", [(3, 2), (20, 20), (100, 30), (0.4, 7.5)])
def test_skellam_matches_convolution(a, b):
    n = np.arange(-60, 61)
    got = skellam_pmf(IntensityPair(a, b), n)
    ref = np.array([skellam_bruteforce(a, b, int(k)) for k in n])
    assert np.max(np.abs(got - ref)) < 1e-10


def test_skellam_convolution_branch_matches_bessel_branch():
    # 350 + 300 runs the truncated convolution; compare with the Bessel form
    from mcarith.stats import _skellam_bessel

    n = np.arange(-100, 201)
    got = skellam_pmf(IntensityPair(350.0, 300.0), n)
    ref = _skellam_bessel(350.0, 300.0, n)
    assert np.allclose(got, ref, rtol=1e-9, atol=1e-300)


@pytest.mark.parametrize("a,b", [(3, 2), (20, 20), (100, 30), (400, 350)])
def test_skellam_moments(a, b):
    sd = math.sqrt(a + b)
    n = np.arange(int(a - b - 20 * sd) - 20, int(a - b + 20 * sd) + 20)
    p = skellam_pmf(IntensityPair(a, b), n)
    mean = float(np.sum(n * p))
    var = float(np.sum((n - (a - b)) ** 2 * p))
    assert np.sum(p) == pytest.approx(1.0, abs=1e-12)
    assert mean == pytest.approx(a - b, abs=1e-8)
    assert var == pytest.approx(a + b, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.01, 150.0), n=st.integers(0, 200))
def test_skellam_symmetric_when_equal(lam, n):
    pair = IntensityPair(lam, lam)
    assert skellam_pmf(pair, n) == pytest.approx(skellam_pmf(pair, -n), rel=1e-12, abs=1e-300)


def test_skellam_reduces_to_poisson():
    for n in range(-5, 40):
        expect = poisson_pmf(6.5, n) if n >= 0 else 0.0
        assert skellam_pmf(IntensityPair(6.5, 0.0), n) == pytest.approx(expect, rel=1e-12, abs=0)
        mirror = poisson_pmf(6.5, -n) if n <= 0 else 0.0
        assert skellam_pmf(IntensityPair(0.0, 6.5), n) == pytest.approx(mirror, rel=1e-12, abs=0)


def test_gaussian_loglik_at_mean():
    pair = IntensityPair(9.0, 4.0)
    assert gaussian_loglik(5.0, pair) == pytest.approx(-0.5 * math.log(2 * math.pi * 13.0), rel=1e-15)
    sym = IntensityPair(7.0, 7.0)
    for n in range(10):
        assert gaussian_loglik(n, sym) == gaussian_loglik(-n, sym)
    with pytest.raises(DegenerateDistributionError):
        gaussian_loglik(0, IntensityPair(0.0, 0.0))


def _tv(a, b):
    pair = IntensityPair(a, b)
    sd = math.sqrt(a + b)
    n = np.arange(math.floor(a - b - 6 * sd), math.ceil(a - b + 6 * sd) + 1)
    return 0.5 * np.sum(np.abs(np.exp(gaussian_loglik(n, pair)) - skellam_pmf(pair, n)))


def test_gaussian_close_to_skellam_at_high_intensity():
    assert _tv(500, 300) < 0.01


@pytest.mark.parametrize("ratio", [1.0, 2.0])
def test_gaussian_error_decreases_with_intensity(ratio):
    tvs = [_tv(ratio * m, m) for m in (1, 5, 20, 100, 500)]
    assert all(x > y for x, y in zip(tvs, tvs[1:]))


def test_sample_counts_moments():
    rng = np.random.default_rng(42)
    a, b = sample_counts(IntensityPair(7.0, 0.0), rng, size=1_000_000)
    assert np.all(b == 0)
    assert abs(a.mean() - 7) < 0.03
    assert abs(a.var() - 7) < 0.15


def test_count_observation_consistency():
    obs = CountObservation.from_species([5, 2], [1, 4])
    assert obs.net == (4, -2)
    with pytest.raises(ValueError):
        CountObservation((1,), (3,), (1,))
    with pytest.raises(ValueError):
        CountObservation((1,), (1,), None)
