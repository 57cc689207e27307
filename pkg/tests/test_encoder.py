import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcarith.encoder import (
    EmissionSchedule,
    EncodingError,
    OperationContext,
    Release,
    Species,
    ValueEncoding,
    decode_division,
    decode_intervals,
    decode_result,
    division_intervals,
    encode_value,
    plan_operation,
    repeat_schedules,
    round_half_toward_zero,
    schedules_for_values,
)
from mcarith.physics import ChannelGeometry, cir
from mcarith.stats import SamplingPlan, intensity_profile

ENC = ValueEncoding(100, frozenset({1, 2, 3, 4}))
VALUES = [1, 2, 3, 4]


def test_encode_examples():
    assert encode_value(3, ENC) == (Species.A, 300)
    assert encode_value(-2, ENC) == (Species.B, 200)
    assert encode_value(0, ENC) == (None, 0)
    with pytest.raises(EncodingError):
        encode_value(5, ENC)


def test_separate_scale_for_negative_species():
    enc = ValueEncoding(100, frozenset({1, 2}), scale_B=150.0)
    assert encode_value(-2, enc) == (Species.B, 300.0)
    assert encode_value(2, enc) == (Species.A, 200)


def test_plan_add_and_sub():
    add = plan_operation("add", [2, 3], ENC)
    assert [s.releases for s in add] == [
        (Release(1, Species.A, 200),),
        (Release(1, Species.A, 300),),
    ]
    sub = plan_operation("sub", [3, 1], ENC)
    assert sub[0].releases == (Release(1, Species.A, 300),)
    assert sub[1].releases == (Release(1, Species.B, 100),)


def test_plan_mul_is_repeated_addition():
    mul = plan_operation("mul", [2, 3], ENC)
    assert mul == repeat_schedules(plan_operation("add", [2], ENC), 3)
    assert [r.symbol for r in mul[0].releases] == [1, 2, 3]
    assert sum(r.count for r in mul[0].releases) == 600


@given(a=st.sampled_from(VALUES), b=st.sampled_from(VALUES), op=st.sampled_from(["add", "sub", "mul", "div"]))
def test_positive_operands_never_emit_B_on_their_transmitter(a, b, op):
    schedules = plan_operation(op, [a, b], ENC)
    assert all(r.species is Species.A for r in schedules[0].releases)
    if op == "add":
        assert all(r.species is Species.A for r in schedules[1].releases)


def test_plan_div_layout():
    div = plan_operation("div", [4, 3], ENC)
    assert div[0].releases == (Release(1, Species.A, 400),)
    assert len(div[1].releases) == division_intervals(ENC) == 5
    assert all(r.species is Species.B and r.count == 300 for r in div[1].releases)


@pytest.mark.parametrize(
    "op,operands",
    [("div", [1, 0]), ("div", [-1, 2]), ("mul", [2, 5]), ("mul", [2, 0]), ("pow", [1, 2]), ("sub", [1])],
)
def test_invalid_plans(op, operands):
    with pytest.raises(EncodingError):
        plan_operation(op, operands, ENC)


def test_schedule_rejects_duplicates_and_negative_counts():
    with pytest.raises(ValueError):
        EmissionSchedule(0, (Release(1, Species.A, 1), Release(1, Species.A, 2)))
    with pytest.raises(ValueError):
        EmissionSchedule(0, (Release(1, Species.A, -1),))


@pytest.mark.parametrize("x,expect", [(0.5, 0), (-0.5, 0), (1.5, 1), (-1.5, -1), (1.51, 2), (-2.49, -2), (0.0, 0)])
def test_round_half_toward_zero(x, expect):
    assert round_half_toward_zero(x) == expect


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_rounding_is_sign_symmetric(x):
    assert round_half_toward_zero(-x) == -round_half_toward_zero(x)
    assert abs(round_half_toward_zero(x) - x) <= 0.5


def test_decode_exact_counts():
    ctx = OperationContext("add", gain=0.25)
    assert decode_result(5 * 100 * 0.25, ENC, ctx) == 5
    assert decode_result(0.0, ENC, ctx) == 0
    assert decode_result(-3 * 100 * 0.25, ENC, OperationContext("sub", 0.25)) == -3


def test_decode_intervals_subtracts_decided_isi():
    ctx = OperationContext("mul", gain=1.0, isi_gains=(0.5, 0.25))
    units = [3, 3, 3]
    counts = []
    for k in range(3):
        c = units[k] * 100.0
        c += sum(units[k - j] * 100.0 * g for j, g in enumerate(ctx.isi_gains, 1) if k - j >= 0)
        counts.append(c)
    assert decode_intervals(counts, ENC, ctx) == units
    assert decode_result(counts, ENC, ctx) == 9


@pytest.mark.parametrize("a,b", list(itertools.product(VALUES, VALUES)))
def test_decode_division(a, b):
    n = division_intervals(ENC)
    per = [a - b] + [-b] * (n - 1)
    ctx = OperationContext("div", gain=1.0)
    q, rem, residual = decode_division([u * 100.0 for u in per], ENC, ctx)
    assert (q, rem) == (a // b, a % b)
    assert residual == pytest.approx(rem * 100.0)


# Expected counts over a real channel: two equidistant transmitters, A and B
# scales balanced so one unit of either species gives the same accumulated count.
GA = ChannelGeometry(10e-6, 5e-6, 2.2e-9)
GB = GA.with_diffusion(1.5e-9)
LINKS = [{Species.A: GA, Species.B: GB}] * 2
PLAN = SamplingPlan(0.03, 60)
GAIN_A = float(np.sum(cir(PLAN.offsets(), GA)))
GAIN_B = float(np.sum(cir(PLAN.offsets(), GB)))
SCALE = 100 / max(cir(PLAN.offsets(), GA))
BALANCED = ValueEncoding(SCALE, frozenset(VALUES), scale_B=SCALE * GAIN_A / GAIN_B)


def _expected_net(op, a, b, enc=BALANCED):
    schedules = plan_operation(op, [a, b], enc)
    lam_A, lam_B = intensity_profile(schedules, LINKS, PLAN, 1)
    return float(np.sum(lam_A - lam_B)), lam_A, lam_B


@pytest.mark.parametrize("op", ["add", "sub"])
def test_noiseless_round_trip_exhaustive(op):
    ctx = OperationContext(op, GAIN_A)
    for a, b in itertools.product(VALUES, VALUES):
        net, _, _ = _expected_net(op, a, b)
        assert decode_result(net, BALANCED, ctx) == (a + b if op == "add" else a - b)


@pytest.mark.parametrize("op", ["add", "sub"])
def test_noisy_round_trip(op):
    rng = np.random.default_rng(7)
    ctx = OperationContext(op, GAIN_A)
    ok = 0
    trials = 10_000
    for _ in range(trials):
        a, b = rng.choice(VALUES, 2)
        _, lam_A, lam_B = _expected_net(op, int(a), int(b))
        nA = rng.poisson(lam_A).sum()
        nB = rng.poisson(lam_B).sum()
        ok += decode_result(float(nA - nB), BALANCED, ctx) == (a + b if op == "add" else a - b)
    assert ok / trials >= 0.99


def test_schedules_for_values_one_transmitter_each():
    s = schedules_for_values([1, -2, 0], ENC)
    assert [x.transmitter_id for x in s] == [0, 1, 2]
    assert s[2].releases == ()
