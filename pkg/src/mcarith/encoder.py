"""Value and operation encoding onto the two molecular species.

Positive values are carried by species A and negative values by species B,
with the released count proportional to the magnitude. Zero is silence.
Multiplication and division are realised as repeated additions/subtractions
over consecutive symbol intervals and resolved at the decoder.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field


class Species(enum.Enum):
    A = "A"
    B = "B"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Release:
    symbol: int
    species: Species
    count: float


@dataclass(frozen=True)
class EmissionSchedule:
    """Releases of one transmitter. Symbols are 1-based and shared by all transmitters."""

    transmitter_id: int
    releases: tuple[Release, ...] = ()

    def __post_init__(self):
        seen = set()
        for rel in self.releases:
            if rel.count < 0:
                raise EncodingError(f"negative release count {rel.count}")
            if rel.symbol < 1:
                raise EncodingError(f"symbol indices start at 1, got {rel.symbol}")
            key = (rel.symbol, rel.species)
            if key in seen:
                raise EncodingError(
                    f"transmitter {self.transmitter_id} releases {rel.species.value} "
                    f"twice in symbol {rel.symbol}"
                )
            seen.add(key)

    def count(self, symbol: int, species: Species) -> float:
        for rel in self.releases:
            if rel.symbol == symbol and rel.species is species:
                return rel.count
        return 0.0

    @property
    def n_symbols(self) -> int:
        return max((r.symbol for r in self.releases), default=0)


@dataclass(frozen=True)
class ValueEncoding:
    """Molecules per unit value and the set of encodable magnitudes.

    ``scale_B`` lets the negative species use a different per-unit count, e.g.
    to equalise received gain when the two species diffuse at different rates.
    Scales may be fractional when the encoding only feeds expected counts.
    """

    scale: float = 100
    alphabet: frozenset[int] = field(default_factory=lambda: frozenset({1, 2, 3, 4}))
    scale_B: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        if not self.scale > 0:
            raise EncodingError("scale must be positive")
        if self.scale_B is not None and not self.scale_B > 0:
            raise EncodingError("scale_B must be positive")
        if not self.alphabet or min(self.alphabet) < 1:
            raise EncodingError("alphabet must be a nonempty set of positive integers")

    def scale_for(self, species: Species) -> float:
        if species is Species.B and self.scale_B is not None:
            return self.scale_B
        return self.scale

    @property
    def max_value(self) -> int:
        return max(self.alphabet)


def encode_value(x: int, enc: ValueEncoding) -> tuple[Species | None, float]:
    """Return ``(species, molecule_count)``; zero maps to ``(None, 0)``."""
    if x == 0:
        return None, 0
    if abs(x) not in enc.alphabet:
        raise EncodingError(f"|{x}| is not in the alphabet {sorted(enc.alphabet)}")
    species = Species.A if x > 0 else Species.B
    return species, abs(x) * enc.scale_for(species)


def _schedule(tx: int, values_by_symbol: Sequence[int], enc: ValueEncoding) -> EmissionSchedule:
    releases = []
    for k, x in enumerate(values_by_symbol, start=1):
        species, count = encode_value(x, enc)
        if species is not None:
            releases.append(Release(k, species, count))
    return EmissionSchedule(tx, tuple(releases))


def schedules_for_values(values: Sequence[int], enc: ValueEncoding) -> list[EmissionSchedule]:
    """One transmitter per value, all in the first symbol interval."""
    return [_schedule(m, [x], enc) for m, x in enumerate(values)]


def repeat_schedules(schedules: Sequence[EmissionSchedule], times: int) -> list[EmissionSchedule]:
    """Repeat single-interval schedules over ``times`` consecutive intervals."""
    out = []
    for s in schedules:
        releases = tuple(
            Release(k, r.species, r.count)
            for k in range(1, times + 1)
            for r in s.releases
            if r.symbol == 1
        )
        out.append(EmissionSchedule(s.transmitter_id, releases))
    return out


def division_intervals(enc: ValueEncoding) -> int:
    # Quotient is at most max(alphabet) since divisors are >= 1; one more interval shows the flip.
    return enc.max_value + 1


def plan_operation(op: str, operands: Sequence[int], enc: ValueEncoding) -> list[EmissionSchedule]:
    """Emission schedules realising ``op`` over ``operands``.

    add   every operand on its own transmitter, one interval.
    sub   ``a - b``: ``a`` on TX0, ``-b`` on TX1, one interval.
    mul   ``a * b``: TX0 emits ``a`` in each of ``b`` intervals.
    div   ``a // b``: TX0 emits ``a`` once; TX1 emits ``-b`` in each of
          ``max(alphabet) + 1`` intervals so the running total always flips sign.
    """
    operands = [int(x) for x in operands]
    if op == "add":
        if not operands:
            raise EncodingError("add needs at least one operand")
        return schedules_for_values(operands, enc)
    if len(operands) != 2:
        raise EncodingError(f"{op} takes exactly two operands")
    a, b = operands
    if op == "sub":
        return schedules_for_values([a, -b], enc)
    if op == "mul":
        if b < 1 or b not in enc.alphabet:
            raise EncodingError("multiplier must be a positive alphabet member")
        return repeat_schedules(schedules_for_values([a], enc), b)
    if op == "div":
        if b == 0:
            raise EncodingError("division by zero")
        if a < 1 or b < 1:
            raise EncodingError("division operands must be positive")
        n = division_intervals(enc)
        dividend = _schedule(0, [a], enc)
        divisor = _schedule(1, [-b] * n, enc)
        return [dividend, divisor]
    raise EncodingError(f"unknown operation {op!r}")


def round_half_toward_zero(x: float) -> int:
    if x >= 0:
        return int(math.ceil(x - 0.5))
    return -int(math.ceil(-x - 0.5))


@dataclass(frozen=True)
class OperationContext:
    """What the receiver knows about the pending computation.

    ``gain`` is the expected accumulated net count for one molecule emitted
    in the current interval (sum of CIR samples). ``isi_gains[j-1]`` is the
    same for a molecule emitted ``j`` intervals earlier; it is only used by
    the interval-wise decoders and assumes a single species, as in ``mul``.
    """

    op: str
    gain: float
    isi_gains: tuple[float, ...] = ()


def _units(count: float, enc: ValueEncoding, ctx: OperationContext) -> float:
    if not ctx.gain > 0:
        raise ValueError("gain must be positive")
    return count / (enc.scale * ctx.gain)


def decode_intervals(counts: Sequence[float], enc: ValueEncoding, ctx: OperationContext) -> list[int]:
    """Decode per-interval net counts to integer units, subtracting decided ISI."""
    decided: list[int] = []
    for k, c in enumerate(counts):
        isi = 0.0
        for j, g in enumerate(ctx.isi_gains, start=1):
            if k - j < 0:
                break
            isi += decided[k - j] * enc.scale * g
        decided.append(round_half_toward_zero(_units(c - isi, enc, ctx)))
    return decided


def decode_division(counts: Sequence[float], enc: ValueEncoding, ctx: OperationContext):
    """Return ``(quotient, remainder_units, residual_count)`` from per-interval counts.

    The quotient is the number of intervals whose running total stays
    non-negative before the first negative one.
    """
    units = decode_intervals(counts, enc, ctx)
    if len(units) < 2:
        raise ValueError("division needs at least two intervals")
    running = 0
    quotient = 0
    # units[1] is -divisor, so the dividend is units[0] - units[1].
    remainder = units[0] - units[1]
    for u in units:
        running += u
        if running < 0:
            break
        quotient += 1
        remainder = running
    return quotient, remainder, remainder * enc.scale * ctx.gain


def decode_result(counts, enc: ValueEncoding, ctx: OperationContext) -> int:
    """Map received net counts back to the arithmetic result.

    ``add``/``sub`` take the accumulated net count of one interval; ``mul``
    and ``div`` take a sequence of per-interval net counts.
    """
    if ctx.op in ("add", "sub"):
        return round_half_toward_zero(_units(float(counts), enc, ctx))
    if ctx.op == "mul":
        return sum(decode_intervals(counts, enc, ctx))
    if ctx.op == "div":
        return decode_division(counts, enc, ctx)[0]
    raise EncodingError(f"unknown operation {ctx.op!r}")
