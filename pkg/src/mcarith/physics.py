"""Free-diffusion channel with a transparent spherical receiver.

A point release of ``Q`` molecules at distance ``d`` from the receiver centre
produces the expected receiver occupancy ``Q * h(t)`` where

    h(t) = V / (4 pi D t)^{3/2} * exp(-d^2 / (4 D t)),   V = 4/3 pi r^3.

This is the uniform-concentration form: the concentration at the receiver
centre is taken as representative of the whole receiver volume, which is only
accurate for ``d >> r``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# Distances in metres, diffusion coefficients in m^2/s.
DEFAULT_DISTANCE = 10e-6
DEFAULT_RECEIVER_RADIUS = 5e-6
DIFFUSION_A = 2.2e-9
DIFFUSION_B = 1.5e-9

# Below this d/r the uniform-concentration CIR is visibly off.
VALIDITY_RATIO = 3.0


class GeometryWarning(UserWarning):
    """Geometry is outside the region where the closed-form CIR is accurate."""


@dataclass(frozen=True)
class ChannelGeometry:
    distance: float = DEFAULT_DISTANCE
    receiver_radius: float = DEFAULT_RECEIVER_RADIUS
    diffusion: float = DIFFUSION_A

    def __post_init__(self):
        for name in ("distance", "receiver_radius", "diffusion"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def receiver_volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.receiver_radius**3

    def with_diffusion(self, diffusion: float) -> ChannelGeometry:
        return ChannelGeometry(self.distance, self.receiver_radius, diffusion)


def check_geometry(geom: ChannelGeometry) -> bool:
    """Warn (and return False) when ``d < 3 r``.

    Called when configurations are loaded, not on every CIR evaluation.
    """
    if geom.distance < VALIDITY_RATIO * geom.receiver_radius:
        warnings.warn(
            f"distance {geom.distance:.3g} m is less than {VALIDITY_RATIO:g}x the receiver "
            f"radius {geom.receiver_radius:.3g} m; the closed-form CIR overestimates "
            "early-time occupancy and can exceed 1",
            GeometryWarning,
            stacklevel=2,
        )
        return False
    return True


def cir(t, geom: ChannelGeometry):
    """Probability that one released molecule is inside the receiver at time ``t``.

    Accepts a scalar or an array of times; all times must be strictly positive.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("cir is only defined for t > 0")
    D = geom.diffusion
    four_dt = 4.0 * D * t_arr
    h = geom.receiver_volume / (math.pi * four_dt) ** 1.5 * np.exp(-geom.distance**2 / four_dt)
    if np.ndim(t) == 0:
        return float(h)
    return h


def concentration(t, Q: float, geom: ChannelGeometry):
    """Expected number of molecules inside the receiver after releasing ``Q``."""
    if Q < 0:
        raise ValueError("Q must be non-negative")
    return Q * cir(t, geom)


def peak_time(geom: ChannelGeometry) -> float:
    """Time at which ``cir`` is maximal, ``d^2 / (6 D)``."""
    return geom.distance**2 / (6.0 * geom.diffusion)


def occupancy_probability(t, geom: ChannelGeometry) -> tuple[np.ndarray, int]:
    """``cir`` clipped to [0, 1] for use as a per-molecule probability.

    Returns the clipped values and how many of them were clipped, so callers
    can report when the closed form left its valid range.
    """
    h = np.atleast_1d(cir(np.asarray(t, dtype=float), geom))
    clipped = int(np.count_nonzero(h > 1.0))
    return np.minimum(h, 1.0), clipped
