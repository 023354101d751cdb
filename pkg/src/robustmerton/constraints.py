"""Exposure constraint sets and the consumption band.

The exposure set restricts the vector of wealth fractions exposed to each
Brownian factor; the band restricts the consumption rate. All projections
are closed-form clamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class FullSpace:
    """No restriction on exposures."""


@dataclass(frozen=True)
class NonnegativeOrthant:
    """No short positions: every exposure coordinate must be >= 0."""


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box; bounds may be -inf/+inf for one-sided limits."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=float)))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds must have equal shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box is empty: some lower bound exceeds its upper bound")


ExposureSet = Union[FullSpace, NonnegativeOrthant, Box]


def project(exposure_set: ExposureSet, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of v onto the set (componentwise clamp)."""
    v = np.asarray(v, dtype=float)
    if isinstance(exposure_set, FullSpace):
        return v.copy()
    if isinstance(exposure_set, NonnegativeOrthant):
        return np.maximum(v, 0.0)
    return np.clip(v, exposure_set.lower, exposure_set.upper)


def distance_sq(exposure_set: ExposureSet, v: np.ndarray) -> float:
    """Squared Euclidean distance from v to the set."""
    if isinstance(exposure_set, FullSpace):
        return 0.0
    diff = np.asarray(v, dtype=float) - project(exposure_set, v)
    return float(diff @ diff)


def scale_set(exposure_set: ExposureSet, d: np.ndarray) -> ExposureSet:
    """Image of the set under the positive diagonal scaling diag(sqrt(d)).

    Cones (full space, nonnegative orthant) are invariant; box bounds are
    multiplied by sqrt(d) with infinities preserved.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d <= 0):
        raise ValueError("scale entries must be positive")
    if isinstance(exposure_set, (FullSpace, NonnegativeOrthant)):
        return exposure_set
    root = np.sqrt(d)
    return Box(root * exposure_set.lower, root * exposure_set.upper)


@dataclass(frozen=True)
class ConsumptionBand:
    """Admissible consumption rates [floor, ceiling], ceiling may be inf."""

    floor: float = 0.0
    ceiling: float = math.inf

    def __post_init__(self):
        if not 0.0 <= self.floor < self.ceiling:
            raise ValueError("consumption band requires 0 <= floor < ceiling")

    def reciprocal_bounds(self) -> tuple[float, float]:
        """Bounds (1/ceiling, 1/floor) used to clamp marginal-utility levels."""
        lo = 0.0 if math.isinf(self.ceiling) else 1.0 / self.ceiling
        hi = math.inf if self.floor == 0.0 else 1.0 / self.floor
        return lo, hi


UNBOUNDED = ConsumptionBand(0.0, math.inf)


def clamp_consumption(band: ConsumptionBand, raw: float) -> float:
    """Clamp a raw consumption rate into the band (median of the three)."""
    return min(max(raw, band.floor), band.ceiling)
