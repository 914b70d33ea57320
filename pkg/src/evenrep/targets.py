"""Target distance functions and the closed-form metric constants.

A target distance function maps the neighbor order k >= 1 to the desired
distance between an active node and its k-th nearest active neighbor, at
a desired active density ``z``:

* kind ``H`` (hexagonal): constant ``sqrt(7 / (pi z))`` for k <= 6, the
  radius of the disc that holds seven nodes at density z (a center node
  and its six equidistant neighbors).
* kind ``P`` (Poisson): the expected k-th nearest-neighbor distance of a
  planar Poisson process, ``Gamma(k + 1/2) / (Gamma(k) sqrt(pi z))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TargetOrderError

KIND_HEX = "H"
KIND_POISSON = "P"

_HEX_MAX_K = 6


@dataclass(frozen=True)
class TargetDistanceFunction:
    """Mapping k -> target distance for a desired active density ``z``."""

    kind: str
    z: float

    def __post_init__(self):
        if self.kind not in (KIND_HEX, KIND_POISSON):
            raise ValueError(f"unknown target function kind {self.kind!r}")
        if self.z <= 0:
            raise ValueError("density z must be positive")

    def __call__(self, k: int) -> float:
        return target_distance(self, k)

    def table(self, k_max: int) -> np.ndarray:
        """Target distances for k = 1..k_max as an array."""
        return _target_table(self.kind, self.z, k_max)


def target_distance(f: TargetDistanceFunction, k: int) -> float:
    """Target distance to the k-th nearest active neighbor."""
    if k < 1:
        raise TargetOrderError("neighbor order k must be >= 1")
    if f.kind == KIND_HEX:
        if k > _HEX_MAX_K:
            raise TargetOrderError(
                f"hexagonal target distance is defined only for k <= {_HEX_MAX_K}"
            )
        return math.sqrt(7.0 / (math.pi * f.z))
    return math.gamma(k + 0.5) / (math.gamma(k) * math.sqrt(math.pi * f.z))


@lru_cache(maxsize=None)
def _target_table(kind: str, z: float, k_max: int) -> np.ndarray:
    f = TargetDistanceFunction(kind, z)
    t = np.array([target_distance(f, k) for k in range(1, k_max + 1)])
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class AnalyticBounds:
    """Closed-form reference values for the two metrics.

    ``lb_D``/``lb_U``: lower bounds, attained by a perfect disc packing.
    ``hex_lb_D``/``hex_lb_U_upper``: values for a hexagonal tessellation,
    the tightest layout guaranteed for regions of arbitrary shape (the U
    value is only known as an upper bound, 0.2038).
    ``poisson_D``/``poisson_U``: expected values under Poisson placement.
    """

    lb_D: float
    lb_U: float
    hex_lb_D: float
    hex_lb_U_upper: float
    poisson_D: float
    poisson_U: float


def analytic_bounds() -> AnalyticBounds:
    """All six constants, computed from their closed forms."""
    return AnalyticBounds(
        lb_D=2.0 / (3.0 * math.sqrt(math.pi)),
        lb_U=0.2,
        hex_lb_D=(1.0 / 9.0 + math.log(3.0) / 12.0) * math.sqrt(2.0 * math.sqrt(3.0)),
        hex_lb_U_upper=0.2038,
        poisson_D=0.5,
        poisson_U=1.0 - 1.0 / math.sqrt(2.0),
    )
