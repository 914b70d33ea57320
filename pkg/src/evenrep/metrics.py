"""Monte Carlo estimators of the two quality-of-representation metrics.

``D`` is the mean distance from a uniform random point to its nearest
active node, normalized by the square root of the desired active density;
``U`` is the Gini index of those nearest distances.  Both are estimated
from one m-point distance sample; the Gini uses the O(m log m) sorted
form, with the O(m^2) pairwise definition kept in the tests as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyActiveSetError, GiniUndefinedError
from .geometry import Layout
from .seeding import NS_BOOTSTRAP, stream

DEFAULT_BOOTSTRAP = 100


@dataclass(frozen=True)
class MetricEstimate:
    """Point estimate with its Monte Carlo standard error."""

    value: float
    samples: int
    std_error: float
    seed: int

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


@dataclass(frozen=True)
class DistanceSample:
    """Nearest-active distances of uniformly sampled region points."""

    values: np.ndarray
    seed: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if (v < 0).any():
            raise ValueError("distances must be non-negative")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return len(self.values)


def _active_mask(state, n: int) -> np.ndarray:
    mask = np.asarray(getattr(state, "active_mask", state), dtype=bool)
    if mask.shape != (n,):
        raise ValueError("activity mask does not match layout size")
    return mask


def nearest_distances_at(points, state, layout: Layout) -> np.ndarray:
    """Nearest-active distance for each supplied point."""
    mask = _active_mask(state, layout.n)
    if not mask.any():
        raise EmptyActiveSetError("no active nodes")
    _, d = layout.nearest_active_batch(points, mask)
    return d


def sample_nearest_distances(state, layout: Layout, m: int, seed: int) -> DistanceSample:
    """Draw ``m`` uniform points and record their nearest-active distances.

    ``state`` may be a boolean activity mask or any object exposing an
    ``active_mask`` attribute.  Deterministic for a fixed seed.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = stream(seed, 0)
    pts = rng.random((m, 2)) * (layout.region.width, layout.region.height)
    return DistanceSample(nearest_distances_at(pts, state, layout), seed)


def avg_rep_error(sample: DistanceSample, z: float) -> MetricEstimate:
    """Density-normalized average representation error: mean(d) * sqrt(z)."""
    if z <= 0:
        raise ValueError("density z must be positive")
    v = sample.values
    scale = math.sqrt(z)
    se = float(v.std(ddof=1)) * scale / math.sqrt(len(v)) if len(v) > 1 else 0.0
    return MetricEstimate(float(v.mean()) * scale, len(v), se, sample.seed)


def gini(values) -> float:
    """Gini index: half the mean absolute pairwise difference over the mean.

    Computed from the sorted sample as
    ``2 * sum(i * g_i) / (m * sum(g)) - (m + 1) / m`` with ranks i = 1..m,
    which equals the pairwise definition.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    m = len(v)
    if m < 2:
        raise GiniUndefinedError("need at least two values")
    if (v < 0).any():
        raise ValueError("values must be non-negative")
    total = float(v.sum())
    if total == 0:
        raise GiniUndefinedError("all values are zero")
    g = np.sort(v)
    ranks = np.arange(1, m + 1, dtype=np.float64)
    return float(2.0 * np.dot(ranks, g) / (m * total) - (m + 1) / m)


def _gini_sorted_weighted(sorted_values: np.ndarray, counts: np.ndarray, m: int) -> float:
    """Gini of the sample that repeats sorted_values[i] counts[i] times."""
    total = float(np.dot(counts, sorted_values))
    if total == 0:
        return 0.0
    cum = np.cumsum(counts)
    prev = cum - counts
    rank_sum = np.dot(sorted_values, counts * prev + counts * (counts + 1) / 2.0)
    return float(2.0 * rank_sum / (m * total) - (m + 1) / m)


def unevenness(
    sample: DistanceSample, bootstrap_resamples: int = DEFAULT_BOOTSTRAP
) -> MetricEstimate:
    """Unevenness of representation error: the Gini of the distance sample.

    The standard error comes from a nonparametric bootstrap.  Resamples are
    drawn as multinomial counts over the sorted sample, so each resampled
    Gini costs O(m) instead of O(m log m).
    """
    value = gini(sample.values)
    m = sample.m
    se = 0.0
    if bootstrap_resamples > 1:
        g = np.sort(sample.values)
        pvals = np.full(m, 1.0 / m)
        rng = stream(sample.seed, NS_BOOTSTRAP)
        boots = np.empty(bootstrap_resamples)
        for b in range(bootstrap_resamples):
            counts = rng.multinomial(m, pvals)
            boots[b] = _gini_sorted_weighted(g, counts, m)
        se = float(boots.std(ddof=1))
    return MetricEstimate(value, m, se, sample.seed)
