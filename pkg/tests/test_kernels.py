"""Backend parity: the compiled grid kernel and the pure fallback agree."""

import numpy as np
import pytest

from evenrep import _fallback
from evenrep import geometry as g

try:
    from evenrep import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="compiled kernel not built")


def run_native(layout, points, active):
    idx = layout.index
    return _native.nearest_batch(
        np.ascontiguousarray(points),
        idx.xs,
        idx.ys,
        idx.cell_ids,
        idx.cell_start,
        np.ascontiguousarray(active, dtype=np.uint8),
        idx.nx,
        idx.ny,
        idx.cell_w,
        idx.cell_h,
        idx.width,
        idx.height,
        idx.toroidal,
    )


def run_pure(layout, points, active):
    idx = layout.index
    return _fallback.nearest_batch(
        np.ascontiguousarray(points),
        idx.xs,
        idx.ys,
        np.ascontiguousarray(active, dtype=np.uint8),
        idx.width,
        idx.height,
        idx.toroidal,
    )


@needs_native
@pytest.mark.parametrize("metric", [g.EUCLIDEAN, g.TOROIDAL])
@pytest.mark.parametrize("n,frac", [(50, 1.0), (500, 0.3), (2000, 0.05), (3, 1.0)])
def test_backends_bit_identical(metric, n, frac):
    region = g.Region(1.0, 1.0, metric)
    lay = g.place_poisson(n, region, seed=100 + n)
    rng = np.random.default_rng(n)
    active = rng.random(n) < frac
    if not active.any():
        active[0] = True
    points = rng.random((2000, 2))
    ids_n, d_n = run_native(lay, points, active)
    ids_p, d_p = run_pure(lay, points, active)
    assert np.array_equal(ids_n, ids_p)
    assert np.array_equal(d_n, d_p)  # bitwise


@needs_native
def test_non_square_region_and_skewed_grid():
    region = g.Region(2.0, 0.5, g.TOROIDAL)
    rng = np.random.default_rng(8)
    pos = rng.random((300, 2)) * [2.0, 0.5]
    lay = g.Layout(pos, region, expected_active=40)
    points = rng.random((1500, 2)) * [2.0, 0.5]
    active = rng.random(300) < 0.2
    active[0] = True
    ids_n, d_n = run_native(lay, points, active)
    ids_p, d_p = run_pure(lay, points, active)
    assert np.array_equal(ids_n, ids_p)
    assert np.array_equal(d_n, d_p)


def test_pure_backend_requires_active():
    with pytest.raises(ValueError):
        _fallback.nearest_batch(
            np.zeros((1, 2)), np.zeros(1), np.zeros(1), np.zeros(1, np.uint8), 1.0, 1.0, False
        )


@needs_native
def test_single_cell_grid_wraps_once():
    # one-cell grid exercises the wrap dedup guards
    region = g.Region(1.0, 1.0, g.TOROIDAL)
    lay = g.Layout([[0.05, 0.05], [0.95, 0.95]], region, expected_active=1)
    assert lay.index.nx == 1 and lay.index.ny == 1
    ids, d = run_native(lay, np.array([[0.99, 0.99]]), np.ones(2, bool))
    assert ids[0] == 1
    assert d[0] == pytest.approx(np.sqrt(2) * 0.04, rel=1e-12)
