"""Backend selection for the hot nearest-neighbor kernel.

The compiled extension (:mod:`evenrep._native`) walks the bucket grid and
is the production path.  When it is not built, or when the environment
variable ``EVENREP_PURE`` is set to a non-empty value, the pure-numpy
fallback (:mod:`evenrep._fallback`) is used instead.  Both backends return
identical results; see ``benchmarks/bench_kernels.py`` for the speed gap.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback

if os.environ.get("EVENREP_PURE"):
    _native = None
else:
    try:
        from . import _native
    except ImportError:
        _native = None

BACKEND = "native" if _native is not None else "python"


def nearest_batch(points, index, active):
    """Nearest active node for each row of ``points``.

    Parameters
    ----------
    points : (m, 2) float64 array
    index : GridIndex
        Bucket grid over the node positions (see :mod:`evenrep.geometry`).
    active : (n,) bool array
        Activity mask over node ids.

    Returns
    -------
    ids : (m,) int64 array
    dists : (m,) float64 array
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    mask = np.ascontiguousarray(active, dtype=np.uint8)
    if not mask.any():
        raise ValueError("nearest_batch requires at least one active node")
    if _native is not None:
        return _native.nearest_batch(
            points,
            index.xs,
            index.ys,
            index.cell_ids,
            index.cell_start,
            mask,
            index.nx,
            index.ny,
            index.cell_w,
            index.cell_h,
            index.width,
            index.height,
            index.toroidal,
        )
    return _fallback.nearest_batch(
        points, index.xs, index.ys, mask, index.width, index.height, index.toroidal
    )
