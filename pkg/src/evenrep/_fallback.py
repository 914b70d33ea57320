"""Pure-numpy fallback for the compiled nearest-neighbor kernel.

Correctness-first: a chunked exact scan over the active nodes.  Arithmetic
(wrap rule, squared distances, lowest-id tie break) mirrors the compiled
kernel operation for operation, so the two backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np

# Cap on (chunk points) x (active nodes) scratch entries per step.
_CHUNK_BUDGET = 4_000_000


def nearest_batch(points, xs, ys, active, width, height, toroidal):
    """Nearest active node (id and distance) for each query point."""
    act = np.flatnonzero(active)
    if act.size == 0:
        raise ValueError("nearest_batch requires at least one active node")
    ax = xs[act]
    ay = ys[act]
    m = points.shape[0]
    out_ids = np.empty(m, dtype=np.int64)
    out_d = np.empty(m, dtype=np.float64)
    step = max(1, _CHUNK_BUDGET // act.size)
    for lo in range(0, m, step):
        hi = min(lo + step, m)
        dx = np.abs(points[lo:hi, 0, None] - ax[None, :])
        dy = np.abs(points[lo:hi, 1, None] - ay[None, :])
        if toroidal:
            dx = np.where(dx > 0.5 * width, width - dx, dx)
            dy = np.where(dy > 0.5 * height, height - dy, dy)
        d2 = dx * dx + dy * dy
        # argmin returns the first minimum; active ids ascend, so ties
        # resolve to the lowest id exactly as in the compiled kernel.
        j = np.argmin(d2, axis=1)
        rows = np.arange(hi - lo)
        out_ids[lo:hi] = act[j]
        out_d[lo:hi] = np.sqrt(d2[rows, j])
    return out_ids, out_d
