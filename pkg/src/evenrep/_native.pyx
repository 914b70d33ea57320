# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nearest-neighbor kernel over a CSR bucket grid.

One entry point, ``nearest_batch``: for each query point, walk grid cells
ring by ring outward from the point's own cell until the best active node
found so far is provably closer than any cell left unvisited.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

DEF HUGE = 1e300


def nearest_batch(
    const double[:, ::1] points,
    const double[::1] xs,
    const double[::1] ys,
    const cnp.int32_t[::1] cell_ids,
    const cnp.int64_t[::1] cell_start,
    const cnp.uint8_t[::1] active,
    int nx,
    int ny,
    double cell_w,
    double cell_h,
    double width,
    double height,
    bint toroidal,
):
    """Nearest active node (id and distance) for each query point.

    Ties on distance resolve to the lowest node id.  Assumes at least one
    active node; callers enforce that.
    """
    cdef Py_ssize_t m = points.shape[0]
    out_ids = np.empty(m, dtype=np.int64)
    out_d = np.empty(m, dtype=np.float64)
    cdef cnp.int64_t[::1] oid = out_ids
    cdef double[::1] od = out_d

    cdef double min_cell = cell_w if cell_w < cell_h else cell_h
    cdef double half_w = 0.5 * width
    cdef double half_h = 0.5 * height
    cdef int max_ring = nx + ny + 2

    cdef Py_ssize_t idx, e, c0, c1
    cdef int ci, cj, r, ox, oy, oy_step, ii, jj
    cdef long nid, best_id
    cdef double px, py, dx, dy, d2, best_d2, lim

    for idx in range(m):
        px = points[idx, 0]
        py = points[idx, 1]
        ci = <int>(px / cell_w)
        if ci < 0:
            ci = 0
        elif ci >= nx:
            ci = nx - 1
        cj = <int>(py / cell_h)
        if cj < 0:
            cj = 0
        elif cj >= ny:
            cj = ny - 1

        best_id = -1
        best_d2 = HUGE

        r = 0
        while r <= max_ring:
            if best_id >= 0 and r >= 2:
                lim = (r - 1) * min_cell
                if lim * lim > best_d2:
                    break
            for ox in range(-r, r + 1):
                if toroidal:
                    # Offsets past half the grid wrap onto cells already
                    # visited at a smaller ring; skip them (keep +nx/2 on
                    # even grids so the seam cell is scanned exactly once).
                    if 2 * ox > nx or -2 * ox > nx or 2 * ox == -nx:
                        continue
                    ii = ci + ox
                    if ii < 0:
                        ii += nx
                    elif ii >= nx:
                        ii -= nx
                else:
                    ii = ci + ox
                    if ii < 0 or ii >= nx:
                        continue
                if ox == -r or ox == r:
                    oy_step = 1
                else:
                    oy_step = 2 * r if r > 0 else 1
                oy = -r
                while oy <= r:
                    if toroidal:
                        if 2 * oy > ny or -2 * oy > ny or 2 * oy == -ny:
                            oy += oy_step
                            continue
                        jj = cj + oy
                        if jj < 0:
                            jj += ny
                        elif jj >= ny:
                            jj -= ny
                    else:
                        jj = cj + oy
                        if jj < 0 or jj >= ny:
                            oy += oy_step
                            continue
                    c0 = cell_start[jj * nx + ii]
                    c1 = cell_start[jj * nx + ii + 1]
                    for e in range(c0, c1):
                        nid = cell_ids[e]
                        if active[nid] == 0:
                            continue
                        dx = fabs(px - xs[nid])
                        dy = fabs(py - ys[nid])
                        if toroidal:
                            if dx > half_w:
                                dx = width - dx
                            if dy > half_h:
                                dy = height - dy
                        d2 = dx * dx + dy * dy
                        if d2 < best_d2 or (d2 == best_d2 and nid < best_id):
                            best_d2 = d2
                            best_id = nid
                    oy += oy_step
            r += 1

        oid[idx] = best_id
        od[idx] = sqrt(best_d2) if best_id >= 0 else -1.0

    return out_ids, out_d
