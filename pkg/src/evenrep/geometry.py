"""Region model, node placement, distances and nearest-active-node queries.

Layouts are immutable after construction: positions are a read-only
(n, 2) float64 array indexed by node id, plus a uniform bucket grid used
by the nearest-neighbor kernel.  Activity is always passed in as a boolean
mask so the same layout serves every phase of a simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import EmptyActiveSetError
from .seeding import stream

EUCLIDEAN = "euclidean"
TOROIDAL = "toroidal"


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Region:
    """Rectangular region of interest.

    ``metric`` selects plain Euclidean distance or wrap-around (toroidal)
    distance.  The toroidal mode exists to validate boundary-free analytic
    results; simulation experiments default to Euclidean.
    """

    width: float = 1.0
    height: float = 1.0
    metric: str = EUCLIDEAN

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("region dimensions must be positive")
        if self.metric not in (EUCLIDEAN, TOROIDAL):
            raise ValueError(f"unknown metric {self.metric!r}")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def toroidal(self) -> bool:
        return self.metric == TOROIDAL


def distance(a, b, region: Region) -> float:
    """Distance between two points under the region's metric.

    Toroidal distance is the minimum over the nine wrap images, computed
    component-wise.
    """
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    if region.toroidal:
        if dx > 0.5 * region.width:
            dx = region.width - dx
        if dy > 0.5 * region.height:
            dy = region.height - dy
    # sqrt(dx^2 + dy^2) rather than hypot: keeps scalar distances bit-equal
    # to the batch kernels.
    return math.sqrt(dx * dx + dy * dy)


def displacements(origin, targets, region: Region):
    """Displacement vectors from ``origin`` to each row of ``targets``.

    Under the toroidal metric each component is wrapped into
    [-size/2, size/2] so the vector points along the shortest path.
    """
    d = np.asarray(targets, dtype=np.float64) - np.asarray(origin, dtype=np.float64)
    if region.toroidal:
        d[:, 0] -= region.width * np.round(d[:, 0] / region.width)
        d[:, 1] -= region.height * np.round(d[:, 1] / region.height)
    return d


class GridIndex:
    """Uniform bucket grid over node positions, stored CSR-style.

    ``cell_ids`` holds node ids sorted by cell (ascending id within each
    cell); ``cell_start`` delimits each cell's slice.  Queries filter by an
    activity mask at lookup time, so the grid never needs rebuilding as
    modes flip.
    """

    __slots__ = (
        "xs", "ys", "cell_ids", "cell_start", "nx", "ny",
        "cell_w", "cell_h", "width", "height", "toroidal",
    )

    def __init__(self, positions: np.ndarray, region: Region, expected_active: int | None = None):
        n = len(positions)
        target = max(1, expected_active if expected_active else n)
        # Cell edge ~ 1/sqrt(expected active density): about one expected
        # active node per cell.
        cell = math.sqrt(region.area / target)
        self.nx = max(1, min(4096, round(region.width / cell)))
        self.ny = max(1, min(4096, round(region.height / cell)))
        self.cell_w = region.width / self.nx
        self.cell_h = region.height / self.ny
        self.width = region.width
        self.height = region.height
        self.toroidal = region.toroidal
        self.xs = np.ascontiguousarray(positions[:, 0], dtype=np.float64)
        self.ys = np.ascontiguousarray(positions[:, 1], dtype=np.float64)
        if n:
            ci = np.minimum((self.xs / self.cell_w).astype(np.int64), self.nx - 1)
            cj = np.minimum((self.ys / self.cell_h).astype(np.int64), self.ny - 1)
            cells = cj * self.nx + ci
            order = np.argsort(cells, kind="stable")
            self.cell_ids = np.ascontiguousarray(order, dtype=np.int32)
            counts = np.bincount(cells, minlength=self.nx * self.ny)
        else:
            self.cell_ids = np.empty(0, dtype=np.int32)
            counts = np.zeros(self.nx * self.ny, dtype=np.int64)
        starts = np.zeros(self.nx * self.ny + 1, dtype=np.int64)
        np.cumsum(counts, out=starts[1:])
        self.cell_start = np.ascontiguousarray(starts)

    def cells_in_range(self, p, radius: float) -> np.ndarray:
        """Ids of all nodes whose cell intersects the disc of ``radius`` at ``p``."""
        ci = min(int(p[0] / self.cell_w), self.nx - 1)
        cj = min(int(p[1] / self.cell_h), self.ny - 1)
        rx = int(math.ceil(radius / self.cell_w))
        ry = int(math.ceil(radius / self.cell_h))
        chunks = []
        for oy in range(-ry, ry + 1):
            jj = cj + oy
            if self.toroidal:
                if 2 * oy > self.ny or -2 * oy > self.ny or 2 * oy == -self.ny:
                    continue
                jj %= self.ny
            elif jj < 0 or jj >= self.ny:
                continue
            for ox in range(-rx, rx + 1):
                ii = ci + ox
                if self.toroidal:
                    if 2 * ox > self.nx or -2 * ox > self.nx or 2 * ox == -self.nx:
                        continue
                    ii %= self.nx
                elif ii < 0 or ii >= self.nx:
                    continue
                c = jj * self.nx + ii
                lo, hi = self.cell_start[c], self.cell_start[c + 1]
                if hi > lo:
                    chunks.append(self.cell_ids[lo:hi])
        if not chunks:
            return np.empty(0, dtype=np.int32)
        return np.concatenate(chunks)


class Layout:
    """Immutable set of node positions in a region, with a spatial index."""

    def __init__(self, positions, region: Region, expected_active: int | None = None):
        pos = np.array(positions, dtype=np.float64).reshape(-1, 2)
        if pos.size:
            if (pos[:, 0] < 0).any() or (pos[:, 0] >= region.width).any():
                raise ValueError("x coordinates must lie in [0, width)")
            if (pos[:, 1] < 0).any() or (pos[:, 1] >= region.height).any():
                raise ValueError("y coordinates must lie in [0, height)")
        pos.setflags(write=False)
        self.positions = pos
        self.region = region
        self.index = GridIndex(pos, region, expected_active)

    @property
    def n(self) -> int:
        return len(self.positions)

    def nearest_active_batch(self, points, active):
        """Vectorized nearest-active query; see :func:`nearest_active`."""
        active = np.asarray(active, dtype=bool)
        if not active.any():
            raise EmptyActiveSetError("no active nodes")
        return kernels.nearest_batch(points, self.index, active)

    def to_csv(self, path) -> None:
        """Write ``id,x,y`` rows with 17-significant-digit coordinates."""
        with open(path, "w", newline="") as fh:
            fh.write("id,x,y\n")
            for i, (x, y) in enumerate(self.positions):
                fh.write(f"{i},{x:.17g},{y:.17g}\n")

    @classmethod
    def from_csv(cls, path, region: Region, expected_active: int | None = None) -> "Layout":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        order = np.argsort(rows[:, 0])
        return cls(rows[order, 1:3], region, expected_active)


def place_poisson(n: int, region: Region, seed: int, expected_active: int | None = None) -> Layout:
    """Place ``n`` i.i.d. uniform nodes (binomial point process).

    Duplicate positions are resampled so that inter-node distances are
    always nonzero.  Deterministic for a fixed seed.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = stream(seed, 0)
    pos = rng.random((n, 2)) * (region.width, region.height)
    if n > 1:
        key = pos[:, 0] + 1j * pos[:, 1]
        while True:
            _, first = np.unique(key, return_index=True)
            if first.size == n:
                break
            dup = np.setdiff1d(np.arange(n), first)
            pos[dup] = rng.random((dup.size, 2)) * (region.width, region.height)
            key[dup] = pos[dup, 0] + 1j * pos[dup, 1]
    return Layout(pos, region, expected_active)


def hex_spacing(z: float) -> float:
    """Nearest-neighbor spacing of a triangular lattice with density ``z``."""
    if z <= 0:
        raise ValueError("density z must be positive")
    return math.sqrt(2.0 / (math.sqrt(3.0) * z))


def place_hex_lattice(z: float, region: Region, expected_active: int | None = None) -> Layout:
    """Triangular lattice at density ``z`` clipped to the region.

    Rows are spaced sqrt(3)/2 times the lattice constant apart and
    alternate a half-period horizontal offset, so every interior node has
    six equidistant neighbors.
    """
    r = hex_spacing(z)
    row_h = math.sqrt(3.0) * r / 2.0
    pts = []
    j = 0
    while True:
        y = row_h * (j + 0.5)
        if y >= region.height:
            break
        x0 = r * 0.25 + (j % 2) * (r / 2.0)
        i = 0
        while True:
            x = x0 + i * r
            if x >= region.width:
                break
            pts.append((x, y))
            i += 1
        j += 1
    return Layout(np.array(pts, dtype=np.float64).reshape(-1, 2), region, expected_active)


def hex_torus_layout(z: float, metric: str = TOROIDAL) -> Layout:
    """Exact seamless triangular lattice on a torus with density exactly ``z``.

    The region dimensions snap to whole lattice cells (about a unit
    square), with an even row count so the alternating row offsets wrap
    consistently.  Every node then has six equidistant neighbors, seam
    included, and count/area equals ``z`` identically.
    """
    r = hex_spacing(z)
    row_h = math.sqrt(3.0) * r / 2.0
    ncols = max(1, round(1.0 / r))
    nrows = max(2, round(1.0 / row_h))
    if nrows % 2:
        nrows += 1
    width = ncols * r
    height = nrows * row_h
    region = Region(width, height, metric)
    pts = np.empty((ncols * nrows, 2), dtype=np.float64)
    k = 0
    for j in range(nrows):
        y = row_h * (j + 0.5)
        x0 = r * 0.25 + (j % 2) * (r / 2.0)
        for i in range(ncols):
            pts[k] = (x0 + i * r, y)
            k += 1
    return Layout(pts, region, expected_active=ncols * nrows)


def nearest_active(p, active, layout: Layout):
    """Nearest active node to point ``p``.

    Parameters
    ----------
    p : point-like (x, y)
    active : (n,) bool array
        Activity mask (e.g. ``NetworkState.active_mask``).
    layout : Layout

    Returns
    -------
    (node id, distance); ties on distance go to the lower id.
    """
    ids, dists = layout.nearest_active_batch(np.asarray([p], dtype=np.float64), active)
    return int(ids[0]), float(dists[0])


def k_nearest_active(p, k: int, max_radius: float, active, layout: Layout, exclude_id: int | None = None):
    """Up to ``k`` active nodes within ``max_radius`` of ``p``, nearest first.

    Ties on distance break toward the lower node id; ``exclude_id`` drops a
    designated self node.  May return fewer than ``k`` entries.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if max_radius <= 0:
        raise ValueError("max_radius must be positive")
    active = np.asarray(active, dtype=bool)
    cand = layout.index.cells_in_range(p, max_radius)
    if cand.size == 0:
        return []
    cand = cand[active[cand]]
    if exclude_id is not None:
        cand = cand[cand != exclude_id]
    if cand.size == 0:
        return []
    region = layout.region
    dx = np.abs(layout.positions[cand, 0] - p[0])
    dy = np.abs(layout.positions[cand, 1] - p[1])
    if region.toroidal:
        dx = np.where(dx > 0.5 * region.width, region.width - dx, dx)
        dy = np.where(dy > 0.5 * region.height, region.height - dy, dy)
    d = np.sqrt(dx * dx + dy * dy)
    keep = d <= max_radius
    cand, d = cand[keep], d[keep]
    order = np.lexsort((cand, d))[:k]
    return [(int(cand[i]), float(d[i])) for i in order]
