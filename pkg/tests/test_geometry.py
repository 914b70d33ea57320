"""Tests for regions, placement, distances and nearest-node queries."""

import math

import numpy as np
import pytest

from evenrep import geometry as g
from evenrep.errors import EmptyActiveSetError

UNIT_E = g.Region(1.0, 1.0, g.EUCLIDEAN)
UNIT_T = g.Region(1.0, 1.0, g.TOROIDAL)


def scan_nearest(p, active, layout):
    """Independent linear-scan oracle for nearest_active."""
    best = None
    for i in np.flatnonzero(np.asarray(active)):
        d = g.distance(p, layout.positions[i], layout.region)
        if best is None or d < best[1] or (d == best[1] and i < best[0]):
            best = (int(i), d)
    return best


def scan_k_nearest(p, k, radius, active, layout, exclude=None):
    """Independent linear-scan oracle for k_nearest_active."""
    rows = []
    for i in np.flatnonzero(np.asarray(active)):
        if i == exclude:
            continue
        d = g.distance(p, layout.positions[i], layout.region)
        if d <= radius:
            rows.append((d, int(i)))
    rows.sort()
    return [(i, d) for d, i in rows[:k]]


class TestRegionAndDistance:
    def test_region_validation(self):
        with pytest.raises(ValueError):
            g.Region(0.0, 1.0)
        with pytest.raises(ValueError):
            g.Region(1.0, 1.0, "spherical")
        assert g.Region(2.0, 3.0).area == 6.0

    def test_distance_identity(self):
        assert g.distance((0.3, 0.7), (0.3, 0.7), UNIT_E) == 0.0

    def test_distance_axis_aligned(self):
        assert g.distance((0.1, 0.5), (0.9, 0.5), UNIT_E) == pytest.approx(0.8)

    def test_distance_toroidal_wrap(self):
        assert g.distance((0.1, 0.5), (0.9, 0.5), UNIT_T) == pytest.approx(0.2)

    def test_toroidal_never_exceeds_euclidean(self):
        rng = np.random.default_rng(5)
        for a, b in rng.random((200, 2, 2)):
            assert g.distance(a, b, UNIT_T) <= g.distance(a, b, UNIT_E) + 1e-15


class TestPlacePoisson:
    def test_empty(self):
        assert g.place_poisson(0, UNIT_E, seed=1).n == 0

    def test_negative_raises(self):
        with pytest.raises(ValueError):
            g.place_poisson(-1, UNIT_E, seed=1)

    def test_determinism(self):
        a = g.place_poisson(1000, UNIT_E, seed=77)
        b = g.place_poisson(1000, UNIT_E, seed=77)
        assert np.array_equal(a.positions, b.positions)
        c = g.place_poisson(1000, UNIT_E, seed=78)
        assert not np.array_equal(a.positions, c.positions)

    def test_subsquare_counts_binomial(self):
        # Count in a fixed 0.1 x 0.1 sub-square: Binomial(1e5, 0.01),
        # so 1000 +- 3 * sqrt(1e5 * 0.01 * 0.99) ~= 1000 +- 94.4.
        for seed in (1, 2, 3):
            lay = g.place_poisson(100_000, UNIT_E, seed=seed)
            inside = (
                (lay.positions[:, 0] >= 0.4)
                & (lay.positions[:, 0] < 0.5)
                & (lay.positions[:, 1] >= 0.4)
                & (lay.positions[:, 1] < 0.5)
            )
            assert abs(int(inside.sum()) - 1000) <= 94.4

    def test_no_duplicate_positions(self):
        lay = g.place_poisson(5000, UNIT_E, seed=9)
        key = lay.positions[:, 0] + 1j * lay.positions[:, 1]
        assert len(np.unique(key)) == lay.n


class TestHexLattice:
    def test_spacing_formula(self):
        assert g.hex_spacing(1.0) == pytest.approx(math.sqrt(2 / math.sqrt(3)))
        assert g.hex_spacing(1.0) == pytest.approx(1.0746, abs=1e-4)
        with pytest.raises(ValueError):
            g.hex_spacing(0.0)

    def test_unit_square_count_near_density(self):
        lay = g.place_hex_lattice(350.0, UNIT_E)
        assert 350 * 0.95 <= lay.n <= 350 * 1.05

    def test_interior_nodes_have_six_equidistant_neighbors(self):
        z = 350.0
        r = g.hex_spacing(z)
        lay = g.place_hex_lattice(z, UNIT_E)
        pos = lay.positions
        interior = (
            (pos[:, 0] > 1.5 * r)
            & (pos[:, 0] < 1 - 1.5 * r)
            & (pos[:, 1] > 1.5 * r)
            & (pos[:, 1] < 1 - 1.5 * r)
        )
        assert interior.sum() > 100
        d = np.sqrt(((pos[None, :, :] - pos[:, None, :]) ** 2).sum(axis=2))
        for i in np.flatnonzero(interior):
            neigh = np.sort(d[i][d[i] > 0])[:6]
            assert np.all(np.abs(neigh - r) < 1e-9)

    def test_torus_layout_exact_density_and_neighbors(self):
        z = 350.0
        lay = g.hex_torus_layout(z)
        assert lay.n / lay.region.area == pytest.approx(z, rel=1e-12)
        r = g.hex_spacing(z)
        # every node, seam included, has exactly six neighbors at spacing r
        for i in range(0, lay.n, 17):
            ds = sorted(
                g.distance(lay.positions[i], lay.positions[j], lay.region)
                for j in range(lay.n)
                if j != i
            )[:6]
            assert np.all(np.abs(np.array(ds) - r) < 1e-9)


class TestNearestQueries:
    def test_single_node_at_query_point(self):
        lay = g.Layout([[0.25, 0.25]], UNIT_E)
        nid, d = g.nearest_active((0.25, 0.25), np.array([True]), lay)
        assert nid == 0 and d == 0.0

    def test_two_candidates(self):
        lay = g.Layout([[0.0, 0.0], [0.99, 0.99]], UNIT_E)
        nid, d = g.nearest_active((0.1, 0.1), np.ones(2, bool), lay)
        assert nid == 0
        assert d == pytest.approx(math.sqrt(0.02))

    def test_no_active_raises(self):
        lay = g.place_poisson(10, UNIT_E, seed=3)
        with pytest.raises(EmptyActiveSetError):
            g.nearest_active((0.5, 0.5), np.zeros(10, bool), lay)

    @pytest.mark.parametrize("region", [UNIT_E, UNIT_T])
    def test_matches_linear_scan(self, region):
        rng = np.random.default_rng(11)
        lay = g.place_poisson(500, region, seed=21)
        for _ in range(10):
            active = rng.random(500) < rng.uniform(0.05, 0.9)
            if not active.any():
                active[0] = True
            for p in rng.random((100, 2)):
                nid, d = g.nearest_active(p, active, lay)
                oid, od = scan_nearest(p, active, lay)
                assert (nid, d) == (oid, od)

    @pytest.mark.parametrize("region", [UNIT_E, UNIT_T])
    def test_k_nearest_matches_linear_scan(self, region):
        rng = np.random.default_rng(13)
        lay = g.place_poisson(400, region, seed=22)
        for _ in range(200):
            active = rng.random(400) < 0.5
            p = rng.random(2)
            k = int(rng.integers(1, 8))
            radius = float(rng.uniform(0.02, 0.3))
            got = g.k_nearest_active(p, k, radius, active, lay)
            want = scan_k_nearest(p, k, radius, active, lay)
            assert got == want

    def test_k_nearest_out_of_range_empty(self):
        lay = g.Layout([[0.9, 0.9]], UNIT_E)
        assert g.k_nearest_active((0.1, 0.1), 3, 0.05, np.ones(1, bool), lay) == []

    def test_k_nearest_lattice_ring(self):
        # six near-equidistant lattice neighbors: k=3 picks from that ring
        # and agrees with the scan oracle (exact ties cannot arise on the
        # float lattice; see test_k_nearest_exact_tie_break)
        z = 350.0
        lay = g.hex_torus_layout(z)
        r = g.hex_spacing(z)
        i = lay.n // 2 + 3
        got = g.k_nearest_active(
            lay.positions[i], 3, 1.5 * r, np.ones(lay.n, bool), lay, exclude_id=i
        )
        assert len(got) == 3
        assert all(d == pytest.approx(r, abs=1e-9) for _, d in got)
        assert got == scan_k_nearest(
            lay.positions[i], 3, 1.5 * r, np.ones(lay.n, bool), lay, exclude=i
        )

    def test_k_nearest_exact_tie_break(self):
        # (+-a, +-b) and (+-b, +-a) around the query are bit-for-bit
        # equidistant, so ties must resolve to the lowest ids
        a, b = 0.125, 0.25  # dyadic, so every offset sum is exact
        center = np.array([0.5, 0.5])
        offs = [
            (a, b), (a, -b), (-a, b), (-a, -b),
            (b, a), (b, -a), (-b, a), (-b, -a),
        ]
        lay = g.Layout([center + o for o in offs], UNIT_E)
        got = g.k_nearest_active(center, 3, 0.5, np.ones(8, bool), lay)
        assert [nid for nid, _ in got] == [0, 1, 2]
        assert all(d == got[0][1] for _, d in got)

    def test_k_nearest_validation(self):
        lay = g.Layout([[0.5, 0.5]], UNIT_E)
        with pytest.raises(ValueError):
            g.k_nearest_active((0.1, 0.1), 0, 0.5, np.ones(1, bool), lay)
        with pytest.raises(ValueError):
            g.k_nearest_active((0.1, 0.1), 1, 0.0, np.ones(1, bool), lay)


class TestLayout:
    def test_positions_read_only(self):
        lay = g.place_poisson(10, UNIT_E, seed=1)
        with pytest.raises(ValueError):
            lay.positions[0, 0] = 0.5

    def test_rejects_out_of_region(self):
        with pytest.raises(ValueError):
            g.Layout([[1.0, 0.5]], UNIT_E)  # x == width is outside

    def test_csv_round_trip(self, tmp_path):
        lay = g.place_poisson(50, UNIT_E, seed=4)
        path = tmp_path / "layout.csv"
        lay.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "id,x,y"
        back = g.Layout.from_csv(path, UNIT_E)
        assert np.array_equal(back.positions, lay.positions)
