import math

import numpy as np
import pytest

from slelab import flowlines, gff, hypwhitney
from slelab.errors import DomainError


class TestWhitneyDecompose:
    def test_square_center_squares(self):
        dom = hypwhitney.SquareDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=6)
        quarters = dec.sides == 0.25
        assert quarters.sum() == 4  # the four central squares of side 1/4
        corners = set(np.round(dec.corners[quarters], 12))
        assert corners == {0.25 + 0.25j, 0.5 + 0.25j, 0.25 + 0.5j, 0.5 + 0.5j}

    def test_sandwich_exact(self):
        for dom in (hypwhitney.SquareDomain(), hypwhitney.DiskDomain()):
            dec = hypwhitney.whitney_decompose(dom, max_level=7)
            for c, s in zip(dec.corners, dec.sides):
                d = dom.dist_inf(c.real, c.imag, s)
                assert s <= d <= 4 * s  # sup-norm diameter of a square is its side

    def test_disjoint_interiors(self):
        dec = hypwhitney.whitney_decompose(hypwhitney.DiskDomain(), max_level=6)
        boxes = [(c.real, c.imag, s) for c, s in zip(dec.corners, dec.sides)]
        # overlap would need one corner strictly inside another box
        for x, y, s in boxes[:200]:
            cx, cy = x + s / 2, y + s / 2
            inside = [(bx, by, bs) for bx, by, bs in boxes
                      if bx < cx < bx + bs and by < cy < by + bs]
            assert len(inside) == 1

    def test_disk_count_slope(self):
        dec = hypwhitney.whitney_decompose(hypwhitney.DiskDomain(), max_level=9)
        sides, counts = np.unique(dec.sides, return_counts=True)
        keep = (counts >= 8) & (sides <= 1 / 16)  # asymptotic levels only
        slope = np.polyfit(np.log(1.0 / sides[keep]), np.log(counts[keep]), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.1)

    def test_hyperbolic_diameter_below_one(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=8)
        for c, s in zip(dec.corners, dec.sides):
            probes = [c, c + s, c + 1j * s, c + s + 1j * s,
                      c + s / 2, c + s + 1j * s / 2, c + s / 2 + 1j * s,
                      c + 1j * s / 2]
            worst = 0.0
            for i in range(len(probes)):
                for j in range(i + 1, len(probes)):
                    worst = max(worst, hypwhitney.hyperbolic_distance(
                        dom, probes[i], probes[j]))
            assert worst <= 1.0


class TestHyperbolicMetric:
    def test_distance_to_tanh_one(self):
        dom = hypwhitney.DiskDomain()
        assert hypwhitney.hyperbolic_distance(dom, 0, math.tanh(1.0)) == pytest.approx(
            1.0, abs=1e-12)

    def test_closed_form_radial_distance(self):
        dom = hypwhitney.DiskDomain()
        for r in (0.1, 0.5, 0.9):
            want = 0.5 * math.log((1 + r) / (1 - r))
            assert hypwhitney.hyperbolic_distance(dom, 0, r) == pytest.approx(want,
                                                                              abs=1e-12)

    def test_geodesic_formula(self):
        # |geodesic(0, e^{i theta}, t)| = tanh t; at t = 1 this is 0.761594...
        dom = hypwhitney.DiskDomain()
        for theta in (0.0, 1.1, 3.7):
            z = hypwhitney.geodesic(dom, 0, np.exp(1j * theta), 1.0)
            assert abs(z) == pytest.approx(math.tanh(1.0), abs=1e-9)
            assert np.angle(z) == pytest.approx(np.angle(np.exp(1j * theta)), abs=1e-9)
        assert math.tanh(1.0) == pytest.approx(0.7615941559, abs=1e-9)

    def test_moebius_invariance(self):
        dom = hypwhitney.DiskDomain()
        rng = np.random.default_rng(0)
        for _ in range(20):
            z, w = [complex(*rng.uniform(-0.6, 0.6, 2)) for _ in range(2)]
            a = complex(*rng.uniform(-0.5, 0.5, 2))
            th = rng.uniform(0, 2 * np.pi)

            def moeb(u):
                return np.exp(1j * th) * (u - a) / (1 - np.conj(a) * u)

            d1 = hypwhitney.hyperbolic_distance(dom, z, w)
            d2 = hypwhitney.hyperbolic_distance(dom, moeb(z), moeb(w))
            assert d2 == pytest.approx(d1, abs=1e-9)

    def test_unit_speed(self):
        dom = hypwhitney.DiskDomain()
        ts = np.linspace(0.2, 1.3, 10)  # stay short of the endpoint distance
        pts = hypwhitney.geodesic(dom, 0.1 + 0.2j, 0.9, ts)
        for i in range(len(ts) - 1):
            seg = hypwhitney.hyperbolic_distance(dom, pts[i], pts[i + 1])
            assert seg == pytest.approx(ts[i + 1] - ts[i], rel=0.05)

    def test_increasing_separation(self):
        dom = hypwhitney.DiskDomain()
        ts = np.linspace(0.1, 3.0, 24)
        g1 = hypwhitney.geodesic(dom, 0, np.exp(0.3j), ts)
        g2 = hypwhitney.geodesic(dom, 0, np.exp(2.1j), ts)
        seps = [hypwhitney.hyperbolic_distance(dom, a, b) for a, b in zip(g1, g2)]
        assert np.all(np.diff(seps) > 0)


class TestGeodesicStatistics:
    def test_single_target_finite(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=8)
        res = hypwhitney.good_cubes_statistic(dom, np.array([1.0 + 0j]), 0.5,
                                              decomposition=dec)
        assert np.isfinite(res["statistic"])
        assert res["statistic"] > 0

    def test_statistic_monotone_in_a(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=8)
        th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        x = np.exp(1j * th)
        s1 = hypwhitney.good_cubes_statistic(dom, x, 0.3, decomposition=dec)["statistic"]
        s2 = hypwhitney.good_cubes_statistic(dom, x, 0.6, decomposition=dec)["statistic"]
        assert s2 <= s1 + 1e-12  # len(Q) <= 1 so len^a is nonincreasing in a

    def test_single_point_counts_bounded(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=9)
        counts = hypwhitney.geodesic_square_counts(dom, np.array([1.0 + 0j]),
                                                   range(1, 9), decomposition=dec)
        assert max(counts.values()) <= 8

    def test_circle_counts_slope(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=9)
        th = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        counts = hypwhitney.geodesic_square_counts(dom, np.exp(1j * th),
                                                   range(2, 9), decomposition=dec,
                                                   n_probes=256)
        js = sorted(j for j, c in counts.items() if c > 0)
        slope = np.polyfit(js, [math.log2(counts[j]) for j in js], 1)[0]
        assert slope == pytest.approx(1.0, abs=0.15)


class TestGoodAnnulus:
    def _grid(self, n=64):
        field = gff.field_from_function(lambda z: 0.0 * np.real(z), n=n)
        return field, flowlines.build_flow_grid(field, (0j, 9 / 16, 15 / 16),
                                                1 / 8, 16 / 6.0)

    def test_zero_field_fails_item_i(self):
        field, grid = self._grid(128)
        pockets = flowlines.classify_pockets(grid)
        y = flowlines.build_Y(grid, pockets, 6.0, seed=1, n_steps=200, n_points=50)
        rep = hypwhitney.good_annulus_check(field, y, grid, pockets, 0j, 0,
                                            a=0.2, M=20, kappa_prime=6.0)
        assert rep["items"]["i"] is False
        assert rep["passed"] is False

    def test_synthetic_ring_passes_item_i(self):
        field, grid = self._grid(128)
        # hand-built Y raster: everything blocked except one free ring that
        # meets A0 and sits inside A1
        ny, nx = grid.union.shape
        h = grid.raster_spacing
        x = grid.origin[0] + (np.arange(nx) + 0.5) * h
        y = grid.origin[1] + (np.arange(ny) + 0.5) * h
        xx, yy = np.meshgrid(x, y)
        rr = np.hypot(xx, yy)
        free_ring = (rr > 0.68) & (rr < 0.76)
        y_mask = np.ones_like(grid.union)
        y_mask[free_ring] = 0
        y_res = {"raster": y_mask, "curves": {}, "skipped": [],
                 "marker": flowlines.HEURISTIC}
        rep = hypwhitney.good_annulus_check(field, y_res, grid, [], 0j, 0,
                                            a=0.2, M=20, kappa_prime=6.0)
        assert rep["items"]["i"] is True

    def test_report_structure(self):
        field, grid = self._grid(128)
        pockets = flowlines.classify_pockets(grid)
        y = flowlines.build_Y(grid, pockets, 6.0, seed=1, n_steps=200, n_points=50)
        rep = hypwhitney.good_annulus_check(field, y, grid, pockets, 0j, 0,
                                            a=0.2, M=20, kappa_prime=6.0)
        assert set(rep["items"]) == {"i", "ii", "iii", "iv", "v"}
        assert rep["marker"] == flowlines.HEURISTIC


class TestPolygonDomain:
    def test_square_polygon_metric_matches_map(self):
        th = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        circle = np.exp(1j * th)
        dom = hypwhitney.PolygonDomain(circle, anchor=0j)
        d = hypwhitney.hyperbolic_distance(dom, 0, 0.5)
        want = 0.5 * math.log(3.0)  # disk formula at r = 1/2
        assert d == pytest.approx(want, rel=1e-3)

    def test_raster_component_domain(self):
        mask = np.zeros((40, 40), bool)
        mask[8:32, 8:32] = True
        dom = hypwhitney.PolygonDomain.from_raster_component(mask, (0.0, 0.0), 1 / 40)
        assert dom.contains(dom.reference)
        dec = hypwhitney.whitney_decompose(dom, max_level=6)
        assert len(dec) > 0
