import math

import numpy as np
import pytest
import sympy

from slelab import cutmeasure, geometry, gff
from slelab.errors import DomainError, EstimationError, ParameterError


def two_pocket_raster():
    """Thick-walled box with a divider: two fully enclosed pockets."""
    cells = np.zeros((40, 64), np.uint8)
    cells[4:8, 4:60] = 1    # bottom wall
    cells[32:36, 4:60] = 1  # top wall
    cells[4:36, 4:8] = 1    # left wall
    cells[4:36, 56:60] = 1  # right wall
    cells[4:36, 30:34] = 1  # divider
    return geometry.label_components(cells, (0.0, 0.0), 1.0 / 32, "plane")


def uniform_gmc(raster, gamma=1.0, level=0.0):
    ny, nx = raster.shape
    a = raster.spacing
    field = gff.DiscreteField(np.full((ny, nx), level), raster.origin, a, kind="fixture")
    return gff.gmc_area(field, gamma)


class TestBubbleTable:
    def test_two_pockets_uniform_areas(self):
        raster = two_pocket_raster()
        gmc = uniform_gmc(raster)
        table = cutmeasure.bubble_table(raster, gmc)
        assert len(table) == 2
        a = raster.spacing
        sizes = raster.component_sizes()
        unit = a ** (2 + 0.5)
        # node-per-cell alignment: areas equal cell counts times the unit mass
        assert np.allclose(np.sort(table.areas), np.sort(sizes * unit), rtol=1e-9)

    def test_no_bounded_components(self):
        seg = np.linspace(0, 1 + 1j, 50)
        raster = geometry.rasterize(seg, 1 / 64, geometry="plane")
        gmc = uniform_gmc(raster)
        assert len(cutmeasure.bubble_table(raster, gmc)) == 0

    def test_areas_bounded_by_total_mass(self):
        raster = two_pocket_raster()
        gmc = uniform_gmc(raster)
        table = cutmeasure.bubble_table(raster, gmc)
        assert table.areas.sum() <= gmc.total + 1e-12

    def test_closing_point_on_boundary(self):
        raster = two_pocket_raster()
        table = cutmeasure.bubble_table(raster, uniform_gmc(raster))
        lab = raster.labels
        for z in table.closing_points:
            i = int((z.real - raster.origin[0]) / raster.spacing)
            j = int((z.imag - raster.origin[1]) / raster.spacing)
            assert lab[j, i] == geometry.TRACE

    def test_grid_mismatch_rejected(self):
        raster = two_pocket_raster()
        small = gff.DiscreteField(np.zeros((8, 8)), (10.0, 10.0), 0.01, kind="fixture")
        with pytest.raises(ParameterError):
            cutmeasure.bubble_table(raster, gff.gmc_area(small, 1.0))


class TestCutMeasure:
    def test_threshold_above_max_area(self):
        raster = two_pocket_raster()
        table = cutmeasure.bubble_table(raster, uniform_gmc(raster))
        mu = cutmeasure.cut_measure(table, table.areas.max() * 2, 6.0)
        assert len(mu) == 0 and mu.total == 0.0

    def test_atom_mass_kp6(self):
        raster = two_pocket_raster()
        table = cutmeasure.bubble_table(raster, uniform_gmc(raster))
        eps = table.areas.min() / 2
        mu = cutmeasure.cut_measure(table, eps, 6.0)
        assert np.allclose(mu.masses, eps ** 0.25)

    def test_monotone_in_epsilon(self):
        raster = two_pocket_raster()
        table = cutmeasure.bubble_table(raster, uniform_gmc(raster))
        eps = float(np.median(table.areas))
        coarse = cutmeasure.cut_measure(table, eps, 6.0)
        fine = cutmeasure.cut_measure(table, eps / 2, 6.0)
        assert len(fine) >= len(coarse)
        assert set(np.round(coarse.points, 12)) <= set(np.round(fine.points, 12))


class TestCrReweight:
    def test_exponent_value_kp6(self):
        assert cutmeasure.cr_exponent(6.0) == pytest.approx(2 - 8 / 6 - 6 / 8)
        assert cutmeasure.cr_exponent(6.0) == pytest.approx(-1 / 12)

    def test_factor_at_i(self):
        mu = cutmeasure.AtomicMeasure(np.array([1j]), np.array([1.0]))
        out = cutmeasure.cr_reweight(mu, "H", 6.0)
        assert out.masses[0] == pytest.approx(2.0 ** (-1 / 12))

    def test_exponent_never_zero_in_range(self):
        x = sympy.Symbol("x", positive=True)
        roots = sympy.solve(sympy.Eq(2 - 8 / x - x / 8, 0), x)
        assert all(not (4 < complex(r).real < 8) or abs(complex(r).imag) > 0
                   or complex(r).real == 8 for r in roots)
        # the only root is kappa' = 8, outside (4, 8)
        assert {complex(r) for r in roots} == {complex(8.0)}

    def test_scaling_doubles_exactly(self):
        kp = 5.5
        expo = cutmeasure.cr_exponent(kp)
        mu1 = cutmeasure.cr_reweight(
            cutmeasure.AtomicMeasure(np.array([0.3 + 0.7j]), np.array([1.0])), "H", kp)
        mu2 = cutmeasure.cr_reweight(
            cutmeasure.AtomicMeasure(np.array([0.6 + 1.4j]), np.array([1.0])), "H", kp)
        assert mu2.masses[0] / mu1.masses[0] == pytest.approx(2.0 ** expo, rel=1e-12)

    def test_atom_outside_domain(self):
        mu = cutmeasure.AtomicMeasure(np.array([1.0 - 1j]), np.array([1.0]))
        with pytest.raises(DomainError):
            cutmeasure.cr_reweight(mu, "H", 6.0)


class TestCovarianceExponent:
    def test_synthetic_power_law(self):
        rng = np.random.default_rng(0)
        base = rng.uniform(1.0, 2.0, 50)
        mass_by_scale = {lam: base * lam ** 0.75 for lam in (1.0, 2.0, 4.0, 8.0)}
        slope = cutmeasure.covariance_exponent(mass_by_scale)
        assert slope == pytest.approx(0.75, abs=1e-6)

    def test_insufficient_data(self):
        with pytest.raises(EstimationError):
            cutmeasure.covariance_exponent({1.0: [1.0]})
        with pytest.raises(EstimationError):
            cutmeasure.covariance_exponent({1.0: [1.0], 2.0: []})


class TestDiameterBoundFit:
    def test_uniform_segment_measure(self):
        pts = np.linspace(0, 1, 2000) + 0j
        mu = cutmeasure.AtomicMeasure(pts, np.full(2000, 1 / 2000))
        rng = np.random.default_rng(1)
        balls = [(complex(rng.uniform(0.2, 0.8), 0), r)
                 for r in (0.02, 0.04, 0.08, 0.16) for _ in range(20)]
        fit = cutmeasure.diameter_bound_fit(mu, balls)
        assert fit["exponent_hat"] == pytest.approx(1.0, abs=0.05)

    def test_single_atom(self):
        mu = cutmeasure.AtomicMeasure(np.array([0.5 + 0j]), np.array([2.0]))
        balls = [(0.5 + 0j, r) for r in (0.01, 0.02, 0.04, 0.08)] * 15
        fit = cutmeasure.diameter_bound_fit(mu, balls)
        assert fit["exponent_hat"] == pytest.approx(0.0, abs=1e-9)
        assert fit["C_hat"] == pytest.approx(2.0)

    def test_too_few_balls(self):
        mu = cutmeasure.AtomicMeasure(np.array([0j]), np.array([1.0]))
        with pytest.raises(EstimationError):
            cutmeasure.diameter_bound_fit(mu, [(0j, 0.1)] * 10)


class TestVagueStabilization:
    def test_reports_relative_change(self):
        raster = two_pocket_raster()
        table = cutmeasure.bubble_table(raster, uniform_gmc(raster))
        eps0 = table.areas.min() / 2

        def bump(z):
            return np.exp(-np.abs(z - (1.0 + 0.6j)) ** 2)

        rep = cutmeasure.vague_stabilization(table, 6.0, [eps0, eps0 / 2, eps0 / 4], bump)
        assert len(rep["values"]) == 3
        assert rep["relative_change_finest"] >= 0.0
