import math

import numpy as np
import pytest
from scipy import stats

from slelab import processes
from slelab.errors import ParameterError


class TestBrownian:
    def test_single_step_starts_at_zero(self):
        path = processes.sample_brownian(1, 1.0, seed=5)
        assert len(path) == 2
        assert path.values[0] == 0.0

    def test_variance_and_covariance(self):
        # oracle: Var(B_1) = 1 and Cov(B_0.5, B_1) = min(0.5, 1) = 0.5
        n = 100_000
        b_half = np.empty(n)
        b_one = np.empty(n)
        for s in range(n):
            p = processes.sample_brownian(2, 0.5, seed=s)
            b_half[s], b_one[s] = p.values[1], p.values[2]
        assert np.var(b_one) == pytest.approx(1.0, abs=0.02)
        assert np.mean(b_half * b_one) == pytest.approx(0.5, abs=0.02)

    def test_seed_reproducible(self):
        a = processes.sample_brownian(64, 0.01, seed=9)
        b = processes.sample_brownian(64, 0.01, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_marginal_ks(self):
        # increments of one long path are iid N(0, dt)
        p = processes.sample_brownian(100_000, 1.0, seed=11)
        inc = np.diff(p.values)
        assert stats.kstest(inc, "norm").pvalue > 1e-3

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            processes.sample_brownian(0, 1.0, 1)
        with pytest.raises(ParameterError):
            processes.sample_brownian(10, -1.0, 1)


class TestSleRhoDriving:
    def test_no_force_points_is_scaled_brownian(self):
        drv = processes.sample_sle_rho_driving(2.0, [], [], 1.0, 1e-3, seed=3)
        bm = processes.sample_brownian(1000, 1e-3, seed=3)
        assert np.allclose(drv.path.values, math.sqrt(2.0) * bm.values, atol=1e-10)
        assert drv.halted_at is None

    def test_zero_weight_force_point_is_plain_sle(self):
        plain = processes.sample_sle_rho_driving(6.0, [], [], 0.5, 1e-3, seed=21)
        with_fp = processes.sample_sle_rho_driving(6.0, [0.0], [(0.0, "R")], 0.5, 1e-3, seed=21)
        assert np.array_equal(plain.path.values, with_fp.path.values)

    def test_continuation_threshold_hit(self):
        # single force point with rho <= -2 collides and halts; brute-force
        # finer-dt runs agree on the halting behavior
        halted = 0
        for s in range(40):
            rec = processes.sample_sle_rho_driving(
                4.0, [-2.5], [(0.0, "R")], 10.0, 1e-3, seed=s)
            halted += rec.halted_at is not None
        assert halted >= 40 * 0.99
        fine = processes.sample_sle_rho_driving(4.0, [-2.5], [(0.0, "R")], 10.0, 1e-4, seed=0)
        assert fine.halted_at is not None

    def test_ordering_invariant(self):
        rec = processes.sample_sle_rho_driving(
            6.0, [1.0, 0.5, 0.5], [(-0.3, "L"), (0.2, "R"), (0.9, "R")], 1.0, 1e-3, seed=7)
        assert rec.ordering_ok()

    def test_unordered_force_points_rejected(self):
        with pytest.raises(ParameterError):
            processes.sample_sle_rho_driving(6.0, [1.0, 1.0],
                                             [(0.9, "R"), (0.2, "R")], 1.0, 1e-3, seed=1)


class TestRadialDriving:
    def test_unit_modulus_invariant(self):
        rec = processes.sample_radial_driving(6.0, 0.0, 1.0, 1.0, 1e-5, seed=2)
        w = rec.complex_driving()
        assert len(w) == 100_001
        assert np.abs(np.abs(w) - 1.0).max() <= 1e-9

    def test_angle_variance_matches_kappa_t(self):
        # rho = 0 decouples W from O: arg W_t - arg W_0 = sqrt(kappa) B_t
        kappa, horizon = 6.0, 0.05
        end = np.array([
            processes.sample_radial_driving(kappa, 0.0, 1j, horizon, 5e-4, seed=s)
            .path.values[-1]
            for s in range(3000)
        ])
        assert np.var(end) == pytest.approx(kappa * horizon, rel=0.10)

    def test_drift_only_rotates_away(self):
        # noise switched off, rho = kappa - 6 = 0 at kappa = 6: the Loewner
        # flow repels O from W so the angular gap grows monotonically
        rec = processes.sample_radial_driving(6.0, 0.0, np.exp(0.2j), 0.5, 1e-3,
                                              seed=0, drift_only=True)
        gap = np.abs(rec.force_points[0].path.values - rec.path.values)
        assert np.all(np.diff(gap) > 0)

    def test_drift_only_repulsive_weight(self):
        rec = processes.sample_radial_driving(6.0, 2.0, np.exp(0.2j), 0.5, 1e-3,
                                              seed=0, drift_only=True)
        gap = np.abs(rec.force_points[0].path.values - rec.path.values)
        assert np.all(np.diff(gap) > 0)

    def test_rho_at_most_minus_two_unsupported(self):
        with pytest.raises(ParameterError):
            processes.sample_radial_driving(6.0, -2.0, 1.0, 1.0, 1e-3, seed=1)


class TestBessel:
    def test_local_time_constant_on_excursions(self):
        bp = processes.sample_bessel(1.5, 20.0, 1e-3, seed=4)
        t = bp.path.times
        lt = bp.local_time.values
        for (s, e, _) in bp.excursions:
            i0 = np.searchsorted(t, s) + 1
            i1 = np.searchsorted(t, e) - 1
            if i1 > i0:
                assert np.all(np.diff(lt[i0:i1]) == 0.0)

    def test_nonnegative_path(self):
        bp = processes.sample_bessel(1.25, 5.0, 1e-3, seed=8)
        assert bp.path.values.min() >= 0.0

    def test_excursion_slope_delta_15(self):
        # counts of excursions of length >= eps per unit local time scale like
        # eps^(delta/2 - 1); delta = 1.5 gives slope -0.25
        paths = [processes.sample_bessel(1.5, 60.0, 2e-4, seed=s) for s in range(6)]
        assert processes.excursion_count_slope(paths) == pytest.approx(-0.25, abs=0.1)

    def test_local_time_grows(self):
        # a longer horizon extends the same path (nested draws), so per-path
        # totals are nondecreasing; ensemble means grow toward infinity
        horizons = (2.0, 8.0, 32.0)
        totals = np.array([
            [processes.sample_bessel(1.5, T, 1e-3, seed=s).local_time.values[-1]
             for T in horizons] for s in range(20)])
        assert np.all(np.diff(totals, axis=1) >= 0)
        means = totals.mean(axis=0)
        assert means[0] < means[1] < means[2]

    def test_delta_out_of_range(self):
        with pytest.raises(ParameterError):
            processes.sample_bessel(2.5, 1.0, 1e-3, seed=1)


class TestStable:
    def test_positivity_parameter(self):
        # P(X_1 >= 0) = 1 - 1/alpha for the one-sided stable law used here
        path = processes.sample_stable_one_sided(1.5, 100_000.0, 1.0, seed=6)
        inc = np.diff(path.values)
        assert np.mean(inc >= 0) == pytest.approx(1 - 1 / 1.5, abs=0.02)

    def test_self_similarity(self):
        # X_ct / c^(1/alpha) has the law of X_t: two-sample KS below 0.02
        alpha, c = 1.5, 4.0
        a = np.diff(processes.sample_stable_one_sided(alpha, 50_000, 1.0, seed=1).values)
        b = np.diff(processes.sample_stable_one_sided(alpha, 50_000 * c, c, seed=2).values)
        b = b / c ** (1 / alpha)
        d = stats.ks_2samp(a, b).statistic
        assert d < 0.02

    def test_marginal_against_reference(self):
        # KS against the scipy stable cdf evaluated on an interpolation grid
        alpha = 1.5
        inc = np.sort(np.diff(
            processes.sample_stable_one_sided(alpha, 100_000, 1.0, seed=3).values))
        grid = np.linspace(inc[50], inc[-50], 3001)
        ref = stats.levy_stable.cdf(grid, alpha, 1.0)
        emp_at_grid = np.searchsorted(inc, grid, side="right") / len(inc)
        # KS critical value at significance 1e-3 for n = 1e5 is ~0.0062;
        # allow the cdf-interpolation slack on top
        assert np.abs(emp_at_grid - ref).max() < 0.0062 + 0.002

    def test_one_sided_jumps(self):
        # jumps are positive: the negative tail of an increment is light; the
        # 1e-8 quantile of the standard law bounds the most negative step
        alpha = 1.5
        inc = np.diff(processes.sample_stable_one_sided(alpha, 100_000, 1.0, seed=9).values)
        floor = stats.levy_stable.ppf(1e-8, alpha, 1.0)
        assert inc.min() > floor
        assert inc.max() > -10 * floor  # heavy side dwarfs the light side

    def test_alpha_range(self):
        with pytest.raises(ParameterError):
            processes.sample_stable_one_sided(2.3, 1.0, 0.1, seed=1)


class TestPoissonTail:
    def test_formula_value(self):
        # exp(100*(0.5 - 0.5 log 0.5 - 1)) = exp(-15.3426...) ~ 2.2e-7
        val = processes.poisson_lower_tail(100.0, 0.5)
        assert val == pytest.approx(math.exp(100 * (0.5 - 0.5 * math.log(0.5) - 1.0)))
        assert val == pytest.approx(2.2e-7, rel=0.05)

    def test_limit_alpha_to_one(self):
        assert processes.poisson_lower_tail(5.0, 1 - 1e-9) == pytest.approx(1.0, abs=1e-6)

    def test_dominates_empirical(self):
        rng = np.random.default_rng(0)
        draws = rng.poisson(100.0, size=1_000_000)
        assert np.mean(draws <= 50) <= processes.poisson_lower_tail(100.0, 0.5)
        draws20 = rng.poisson(20.0, size=1_000_000)
        # exact P[Z <= 10 | lam = 20] ~ 0.0108 sits under the bound ~ 0.0465
        assert np.mean(draws20 <= 10) <= processes.poisson_lower_tail(20.0, 0.5)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            processes.poisson_lower_tail(-1.0, 0.5)
        with pytest.raises(ParameterError):
            processes.poisson_lower_tail(1.0, 1.5)
