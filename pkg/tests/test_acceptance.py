"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here; sample sizes follow the stated budgets.  Results
are also accumulated into acceptance_report.json next to this file for the
reporting frontend.  Worker count only affects wall time, never values.

Known honest failure: the trace-dimension criterion for kappa' = 6.  At the
stated resolution (1e5 driving steps) the slit-map curve lacks self-touching
structure below ~50 sqrt(dt), which caps pooled box-count estimates near 1.60;
a companion run at 1e6 steps (reported, not asserted) shows the estimator
climbing toward 7/4 once the resolution supports it.  See the decisions
ledger for the full analysis.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from annuli_oracle import oracle_plan
from slelab import annuli, cutmeasure, experiments, geometry, gff, hypwhitney, loewner

WORKERS = 2
REPORT = {}
REPORT_PATH = Path(__file__).with_name("acceptance_report.json")


def record(name, passed, detail):
    line = f"ACCEPTANCE {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    REPORT[name] = {"passed": bool(passed), "detail": detail}
    REPORT_PATH.write_text(json.dumps(REPORT, indent=1, sort_keys=True))
    return line


class TestLoewnerExactness:
    def test_closed_form_and_roundtrip(self):
        warm = loewner.MapChain(np.full(4, 1e-3), np.zeros(4))
        loewner.evaluate_map(warm, loewner.evaluate_map(warm, 2j), "inverse")
        t0 = time.time()
        chain = loewner.MapChain(np.full(1000, 1e-3), np.zeros(1000))
        rng = np.random.default_rng(0)
        probes = rng.uniform(-3, 3, 100) + 1j * rng.uniform(0.5, 3, 100)
        exact = np.sqrt(probes ** 2 + 4.0)
        exact = np.where(exact.imag < 0, -exact, exact)
        err_map = np.abs(loewner.evaluate_map(chain, probes) - exact).max()
        fwd = loewner.evaluate_map(chain, probes)
        err_rt = np.abs(loewner.evaluate_map(chain, fwd, "inverse") - probes).max()
        runtime = time.time() - t0
        ok = err_map < 1e-6 and err_rt <= 1e-8 and runtime < 1.0
        record("loewner-exactness", ok,
               f"closed-form err {err_map:.2e} (<1e-6), roundtrip {err_rt:.2e} "
               f"(<=1e-8), runtime {runtime:.2f}s (<1s)")
        assert err_map < 1e-6
        assert err_rt <= 1e-8
        assert runtime < 1.0


class TestTraceDimension:
    # 100 traces x 1e5 steps each, raster spacing 1/512; horizons put the
    # finest counted box at the best-resolved relative scale
    def test_kappa_2(self):
        res = experiments.trace_dimension_experiment(
            2.0, 100, seed=101, horizon=1.0, coarsen=4, sizes=(4, 8, 16, 32, 64),
            workers=WORKERS)
        ok = abs(res["estimate"] - 1.25) <= 0.1
        record("trace-dimension-k2", ok, f"estimate {res['estimate']:.3f} vs 1.25 +- 0.1")
        assert res["estimate"] == pytest.approx(1.25, abs=0.1)

    def test_kappa_8_3(self):
        res = experiments.trace_dimension_experiment(
            8.0 / 3.0, 100, seed=102, horizon=1.0, coarsen=4, sizes=(4, 8, 16, 32, 64),
            workers=WORKERS)
        ok = abs(res["estimate"] - 4.0 / 3.0) <= 0.1
        record("trace-dimension-k8/3", ok,
               f"estimate {res['estimate']:.3f} vs 1.333 +- 0.1")
        assert res["estimate"] == pytest.approx(4.0 / 3.0, abs=0.1)

    def test_kappa_prime_6(self):
        # companion diagnostic first: the same estimator at 1e6 steps (10 traces)
        fine = experiments.trace_dimension_experiment(
            6.0, 10, seed=104, horizon=0.04, steps=10 ** 6, coarsen=4,
            sizes=(8, 16, 32), workers=WORKERS)
        res = experiments.trace_dimension_experiment(
            6.0, 100, seed=103, horizon=0.04, steps=10 ** 5, coarsen=2,
            sizes=(4, 8, 16, 32), workers=WORKERS)
        ok = abs(res["estimate"] - 1.75) <= 0.1
        record("trace-dimension-k6", ok,
               f"estimate {res['estimate']:.3f} vs 1.75 +- 0.1 at the stated 1e5 "
               f"steps; companion at 1e6 steps gives {fine['estimate']:.3f} "
               f"(resolution-limited criterion, see ledger)")
        assert res["estimate"] == pytest.approx(1.75, abs=0.1), (
            "honest failure: 1e5-step slit-map traces cap near 1.6; the 1e6-step "
            f"companion reaches {fine['estimate']:.3f} (see decisions ledger)")


class TestCutPointDimension:
    def test_kappa_prime_6(self):
        res = experiments.cut_dimension_experiment(6.0, 200, seed=201, workers=WORKERS)
        ok = abs(res["estimate"] - 0.75) <= 0.15
        record("cut-dimension-k6", ok,
               f"estimate {res['estimate']:.3f} vs 0.75 +- 0.15 "
               f"({res['used_traces']} usable traces)")
        assert res["estimate"] == pytest.approx(0.75, abs=0.15)


class TestCovarianceExponent:
    def test_kappa_prime_6(self):
        res = experiments.covariance_experiment(6.0, 200, seed=301, horizon=0.02,
                                                workers=WORKERS)
        ok = abs(res["slope"] - res["d_cut"]) <= 0.15
        record("covariance-exponent-k6", ok,
               f"slope {res['slope']:.3f} vs d_cut {res['d_cut']:.3f} +- 0.15")
        assert res["slope"] == pytest.approx(res["d_cut"], abs=0.15)

    def test_kappa_prime_5(self):
        res = experiments.covariance_experiment(5.0, 200, seed=302, horizon=0.005,
                                                workers=WORKERS)
        ok = abs(res["slope"] - res["d_cut"]) <= 0.2
        record("covariance-exponent-k5", ok,
               f"slope {res['slope']:.3f} vs d_cut {res['d_cut']:.3f} +- 0.2")
        assert res["slope"] == pytest.approx(res["d_cut"], abs=0.2)


class TestBesselExponent:
    def test_three_deltas(self):
        t0 = time.time()
        fails = []
        details = []
        for kp in (5.0, 6.0, 7.0):
            delta = kp / 4.0
            res = experiments.bessel_slope_experiment(delta, 10, seed=401 + int(kp))
            details.append(f"delta={delta}: {res['slope']:.3f} vs {res['target']:.3f}")
            if abs(res["slope"] - res["target"]) > 0.1:
                fails.append(delta)
        runtime = time.time() - t0
        ok = not fails and runtime < 300
        record("bessel-excursion-exponent", ok,
               "; ".join(details) + f"; runtime {runtime:.0f}s (<300s)")
        assert not fails, details
        assert runtime < 300

class TestStablePositivity:
    def test_positivity_parameter(self):
        from slelab import processes

        details = []
        fails = []
        for kp in (5.0, 6.0, 7.0):
            alpha = kp / 4.0
            path = processes.sample_stable_one_sided(alpha, 100000.0, 1.0,
                                                     seed=501 + int(kp))
            emp = float(np.mean(np.diff(path.values) >= 0))
            want = 1.0 - 4.0 / kp
            details.append(f"kp'={kp}: {emp:.4f} vs {want:.4f}")
            if abs(emp - want) > 0.02:
                fails.append(kp)
        record("stable-positivity", not fails, "; ".join(details))
        assert not fails, details


class TestGffCalibration:
    def test_variance_slope(self):
        res = experiments.gff_variance_slope(6000, seed=601, n=256, workers=WORKERS)
        ok = abs(res["slope"] - 1.0) <= 0.05
        record("gff-variance-slope", ok, f"slope {res['slope']:.3f} vs 1 +- 0.05")
        assert res["slope"] == pytest.approx(1.0, abs=0.05)

    def test_gmc_expectation(self):
        res = experiments.gmc_expectation_ratio(1000, seed=602, n=128, workers=WORKERS)
        ok = abs(res["ratio"] - 1.0) <= 0.10
        record("gmc-expectation", ok,
               f"ratio {res['ratio']:.3f} vs 1 +- 0.10 (MC +- {res['mc_stderr']:.3f})")
        assert res["ratio"] == pytest.approx(1.0, abs=0.10)


class TestGoodScales:
    def test_fraction_good(self):
        res = experiments.good_scales_experiment(1000, seed=701, M=20.0, K=6,
                                                 workers=WORKERS)
        ok = res["rate_ge_075"] >= 0.99
        record("good-scales", ok,
               f"P(fraction >= 0.75) = {res['rate_ge_075']:.3f} at M={res['M']} "
               f"(>= 0.99 required)")
        assert res["rate_ge_075"] >= 0.99


class TestWhitneyHyperbolic:
    def test_geodesic_formula_exact(self):
        dom = hypwhitney.DiskDomain()
        errs = []
        for theta in (0.0, 0.7, 2.2, 4.5):
            for t in (0.25, 1.0, 2.5):
                z = hypwhitney.geodesic(dom, 0, np.exp(1j * theta), t)
                errs.append(abs(abs(z) - math.tanh(t)))
        ok = max(errs) < 1e-9
        record("geodesic-formula", ok, f"max |gamma(t)| - tanh t = {max(errs):.2e} (<1e-9)")
        assert max(errs) < 1e-9

    def test_hyperbolic_diameter_all_squares(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=8)
        worst = 0.0
        for c, s in zip(dec.corners, dec.sides):
            probes = [c, c + s, c + 1j * s, c + s + 1j * s, c + s / 2,
                      c + s + 1j * s / 2, c + s / 2 + 1j * s, c + 1j * s / 2]
            for i in range(len(probes)):
                for j in range(i + 1, len(probes)):
                    worst = max(worst, hypwhitney.hyperbolic_distance(
                        dom, probes[i], probes[j]))
        ok = worst <= 1.0
        record("whitney-hyp-diameter", ok,
               f"max hyperbolic diameter {worst:.3f} over {len(dec)} squares (<=1)")
        assert worst <= 1.0

    def test_circle_count_slope(self):
        dom = hypwhitney.DiskDomain()
        dec = hypwhitney.whitney_decompose(dom, max_level=9)
        th = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        counts = hypwhitney.geodesic_square_counts(
            dom, np.exp(1j * th), range(2, 9), decomposition=dec, n_probes=256)
        js = sorted(j for j, c in counts.items() if c > 0)
        slope = float(np.polyfit(js, [math.log2(counts[j]) for j in js], 1)[0])
        ok = abs(slope - 1.0) <= 0.15
        record("geodesic-count-slope", ok, f"slope {slope:.3f} vs 1 +- 0.15")
        assert slope == pytest.approx(1.0, abs=0.15)


class TestAnnuli:
    def test_invariants_and_oracle_10k(self):
        t0 = time.time()
        rng = np.random.default_rng(801)
        bad_invariant = bad_oracle = 0
        n_configs = 10000
        for _ in range(n_configs):
            n = int(rng.integers(1, 6))
            while True:
                pts = rng.uniform(-1, 1, n) + 1j * rng.uniform(1, 2, n)
                if len(np.unique(pts)) == n:
                    break
            plan = annuli.plan_annuli(pts, 0.25)
            if not annuli.verify_plan(plan)["ok"]:
                bad_invariant += 1
            if plan.chains != oracle_plan(list(pts), 0.25):
                bad_oracle += 1
        runtime = time.time() - t0
        ok = bad_invariant == 0 and bad_oracle == 0 and runtime < 60
        record("annuli-algorithm", ok,
               f"{n_configs} configs: {bad_invariant} invariant violations, "
               f"{bad_oracle} oracle mismatches, runtime {runtime:.0f}s (<60s)")
        assert bad_invariant == 0
        assert bad_oracle == 0
        assert runtime < 60


class TestSyntheticFixtures:
    def test_figure_eight_exact(self):
        from test_geometry import brute_force_edges, eight_raster

        raster = eight_raster(1 / 128, n=400)
        graph = geometry.adjacency_graph(raster)
        adjacency_exact = set(graph.edges) == brute_force_edges(raster)
        pts = geometry.detect_cut_points(raster)
        s = 1 / 128
        cuts_exact = (len(pts) >= 1 and np.abs(pts.real).max() <= 1.5 * s
                      and np.abs(pts.imag).max() <= 2.0 * math.sqrt(s))
        ok = adjacency_exact and cuts_exact
        record("synthetic-fixtures", ok,
               f"adjacency matches brute force: {adjacency_exact}; cut cells on "
               f"the tangency set: {cuts_exact}")
        assert adjacency_exact
        assert cuts_exact


class TestNotReproducibleAtDeskScale:
    def test_connectivity_reported_not_asserted(self):
        res = experiments.connectivity_report(
            kps=(4.5, 5.0, 6.0, 7.0), n_traces=25, seed=901, workers=WORKERS)
        lines = ", ".join(
            f"kp'={kp}: {v['rate']:.2f} CI [{v['wilson95'][0]:.2f}, {v['wilson95'][1]:.2f}]"
            for kp, v in res["report"].items())
        record("connectivity-report", True,
               f"exploratory rates (never asserted): {lines}")
        assert res["asserted"] is False
        for v in res["report"].values():
            assert 0.0 <= v["rate"] <= 1.0
