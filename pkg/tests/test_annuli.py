import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annuli_oracle import oracle_plan
from slelab import annuli
from slelab.errors import ParameterError


def random_points(rng, n):
    # distinct points in the compact window [-1,1] x [1,2]
    while True:
        pts = rng.uniform(-1, 1, n) + 1j * rng.uniform(1, 2, n)
        if len(np.unique(pts)) == n:
            return pts


class TestSinglePoint:
    def test_point_at_i(self):
        plan = annuli.plan_annuli([1j], 0.25)
        assert plan.chains == (((0.0, 0.25),),)

    def test_low_point_shrinks_radius(self):
        # B(z, 4r) must stay inside H: Im z = 1/16 forces r <= 1/64
        plan = annuli.plan_annuli([0.0625j], 0.25)
        (s, r), = plan.chains[0]
        assert s == 0.0
        assert r <= 0.0625 / 4

    def test_r0_cap(self):
        plan = annuli.plan_annuli([4j], 0.125)
        assert plan.chains[0][0][1] <= 0.125


class TestTwoPoints:
    def test_close_pair_matches_oracle(self):
        pts = [1j, 1j + 2.0 ** -6]
        plan = annuli.plan_annuli(pts, 0.25)
        assert plan.chains == oracle_plan(pts, 0.25)
        assert annuli.verify_plan(plan)["ok"]

    def test_chain_structure_close_pair(self):
        pts = [1j, 1j + 2.0 ** -6]
        plan = annuli.plan_annuli(pts, 0.25)
        # first chain stops once the second point is outside the working ball
        assert plan.n_j(0) >= 2
        assert plan.chains[0][-1][0] == 0.0


class TestInvariants:
    def test_exact_invariants_random(self):
        rng = np.random.default_rng(42)
        for trial in range(300):
            n = int(rng.integers(1, 6))
            pts = random_points(rng, n)
            plan = annuli.plan_annuli(pts, 0.25)
            rep = annuli.verify_plan(plan)
            assert rep["ok"], rep["violations"]

    def test_oracle_agreement_random(self):
        rng = np.random.default_rng(7)
        for trial in range(200):
            n = int(rng.integers(1, 6))
            pts = random_points(rng, n)
            plan = annuli.plan_annuli(pts, 0.25)
            assert plan.chains == oracle_plan(list(pts), 0.25)

    def test_deterministic_rerun(self):
        rng = np.random.default_rng(3)
        pts = random_points(rng, 4)
        a = annuli.plan_annuli(pts, 0.25)
        b = annuli.plan_annuli(pts, 0.25)
        assert a.chains == b.chains

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1, 1), st.floats(0.5, 2)),
                    min_size=1, max_size=5, unique=True))
    def test_invariants_property(self, raw):
        pts = np.array([complex(x, y) for x, y in raw])
        if len(np.unique(pts)) != len(pts):
            return
        plan = annuli.plan_annuli(pts, 0.25)
        rep = annuli.verify_plan(plan)
        assert rep["ok"], rep["violations"]

    def test_product_bound_envelope(self):
        # Pi_j (Pi s)/(Pi r) <= C * Pi_j 1/min_{i<j}|z_j - z_i|: the fitted
        # envelope constant over random configurations is finite and stable
        rng = np.random.default_rng(11)
        ratios = []
        for trial in range(400):
            n = int(rng.integers(2, 6))
            pts = random_points(rng, n)
            plan = annuli.plan_annuli(pts, 0.25)
            log_lhs = 0.0
            log_rhs = 0.0
            for j, chain in enumerate(plan.chains):
                for k, (s, r) in enumerate(chain):
                    if s > 0:
                        log_lhs += np.log(s)
                    log_lhs -= np.log(r)
                if j > 0:
                    log_rhs -= np.log(min(abs(plan.points[j] - plan.points[i])
                                          for i in range(j)))
            ratios.append(log_lhs - log_rhs)
        c_fit_half = np.exp(np.max(ratios[:200]))
        c_fit_full = np.exp(np.max(ratios))
        assert np.isfinite(c_fit_full)
        assert c_fit_full <= 4 * c_fit_half + 1e3  # stable envelope


class TestVerifyPlan:
    def test_corrupted_overlap_flagged(self):
        plan = annuli.plan_annuli([1j, 1.5j], 0.25)
        bad = annuli.AnnulusPlan(plan.points, plan.r0,
                                 (((0.0, 0.25),), ((0.0, 0.5),)))
        rep = annuli.verify_plan(bad)
        assert not rep["ok"]
        assert any("intersect" in v for v in rep["violations"])

    def test_non_dyadic_flagged(self):
        plan = annuli.plan_annuli([1j], 0.25)
        bad = annuli.AnnulusPlan(plan.points, plan.r0, (((0.0, 0.3),),))
        rep = annuli.verify_plan(bad)
        assert any("2^-m" in v for v in rep["violations"])

    def test_self_consistency(self):
        rng = np.random.default_rng(5)
        plan = annuli.plan_annuli(random_points(rng, 5), 0.25)
        assert annuli.verify_plan(plan)["ok"]


class TestParameterValidation:
    def test_coincident_points(self):
        with pytest.raises(ParameterError):
            annuli.plan_annuli([1j, 1j], 0.25)

    def test_lower_half_plane(self):
        with pytest.raises(ParameterError):
            annuli.plan_annuli([-1j], 0.25)
