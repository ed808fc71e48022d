import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from projbar.barriers import conic_lift, direct_product, exp_epigraph, interval, power_epigraph, simplex
from projbar.errors import DomainError
from projbar.geometry import p_envelope
from projbar.instances import bundled_barriers
from projbar.ipm import AFFINE, lambda_bar_max, lambda_under
from projbar.verify import (estimate_gamma, fd_consistency, gamma_samples, ode_decrement_oracle,
                            ode_decrement_run, ode_envelope_oracle, piecewise_constant_control,
                            sample_interior, verify_lift_equivalence)


def polyhedral_ratio(A, b, x, h):
    # |C[h,h,h]| / (2 G[h,h]^{3/2}) for -(1/m) sum log(b - A x), written out from slacks
    z = (A @ h) / (b - A @ x)
    m = len(b)
    p0 = z.sum() / m
    s0 = (z ** 2).sum() / m
    t3 = 2.0 * (z ** 3).sum() / m
    c3 = t3 - 6.0 * s0 * p0 + 4.0 * p0 ** 3
    return abs(c3) / (2.0 * (s0 - p0 ** 2) ** 1.5)


class TestSampler:
    def test_points_interior(self):
        for name, b in bundled_barriers().items():
            pts = sample_interior(b, 50, 0)
            assert pts.shape == (50, b.dim)
            assert all(b.contains(x) for x in pts), name

    def test_deterministic(self, triangle):
        assert np.array_equal(sample_interior(triangle, 40, 7), sample_interior(triangle, 40, 7))

    def test_prefix_property(self, triangle):
        small = gamma_samples(triangle, 50, 3)
        large = gamma_samples(triangle, 200, 3)
        assert np.array_equal(small.points, large.points[:50])
        assert np.array_equal(small.ratios, large.ratios[:50])

    def test_reaches_boundary(self, triangle):
        pts = sample_interior(triangle, 500, 1)
        slack = min(triangle.slack(x).min() for x in pts)
        assert slack < 1e-5


class TestEstimateGamma:
    def test_interval(self, unit_interval):
        assert estimate_gamma(unit_interval, 500, 0) <= 1e-9

    def test_triangle_bounds(self, triangle):
        est = estimate_gamma(triangle, 2000, 0)
        assert est <= math.sqrt(2.0) / 2.0 + 1e-6
        assert est >= 0.6

    def test_triangle_brute_force_oracle(self, triangle):
        # the lower figure is attained: grid search near a vertex with slack formulas
        A, b = triangle.A, triangle.b
        best = 0.0
        for e in np.logspace(-6, -1, 12):
            for r in np.linspace(0.05, 0.95, 19):
                x = np.array([e * r, e * (1.0 - r)])
                for ang in np.linspace(0.0, math.pi, 37):
                    h = np.array([math.cos(ang), math.sin(ang)])
                    best = max(best, polyhedral_ratio(A, b, x, h))
        assert 0.6 <= best <= math.sqrt(2.0) / 2.0 + 1e-9

    def test_matches_slack_formula(self, triangle):
        gs = gamma_samples(triangle, 200, 5)
        for x, h, r in zip(gs.points, gs.directions, gs.ratios):
            assert r == pytest.approx(polyhedral_ratio(triangle.A, triangle.b, x, h), rel=1e-7, abs=1e-12)

    def test_interval_product(self):
        b = direct_product(interval(), interval())
        assert b.nu == pytest.approx(4.0)
        assert estimate_gamma(b, 1000, 0) <= 2.0 / math.sqrt(3.0) + 1e-6

    @given(st.integers(1, 150), st.integers(0, 50))
    def test_monotone_under_inclusion(self, k, seed):
        b = simplex(3)
        gs = gamma_samples(b, 150, seed)
        assert gs.ratios[:k].max() <= gs.estimate
        assert estimate_gamma(b, k, seed) <= estimate_gamma(b, 150, seed)

    def test_worst_index(self, triangle):
        gs = gamma_samples(triangle, 100, 2)
        assert gs.ratios[gs.worst] == gs.estimate

    def test_needs_samples(self, triangle):
        with pytest.raises(ValueError):
            estimate_gamma(triangle, 0, 0)


class TestLiftEquivalence:
    def test_interval_lift_passes(self, unit_interval):
        rep = verify_lift_equivalence(unit_interval, 300, 0)
        assert rep.ok
        assert rep.nu == 2.0

    def test_interval_lift_formula(self, unit_interval):
        F = conic_lift(unit_interval)
        for t, x in [(1.0, 0.3), (2.0, 0.5), (0.5, 0.1)]:
            ref = -math.log(x) - math.log(t - x)
            assert F.value([t, x]) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("name", ["triangle", "simplex3", "spectrahedron2", "exp_epigraph", "power2"])
    def test_radial_ratio(self, name):
        b = bundled_barriers()[name]
        F = conic_lift(b)
        for x in sample_interior(b, 20, 1):
            z = np.r_[1.7, 1.7 * x]
            d1, s, t3 = F.directional(z, z)
            assert d1 == pytest.approx(-b.nu, rel=1e-9)
            assert s == pytest.approx(b.nu, rel=1e-9)
            assert abs(t3) / (2.0 * s ** 1.5) == pytest.approx(b.nu ** -0.5, rel=1e-8)

    @pytest.mark.parametrize("name", list(bundled_barriers()))
    def test_lifts_pass(self, name):
        rep = verify_lift_equivalence(bundled_barriers()[name], 200, 1)
        assert rep.ok, (rep.worst_affine_ratio, rep.worst_projective_ratio)

    @pytest.mark.parametrize("name", ["interval", "triangle", "box2", "spectrahedron2", "power1.5"])
    def test_corruption_detected(self, name):
        b = bundled_barriers()[name]
        rep = verify_lift_equivalence(b, 300, 0, nu=b.nu - 0.5)
        assert not rep.ok
        assert rep.worst_affine_sample is not None


class TestEnvelopeOracle:
    @pytest.mark.parametrize("sign", [1, -1])
    def test_constant_control_matches_closed_form(self, sign):
        p0, s0, gamma = 0.2, 1.0, 1.0
        t_end = 0.4
        traj = ode_envelope_oracle(p0, s0, gamma, lambda t: float(sign), t_end, 10_000)
        assert not traj.truncated
        ref = np.array([p_envelope(p0, s0, gamma, t, sign) for t in traj.t])
        assert np.max(np.abs(traj.p - ref)) <= 1e-8

    def test_gamma_zero_interval(self):
        rng = np.random.default_rng(1)
        u = piecewise_constant_control(rng, 0.4, 5)
        traj = ode_envelope_oracle(0.0, 4.0, 0.0, u, 0.4, 10_000)
        ref = 4.0 * traj.t / (1.0 - 4.0 * traj.t ** 2)
        assert np.max(np.abs(traj.p - ref)) <= 1e-8

    def test_random_controls_stay_inside(self):
        rng = np.random.default_rng(2)
        p0, s0, gamma, t_end = -0.3, 1.5, 0.8, 0.35
        for _ in range(30):
            u = piecewise_constant_control(rng, t_end, int(rng.integers(1, 9)), 2000)
            traj = ode_envelope_oracle(p0, s0, gamma, u, t_end, 2000)
            assert not traj.truncated
            for t, p in zip(traj.t[::20], traj.p[::20]):
                assert p >= p_envelope(p0, s0, gamma, t, -1) - 1e-7
                assert p <= p_envelope(p0, s0, gamma, t, 1) + 1e-7

    def test_blow_up_flagged(self):
        traj = ode_envelope_oracle(0.0, 1.0, 0.0, lambda t: 1.0, 2.0, 2000)
        assert traj.truncated
        assert traj.t[-1] < 1.01

    def test_bad_initial_data(self):
        with pytest.raises(DomainError):
            ode_envelope_oracle(1.0, 0.5, 0.0, lambda t: 0.0, 1.0)


class TestDecrementOracle:
    def test_gamma_zero(self):
        assert ode_decrement_oracle(0.0, 0.7) == pytest.approx(0.0, abs=1e-12)

    def test_gamma_one(self):
        # closed-form value, computed in the ledger; the oracle must agree
        assert ode_decrement_oracle(1.0, 0.5) == pytest.approx(0.326756443, abs=1e-8)
        assert ode_decrement_oracle(1.0, 0.5) == pytest.approx(lambda_under(0.5, 1.0), abs=1e-6)

    def test_affine(self):
        assert ode_decrement_oracle("affine", 0.4166) == pytest.approx(0.19008, abs=1e-5)
        assert ode_decrement_oracle("affine", 0.4166) == pytest.approx(lambda_under(0.4166, AFFINE), abs=1e-6)

    @pytest.mark.parametrize("gamma", [0.05, 0.5, 2.0, 5.0])
    def test_grid_matches_closed_form(self, gamma):
        for frac in [0.1, 0.4, 0.7, 0.95]:
            lam = frac * lambda_bar_max(gamma)
            assert abs(ode_decrement_oracle(gamma, lam) - lambda_under(lam, gamma)) <= 1e-6

    @pytest.mark.parametrize("gamma, lam", [(0.5, 0.4), (2.0, 0.2), ("affine", 0.3)])
    def test_switch_equal_distance(self, gamma, lam):
        run = ode_decrement_run(gamma, lam)
        assert abs(abs(run.switch_df) - abs(run.switch_dm)) <= 1e-8
        assert run.final_time > run.switch_time

    @pytest.mark.parametrize("gamma", [0.1, 1.0])
    def test_escape_near_range_end(self, gamma):
        lam = 0.995 * lambda_bar_max(gamma)
        assert ode_decrement_oracle(gamma, lam) == math.inf
        assert lambda_under(lam, gamma) == math.inf

    def test_agrees_close_to_escape(self):
        lam = 0.985 * lambda_bar_max(1.0)
        assert abs(ode_decrement_oracle(1.0, lam) - lambda_under(lam, 1.0)) <= 1e-6

    def test_numpy_scalars(self):
        assert ode_decrement_oracle(np.float64(1.0), np.float64(0.5)) == pytest.approx(0.326756443, abs=1e-8)

    def test_infeasible(self):
        with pytest.raises(DomainError):
            ode_decrement_oracle(5.0, 2.0)
        with pytest.raises(ValueError):
            ode_decrement_oracle("projective", 0.3)


class TestFDConsistency:
    def test_interval(self, unit_interval):
        assert fd_consistency(unit_interval, [0.3]).ok

    def test_exp_epigraph(self):
        assert fd_consistency(exp_epigraph(), [0.0, math.e]).ok

    def test_power_three(self):
        assert fd_consistency(power_epigraph(3.0), [0.5, 1.0]).ok

    def test_detects_wrong_gradient(self, unit_interval):
        from projbar.barriers import PolyhedralBarrier

        class Broken(PolyhedralBarrier):
            def evaluate(self, x):
                v, g, H = super().evaluate(x)
                return v, 1.01 * g, H

        b = Broken([[-1.0], [1.0]], [0.0, 1.0])
        rep = fd_consistency(b, [0.3])
        assert not rep.ok
        assert rep.grad_err > 1e-5
