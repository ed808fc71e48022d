"""Acceptance criteria 1-11.

Each ``criterion_k`` returns a list of ``(label, ok, detail)`` checks.  The
tests record one PASS/FAIL line per criterion; the lines are printed in the
pytest terminal summary and by running this file as a script.
"""
import math
import sys

import numpy as np
import pytest

from projbar.barriers import affine_barrier, interval, projective_image
from projbar.core import affine_metric, gamma_from_nu, jarre_constants, nu_from_gamma
from projbar.duality import dual_barrier, dual_point
from projbar.geometry import (MEMBERSHIP_TOL, ConvexSetOracle, RegionKind, negcurv_certificate,
                              omega_monotonicity_probe, omega_tangent_holds, p_envelope, ray_radius,
                              set_radius)
from projbar.instances import bundled_barriers, lp_suite, planar_barriers, random_polytope
from projbar.errors import InfeasibleStepError
from projbar.ipm import (AFFINE, PROJECTIVE, affine_decrement, affine_newton_step, analytic_center,
                         hyperbolic_distance, lambda_bar_max, lambda_under, mu_on_path, optimal_lambda,
                         projective_step, quadratic_model, solve)
from projbar.verify import (gamma_samples, ode_decrement_oracle, ode_envelope_oracle,
                            piecewise_constant_control, sample_interior, verify_lift_equivalence)

RESULTS = {}

TITLES = {
    1: "parameter algebra",
    2: "sampled cubic-form bound",
    3: "gamma = 0 exactness",
    4: "lifted-cone equivalence",
    5: "sandwich property",
    6: "envelopes",
    7: "duality",
    8: "decrement bounds",
    9: "solver",
    10: "negative curvature",
    11: "mu and path length",
}


def check(label, ok, detail=""):
    return label, bool(ok), detail


def record(k, checks):
    failed = [c for c in checks if not c[1]]
    status = "FAIL" if failed else "PASS"
    shown = failed if failed else checks
    detail = "; ".join(f"{lab}: {det}" if det else lab for lab, _, det in shown)
    line = f"criterion {k:2d} ({TITLES[k]}): {status} [{detail}]"
    RESULTS[k] = line
    print(line)
    return checks


def conditioned(b, n, seed, pull=0.999):
    # first-derivative radii lose ~eps/slack relative accuracy near the boundary
    w = b.witness
    return w + pull * (sample_interior(b, n, seed) - w)


def central_jacobian(fun, x, step=1e-7):
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        cols.append((fun(x + e) - fun(x - e)) / (2.0 * step))
    return np.stack(cols, axis=-1)


def cubic(g, H, T, h):
    p = float(g @ h)
    return T - 6.0 * float(h @ H @ h) * p + 4.0 * p ** 3


def path_point(F, c, tau, x, tol=1e-9):
    for _ in range(200):
        rho = affine_decrement(F, c, tau, x)
        if rho <= tol:
            return x
        x_new = affine_newton_step(F, c, tau, x)
        t = 1.0 if rho < 0.25 else 1.0 / (1.0 + rho)
        x = x + t * (x_new - x)
    raise AssertionError("path point not reached")


# ---------------------------------------------------------------------------

def criterion_1():
    gammas = np.linspace(0.0, 100.0, 10001)
    rt = max(abs(gamma_from_nu(nu_from_gamma(g)) - g) for g in gammas)
    nu_plus = jarre_constants(1.0)[2]
    ref = (343.0 + 119.0 * math.sqrt(7.0)) / 27.0
    ratio = jarre_constants(1e8)[2] / 1e8
    return [
        check("round trip", rt <= 1e-12, f"max err {rt:.2e}"),
        check("nu_plus(1)", abs(nu_plus - ref) <= 1e-9, f"err {abs(nu_plus - ref):.2e}"),
        check("ratio(1e8)", abs(ratio - 256.0 / 27.0) <= 1e-3,
              f"|{ratio:.10f} - 256/27| = {abs(ratio - 256.0 / 27.0):.3e} > 1e-3; the closed form converges "
              "like 1 + O(nu^-1/2) and first enters the band near nu = 1.4e8"),
    ]


def criterion_2():
    out = []
    for name, b in bundled_barriers().items():
        est = gamma_samples(b, 2000, 0).estimate
        out.append(check(name, est <= b.gamma + 1e-6, f"{est:.6g} <= {b.gamma:.6g}"))
    return out


def criterion_3():
    b = interval()
    gs = gamma_samples(b, 2000, 0)
    # ratio = |C| / (2 g0^3)
    c3 = 2.0 * gs.ratios.max()
    xs = np.linspace(0.005, 0.995, 100)
    qm = max(abs(quadratic_model(b, [0.37], [x]) - b.value([x])) for x in xs)
    o = ConvexSetOracle.from_barrier(b)
    rng = np.random.default_rng(31)
    ray_err = 0.0
    for _ in range(100):
        x0 = rng.uniform(0.01, 0.99, 1)
        h = rng.choice([-1.0, 1.0], 1) * rng.uniform(0.1, 5.0)
        rx = set_radius(o, x0, h)
        for kind in (RegionKind.DIKIN_SET, RegionKind.OUTER_SET):
            ray_err = max(ray_err, abs(ray_radius(b, x0, h, kind) - rx) / max(1.0, rx))
    return [
        check("|C| / g0^3", c3 <= 1e-9, f"max {c3:.2e}"),
        check("model exact", qm <= 1e-12, f"max err {qm:.2e}"),
        check("E^p = Gamma^p = X", ray_err <= 1e-9, f"max err {ray_err:.2e}"),
    ]


def criterion_4():
    out = []
    for name, b in bundled_barriers().items():
        rep = verify_lift_equivalence(b, 500, 0)
        bad = verify_lift_equivalence(b, 500, 0, nu=b.nu - 0.5)
        out.append(check(name, rep.ok and not bad.ok,
                         f"ratio {rep.worst_affine_ratio:.6f}, corrupted {bad.worst_affine_ratio:.6f}"))
    return out


def criterion_5():
    out = []
    rng = np.random.default_rng(17)
    total = 0
    for name, b in planar_barriers().items():
        o = ConvexSetOracle.from_barrier(b)
        ok = True
        for x0 in conditioned(b, 25, 9):
            for _ in range(9):
                h = rng.standard_normal(2)
                r_ef = ray_radius(b, x0, h, RegionKind.CLASSIC_ELLIPSOID)
                r_ep = ray_radius(b, x0, h, RegionKind.DIKIN_SET)
                r_x = set_radius(o, x0, h)
                r_gp = ray_radius(b, x0, h, RegionKind.OUTER_SET)
                ok &= r_ef <= r_ep * (1.0 + MEMBERSHIP_TOL)
                ok &= r_ep <= r_x * (1.0 + MEMBERSHIP_TOL)
                ok &= r_x <= r_gp * (1.0 + MEMBERSHIP_TOL)
                if math.isfinite(r_ep):
                    ok &= b.contains(x0 + r_ep * h, tol=MEMBERSHIP_TOL * max(1.0, r_ep))
                total += 1
        out.append(check(f"nesting {name}", ok))
    bounded = ["triangle", "box2", "pentagon", "spectrahedron2", "interval_product"]
    err = 0.0
    for name in bounded:
        b = planar_barriers()[name]
        c = analytic_center(b, b.witness)
        for ang in np.linspace(0.0, 2.0 * math.pi, 24, endpoint=False):
            h = np.array([math.cos(ang), math.sin(ang)])
            ratio = (ray_radius(b, c, h, RegionKind.DIKIN_SET)
                     / ray_radius(b, c, h, RegionKind.CLASSIC_ELLIPSOID))
            err = max(err, abs(ratio / math.sqrt(b.nu / (b.nu - 1.0)) - 1.0))
    out.append(check("center ratio", err <= 1e-9, f"{total} rays, max rel err {err:.2e}"))
    return out


ENVELOPE_CASES = [(-0.3, 1.5, 0.8, 0.35), (0.2, 1.0, 1.0, 0.3), (0.0, 4.0, 0.0, 0.4), (0.5, 2.0, 2.0, 0.12)]


def criterion_6():
    rng = np.random.default_rng(2)
    worst = math.inf
    closed = 0.0
    n = 0
    for p0, s0, gamma, t_end in ENVELOPE_CASES:
        for sign in (1, -1):
            traj = ode_envelope_oracle(p0, s0, gamma, lambda t, s=sign: float(s), t_end, 10_000)
            ref = np.array([p_envelope(p0, s0, gamma, t, sign) for t in traj.t])
            closed = max(closed, float(np.max(np.abs(traj.p - ref))))
        for _ in range(50):
            u = piecewise_constant_control(rng, t_end, int(rng.integers(1, 9)), 2000)
            traj = ode_envelope_oracle(p0, s0, gamma, u, t_end, 2000)
            for t, p in zip(traj.t[::10], traj.p[::10]):
                lo = p_envelope(p0, s0, gamma, t, -1)
                hi = p_envelope(p0, s0, gamma, t, 1)
                worst = min(worst, p - lo, hi - p)
            n += 1
    return [
        check("random controls", worst >= -1e-7, f"{n} controls, min slack {worst:.2e}"),
        check("u = +-1 closed forms", closed <= 1e-8, f"max err {closed:.2e}"),
    ]


def _dual_cases():
    from projbar.barriers import polyhedral
    from projbar.instances import disk

    return {
        "triangle": polyhedral([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]], [0.3, 0.3, 1.0]),
        "square": polyhedral(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4)),
        "disk": disk(),
    }


def criterion_7():
    sym = interval(-1.0, 1.0)
    dsym = dual_barrier(sym)
    self_dual = max(abs(dsym.value([p]) - sym.value([p])) for p in np.linspace(-0.95, 0.95, 39))
    g_err = c_err = rt_err = 0.0
    rng = np.random.default_rng(8)
    for b in _dual_cases().values():
        db = dual_barrier(b)
        for x in conditioned(b, 10, 5, pull=0.9):
            p = dual_point(b, x)
            J = central_jacobian(lambda z: dual_point(b, z), x)
            _, gs, Hs = db.evaluate(p)
            _, g, H = b.evaluate(x)
            G = affine_metric(g, H)
            g_err = max(g_err, np.linalg.norm(J.T @ affine_metric(gs, Hs) @ J - G) / np.linalg.norm(G))
            h = rng.standard_normal(2)
            k = J @ h
            step = 1e-5 / max(1.0, float(np.linalg.norm(k)))
            T_star = float(k @ ((db.evaluate(p + step * k)[2] - db.evaluate(p - step * k)[2]) / (2.0 * step)) @ k)
            lhs = cubic(gs, Hs, T_star, k)
            rhs = -cubic(g, H, b.third_directional(x, h), h)
            c_err = max(c_err, abs(lhs - rhs) / max(abs(rhs), float(h @ G @ h) ** 1.5))
        for x in conditioned(b, 100, 4):
            rt_err = max(rt_err, float(np.linalg.norm(dual_point(db, dual_point(b, x)) - x)))
    return [
        check("self-duality", self_dual <= 1e-8, f"max {self_dual:.2e}"),
        check("G transport", g_err <= 1e-5, f"rel err {g_err:.2e}"),
        check("C transport", c_err <= 1e-5, f"rel err {c_err:.2e}"),
        check("round trip", rt_err <= 1e-8, f"max err {rt_err:.2e}"),
    ]


def criterion_8():
    lam, low = optimal_lambda(AFFINE)
    grid_err = 0.0
    for gamma in np.geomspace(0.05, 20.0, 20):
        for frac in np.linspace(0.04, 0.96, 20):
            lb = frac * lambda_bar_max(gamma)
            grid_err = max(grid_err, abs(ode_decrement_oracle(gamma, lb) - lambda_under(lb, gamma)))
    l100, low100 = optimal_lambda(100.0)
    _, low_small = optimal_lambda(1e-3)
    target = math.atanh(math.sqrt(2.0) - 1.0)
    return [
        check("affine optimum", abs(lam - 0.4166) <= 1e-3 and abs(low - 0.1901) <= 1e-3,
              f"({lam:.6f}, {low:.6f})"),
        check("ODE grid 20x20", grid_err <= 1e-6, f"max err {grid_err:.2e}"),
        check("gamma = 100", abs(100.0 * l100 / 0.4166 - 1.0) <= 0.02 and abs(100.0 * low100 / 0.1901 - 1.0) <= 0.02,
              f"({100.0 * l100:.5f}, {100.0 * low100:.5f})"),
        check("gamma = 1e-3", abs(low_small - target) <= 1e-3, f"{low_small:.6f} vs {target:.6f}"),
    ]


def _equivariance_error(n_cases=40):
    rng = np.random.default_rng(5)
    worst = 0.0
    done = 0
    while done < n_cases:
        n = int(rng.integers(1, 4))
        b = random_polytope(n, 2 * n, rng)
        c = rng.standard_normal(n)
        s = float(rng.choice([-1.0, 1.0])) * 0.2 / np.abs(c).sum()
        L = np.eye(n) + 0.3 * rng.standard_normal((n, n))
        img = projective_image(b, L, 0.2 * rng.standard_normal(n), s * c, 1.0)
        c_img = -math.copysign(1.0, s) * img.lifted_inv[0, 1:]
        x = b.witness + 0.9 * (sample_interior(b, 1, done)[0] - b.witness)
        lam = float(rng.uniform(0.1, 1.0))
        try:
            x_f = projective_step(b, c, x, lam)
        except InfeasibleStepError:
            continue
        y_f = projective_step(img, c_img, img.forward(x), lam)
        worst = max(worst, float(np.linalg.norm(y_f - img.forward(x_f))))
        done += 1
    return worst


def criterion_9():
    gaps = dist = 0.0
    counts = []
    for p in lp_suite():
        ta = solve(p, AFFINE, 1e-6)
        tp = solve(p, PROJECTIVE, 1e-6)
        gaps = max(gaps, ta.objective - p.optimum, tp.objective - p.optimum)
        for prev, r in zip(tp.records, tp.records[1:]):
            dist = max(dist, abs(hyperbolic_distance(p.barrier, prev.x, r.x) - tp.lambda_bar))
        counts.append(f"{p.name} {ta.iterations}/{tp.iterations}")
    eq = _equivariance_error()
    return [
        check("gap", gaps <= 1e-6, f"max true gap {gaps:.2e}"),
        check("step distance", dist <= 1e-8, f"max err {dist:.2e}"),
        check("equivariance", eq <= 1e-7, f"max err {eq:.2e}"),
        check("iterations affine/projective", True, ", ".join(counts)),
    ]


def criterion_10():
    from projbar.barriers import box, simplex

    rng = np.random.default_rng(10)
    bars = [simplex(2), box(2), simplex(3)] + [random_polytope(d, 3, np.random.default_rng(d)) for d in (2, 3, 4)]
    cert = tangent = probe = True
    n = 0
    per = math.ceil(500 / len(bars))
    for b in bars:
        o = ConvexSetOracle.from_barrier(b)
        for x in conditioned(b, per, int(rng.integers(1 << 30))):
            h = rng.standard_normal(b.dim)
            cert &= negcurv_certificate(o, b, x, h)
            tangent &= omega_tangent_holds(o, b, x, h)
            s = o.sigma(x, h)
            grid = np.linspace(0.0, 0.9 / s, 6) if s > 0 else np.linspace(0.0, 10.0, 6)
            probe &= omega_monotonicity_probe(o, b, x, h, grid).ok
            n += 1
    return [
        check("certificate", cert, f"{n} samples"),
        check("omega tangent bound", tangent),
        check("omega monotone, product, mean sigma", probe),
    ]


def criterion_11():
    F = affine_barrier(interval())
    mu = mu_on_path(F, [1.0], 8.0 / 3.0, [0.25])
    lo, hi = math.inf, 0.0
    for p in lp_suite():
        Fp = affine_barrier(p.barrier)
        x = analytic_center(p.barrier, p.barrier.witness)
        for tau in np.geomspace(1e-3, 1e4, 25):
            x = path_point(Fp, p.c, tau, x)
            m = mu_on_path(Fp, p.c, tau, x)
            lo, hi = min(lo, m), max(hi, m)
    return [
        check("interval mu", abs(mu - 0.2) <= 1e-12, f"{mu:.15g}"),
        check("mu in (0, 1]", lo > 0.0 and hi <= 1.0 + 1e-9, f"range [{lo:.3e}, {hi:.9f}]"),
    ]


CRITERIA = {k: globals()[f"criterion_{k}"] for k in TITLES}


def assert_all(checks, skip=()):
    bad = [c for c in checks if not c[1] and c[0] not in skip]
    assert not bad, bad


# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def c1():
    return record(1, criterion_1())


class TestAcceptance:
    def test_criterion_1(self, c1):
        assert_all(c1, skip=("ratio(1e8)",))

    @pytest.mark.xfail(strict=True, reason="closed form is 1.185e-3 from 256/27 at nu = 1e8; see the ledger")
    def test_criterion_1_ratio_at_1e8(self, c1):
        assert_all([c for c in c1 if c[0] == "ratio(1e8)"])

    @pytest.mark.parametrize("k", range(2, 12))
    def test_criterion(self, k):
        assert_all(record(k, CRITERIA[k]()))


if __name__ == "__main__":
    failed = 0
    for k, fn in CRITERIA.items():
        checks = record(k, fn())
        failed += any(not ok for _, ok, _ in checks)
    sys.exit(1 if failed else 0)
