"""Numerical certification of barrier inequalities and ODE oracles for the extremal bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .barriers import ConicLift
from .core import Barrier, as_vector, gamma_from_nu, affine_metric_is_pd, local_geometry
from .errors import DomainError, NotInteriorError, ProjbarError

SAMPLE_DEPTHS = tuple(10.0 ** -k for k in range(1, 7))
UNBOUNDED_SCALE = 10.0


def _ray_length(b: Barrier, x: np.ndarray, h: np.ndarray) -> float:
    s = b.sigma(x, h)
    return 1.0 / s if s > 0.0 else math.inf


def _point_on_ray(rng, b: Barrier, x: np.ndarray) -> np.ndarray:
    """Interior point on a random ray from ``x``: uniform or ``10^-k`` short of the boundary."""
    h = rng.standard_normal(b.dim)
    h /= np.linalg.norm(h)
    L = _ray_length(b, x, h)
    if not math.isfinite(L):
        L = UNBOUNDED_SCALE * (1.0 + float(np.linalg.norm(x)))
        frac = rng.uniform(0.0, 1.0) ** 3 if rng.uniform() < 0.5 else rng.uniform()
        return x + frac * L * rng.uniform(0.1, 10.0) * h
    if rng.uniform() < 0.5:
        frac = rng.uniform(0.0, 1.0)
    else:
        frac = 1.0 - SAMPLE_DEPTHS[rng.integers(len(SAMPLE_DEPTHS))] * rng.uniform(0.5, 1.0)
    return x + frac * L * h


def sample_interior(b: Barrier, n: int, seed: int, center=None) -> np.ndarray:
    """Boundary-biased interior points.

    Half of the points are taken on rays from ``center`` (the witness by
    default); the rest on rays from earlier near-boundary points, which
    reaches corners and lower-dimensional faces.
    """
    rng = np.random.default_rng(seed)
    center = b.witness if center is None else as_vector(center, b.dim)
    pts: List[np.ndarray] = []
    while len(pts) < n:
        base = center if (not pts or rng.uniform() < 0.5) else pts[rng.integers(len(pts))]
        x = _point_on_ray(rng, b, base)
        if b.contains(x) and np.all(np.isfinite(x)):
            try:
                _, g, H = b.evaluate(x)
            except (NotInteriorError, FloatingPointError, ValueError):
                continue
            # skip points where rounding leaves G not certifiably positive definite
            if affine_metric_is_pd(g, H):
                pts.append(x)
    return np.array(pts)


@dataclass
class GammaSamples:
    ratios: np.ndarray
    points: np.ndarray
    directions: np.ndarray

    @property
    def worst(self) -> int:
        return int(np.argmax(self.ratios))

    @property
    def estimate(self) -> float:
        return float(self.ratios.max())


def gamma_samples(b: Barrier, n_samples: int = 2000, seed: int = 0) -> GammaSamples:
    """Ratios ``|C[h,h,h]| / (2 G[h,h]^{3/2})`` at boundary-biased ``(x, h)`` pairs."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    pts = sample_interior(b, n_samples, seed)
    rng = np.random.default_rng([seed, 1])
    dirs = rng.standard_normal((n_samples, b.dim))
    ratios = np.empty(n_samples)
    for i, (x, h) in enumerate(zip(pts, dirs)):
        lg = local_geometry(b, x, h)
        ratios[i] = lg.ratio
    return GammaSamples(ratios=ratios, points=pts, directions=dirs)


def estimate_gamma(b: Barrier, n_samples: int = 2000, seed: int = 0) -> float:
    """Lower estimate of the projective parameter by sampling."""
    return gamma_samples(b, n_samples, seed).estimate


@dataclass
class LiftReport:
    nu: float
    affine_ok: bool
    projective_ok: bool
    worst_affine_ratio: float
    worst_projective_ratio: float
    worst_affine_sample: Optional[Tuple[np.ndarray, np.ndarray]] = None
    worst_projective_sample: Optional[Tuple[np.ndarray, np.ndarray]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.affine_ok and self.projective_ok


def verify_lift_equivalence(b: Barrier, n_samples: int = 500, seed: int = 0,
                            nu: Optional[float] = None, tol: float = 1e-8) -> LiftReport:
    """Check both sides of the lift equivalence with parameter ``nu``.

    Affine side: ``|F'''[h,h,h]| <= 2 F''[h,h]^{3/2}`` for ``F = nu(-log t + f(x/t))``
    at cone points ``(t, t x)`` and directions ``h = (0, v) + alpha (t, t x)``,
    including purely radial and purely spatial ones.  Projective side:
    ``|C[v,v,v]| <= 2 gamma(nu) G[v,v]^{3/2}`` on the base.
    """
    nu = b.nu if nu is None else float(nu)
    F = ConicLift(b, nu=nu)
    pts = sample_interior(b, n_samples, seed)
    rng = np.random.default_rng([seed, 2])
    worst_a, sample_a = -math.inf, None
    worst_p, sample_p = -math.inf, None
    for i, x in enumerate(pts):
        t = math.exp(rng.uniform(-2.0, 2.0))
        z = np.r_[t, t * x]
        v = rng.standard_normal(b.dim)
        kind = i % 3
        alpha = 0.0 if kind == 1 else rng.standard_normal()
        h = np.r_[0.0, v] + alpha * z if kind != 2 else z * (1.0 if alpha >= 0 else -1.0)
        _, s, t3 = F.directional(z, h)
        ratio = abs(t3) / (2.0 * s ** 1.5)
        if ratio > worst_a:
            worst_a, sample_a = ratio, (z, h)
        lg = local_geometry(b, x, v)
        if lg.ratio > worst_p:
            worst_p, sample_p = lg.ratio, (x, v)
    rep = LiftReport(nu=nu, affine_ok=worst_a <= 1.0 + tol, projective_ok=True,
                     worst_affine_ratio=worst_a, worst_projective_ratio=worst_p,
                     worst_affine_sample=sample_a, worst_projective_sample=sample_p)
    if nu < 2.0:
        rep.projective_ok = False
        rep.notes.append(f"nu={nu} < 2 admits no projective parameter")
    else:
        rep.projective_ok = worst_p <= gamma_from_nu(nu) + tol
    return rep


@dataclass
class EnvelopeTrajectory:
    t: np.ndarray
    p: np.ndarray
    s: np.ndarray
    truncated: bool = False


def _envelope_rhs(gamma: float):
    def rhs(p, s, u):
        g2 = s - p * p
        if not g2 > 0.0:
            raise FloatingPointError("trajectory left p' > p^2")
        return s, 6.0 * s * p - 4.0 * p ** 3 + 2.0 * u * gamma * g2 ** 1.5
    return rhs


def ode_envelope_oracle(p0: float, s0: float, gamma: float, control: Callable[[float], float],
                        t_end: float, steps: int = 10_000) -> EnvelopeTrajectory:
    """Integrate ``p'' = 6 p' p - 4 p^3 + 2 u gamma (p' - p^2)^{3/2}`` by classical RK4.

    The control is sampled once per step, at its midpoint, so piecewise-constant
    controls switching on the grid are integrated exactly to fourth order.
    """
    if not s0 > p0 * p0:
        raise DomainError("need s0 > p0^2")
    rhs = _envelope_rhs(gamma)
    dt = t_end / steps
    ts = [0.0]
    ps = [p0]
    ss = [s0]
    p, s = p0, s0
    truncated = False
    for k in range(steps):
        t = k * dt
        u = float(np.clip(control(t + 0.5 * dt), -1.0, 1.0))
        try:
            k1 = rhs(p, s, u)
            k2 = rhs(p + 0.5 * dt * k1[0], s + 0.5 * dt * k1[1], u)
            k3 = rhs(p + 0.5 * dt * k2[0], s + 0.5 * dt * k2[1], u)
            k4 = rhs(p + dt * k3[0], s + dt * k3[1], u)
        except FloatingPointError:
            truncated = True
            break
        p = p + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        s = s + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if not (math.isfinite(p) and math.isfinite(s)) or s - p * p <= 0.0 or abs(p) > 1e12:
            truncated = True
            break
        ts.append(t + dt)
        ps.append(p)
        ss.append(s)
    return EnvelopeTrajectory(np.array(ts), np.array(ps), np.array(ss), truncated)


def piecewise_constant_control(rng, t_end: float, pieces: int, steps: int = 10_000):
    """Random control in ``[-1, 1]`` constant on ``pieces`` intervals aligned with the RK4 grid."""
    edges = np.sort(rng.integers(1, steps, size=pieces - 1)) * (t_end / steps)
    values = rng.uniform(-1.0, 1.0, size=pieces)

    def u(t):
        return float(values[np.searchsorted(edges, t)])
    return u


@dataclass
class DecrementRun:
    value: float
    switch_time: float
    switch_df: float
    switch_dm: float
    final_time: float


def _rk4(f, y, dt):
    # y is a pair of floats; plain tuples keep the inner loop free of array overhead
    a1, b1 = f(y)
    a2, b2 = f((y[0] + 0.5 * dt * a1, y[1] + 0.5 * dt * b1))
    a3, b3 = f((y[0] + 0.5 * dt * a2, y[1] + 0.5 * dt * b2))
    a4, b4 = f((y[0] + dt * a3, y[1] + dt * b3))
    return (y[0] + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            y[1] + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4))


def _sign(v: float) -> int:
    return (v > 0.0) - (v < 0.0)


def _integrate_to_event(f, y, dt, event, t_max):
    """RK4 with fixed step until ``event`` changes sign; the crossing is bisected within the step."""
    t = 0.0
    e0 = event(y)
    while t < t_max:
        y1 = _rk4(f, y, dt)
        e1 = event(y1)
        if e0 == 0.0:
            return t, y
        if _sign(e1) != _sign(e0):
            lo, hi = 0.0, dt
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if _sign(event(_rk4(f, y, mid))) == _sign(e0):
                    lo = mid
                else:
                    hi = mid
            h = 0.5 * (lo + hi)
            return t + h, _rk4(f, y, h)
        y, e0, t = y1, e1, t + dt
    raise ProjbarError("event not reached")


def ode_decrement_run(gamma: Union[float, str], lambda_bar: float, steps: int = 10_000) -> DecrementRun:
    """Bang-bang trajectory of the one-dimensional decrement system.

    ``D_f' = -1 + k(D_f) u``, ``D_m' = -1 - k(D_m) u`` with ``k(D) = gamma sinh(2D)/2``
    (or ``k(D) = D`` when ``gamma == "affine"``), started at ``D_f = D_m = lambda_bar``.
    The extremal control is ``u = +1`` until ``D_f = -D_m`` and ``u = -1`` until
    ``D_f = 0``; the result is ``|D_m|`` at that moment.
    """
    lambda_bar = float(lambda_bar)
    affine = isinstance(gamma, str)
    if affine:
        if gamma != "affine":
            raise ValueError("gamma must be a number or 'affine'")
        if not 0.0 < lambda_bar <= 1.0:
            raise DomainError("affine system needs 0 < lambda_bar <= 1")

        def k(d):
            return d
    else:
        gamma = float(gamma)
        t2 = math.tanh(lambda_bar) ** 2
        if gamma < 0.0 or (1.0 - t2) ** 2 < gamma * gamma * t2:
            raise DomainError("lambda_bar outside the admissible range for gamma")

        def k(d):
            return gamma * math.sinh(2.0 * d) / 2.0

    def field_for(u):
        return lambda y: (-1.0 + k(y[0]) * u, -1.0 - k(y[1]) * u)

    dt = lambda_bar / steps
    y0 = (lambda_bar, lambda_bar)
    t1, y1 = _integrate_to_event(field_for(1.0), y0, dt, lambda y: y[0] + y[1], 100.0 * lambda_bar + 10.0)
    try:
        t2_, y2 = _integrate_to_event(field_for(-1.0), y1, dt, lambda y: y[0], 100.0 * lambda_bar + 10.0)
    except OverflowError:
        # D_m escapes to infinity before D_f returns to 0
        return DecrementRun(value=math.inf, switch_time=t1, switch_df=float(y1[0]),
                            switch_dm=float(y1[1]), final_time=math.inf)
    return DecrementRun(value=abs(float(y2[1])), switch_time=t1, switch_df=float(y1[0]),
                        switch_dm=float(y1[1]), final_time=t1 + t2_)


def ode_decrement_oracle(gamma: Union[float, str], lambda_bar: float, steps: int = 10_000) -> float:
    return ode_decrement_run(gamma, lambda_bar, steps).value


@dataclass
class FDReport:
    ok: bool
    grad_err: float
    hess_err: float
    third_err: float
    contracted_err: Optional[float]
    rel_tol: float


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def fd_consistency(b: Barrier, x, h=None, rel_tol: float = 1e-5, seed: int = 0) -> FDReport:
    """Compare analytic derivatives with central differences of step ``1e-5 (1 + |x|)``."""
    x = b._require_interior(x)
    if h is None:
        h = np.random.default_rng(seed).standard_normal(b.dim)
    h = as_vector(h, b.dim, "h")
    eps = 1e-5 * (1.0 + float(np.max(np.abs(x))))
    while True:
        probes = [x + eps * e for e in np.eye(b.dim)] + [x - eps * e for e in np.eye(b.dim)]
        probes += [x + eps * h, x - eps * h]
        if all(b.contains(p) for p in probes):
            break
        eps *= 0.5
    _, g, H = b.evaluate(x)
    n = b.dim
    fd_g = np.empty(n)
    fd_H = np.empty((n, n))
    for i, e in enumerate(np.eye(n)):
        fp, gp, _ = b.evaluate(x + eps * e)
        fm, gm, _ = b.evaluate(x - eps * e)
        fd_g[i] = (fp - fm) / (2.0 * eps)
        fd_H[:, i] = (gp - gm) / (2.0 * eps)
    _, _, Hp = b.evaluate(x + eps * h)
    _, _, Hm = b.evaluate(x - eps * h)
    fd_T = (Hp - Hm) / (2.0 * eps)
    grad_err = _rel(g, fd_g)
    hess_err = _rel(H, fd_H)
    third_err = _rel(b.third_directional(x, h), float(h @ fd_T @ h))
    contracted = None
    if b.has_third_contracted:
        contracted = _rel(b.third_contracted(x, h), fd_T)
    errs = [grad_err, hess_err, third_err] + ([contracted] if contracted is not None else [])
    return FDReport(ok=all(e <= rel_tol for e in errs), grad_err=grad_err, hess_err=hess_err,
                    third_err=third_err, contracted_err=contracted, rel_tol=rel_tol)
