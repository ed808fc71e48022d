"""Distances to the boundary, inner/outer quadratic approximations and derivative bounds.

For an interior point ``x`` and direction ``h``:

* ``sigma_x(h) = inf{1/t : t > 0, x + t h not in X}`` (0 when the ray stays inside)
* ``pi_x(h) = max(sigma_x(h), sigma_x(-h))``
* ``omega_x(h) = (sigma_x(h) - f'(x)[h]) / sqrt(G(x)[h, h])``
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import Barrier, as_vector, affine_metric, affine_metric_is_pd, cubic_form_matrix, nu_from_gamma
from .errors import DomainError, NotInteriorError

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class ConvexSetOracle:
    """Membership test plus the reciprocal boundary distance ``sigma``."""

    contains: Callable[..., bool]
    sigma: Callable[[np.ndarray, np.ndarray], float]

    @classmethod
    def from_barrier(cls, b: Barrier) -> "ConvexSetOracle":
        return cls(contains=b.contains, sigma=b.sigma)


class RegionKind(enum.Enum):
    DIKIN_SET = "dikin_set"
    OUTER_SET = "outer_set"
    CLASSIC_ELLIPSOID = "classic_ellipsoid"


def _interior_data(b: Barrier, x):
    x = b._require_interior(x)
    _, g, H = b.evaluate(x)
    G = affine_metric(g, H)
    if not affine_metric_is_pd(g, H):
        raise NotInteriorError("affine metric is not positive definite")
    return x, g, H, G


def boundary_query(o: ConvexSetOracle, b: Barrier, x, h):
    """Return ``(sigma, pi, omega)`` at ``x`` along ``h``."""
    x, g, _, G = _interior_data(b, x)
    h = as_vector(h, b.dim, "h")
    if not np.any(h):
        raise ValueError("direction h must be non-zero")
    s_plus = o.sigma(x, h)
    s_minus = o.sigma(x, -h)
    omega = (s_plus - float(g @ h)) / math.sqrt(float(h @ G @ h))
    return s_plus, max(s_plus, s_minus), omega


def region_contains(b: Barrier, x0, x, kind: RegionKind) -> bool:
    """Strict membership of ``x`` in the approximation of ``kind`` centred at ``x0``."""
    x0, g, H, G = _interior_data(b, x0)
    d = as_vector(x, b.dim) - x0
    nu = b.nu
    if kind is RegionKind.CLASSIC_ELLIPSOID:
        return bool(nu * float(d @ H @ d) < 1.0)
    lhs = 1.0 - float(g @ d)
    q = float(d @ G @ d)
    factor = (nu - 1.0) if kind is RegionKind.DIKIN_SET else 1.0 / (nu - 1.0)
    return bool(lhs > math.sqrt(factor * q)) if q > 0.0 else bool(lhs > 0.0)


def _ray_limit(rate: float) -> float:
    return 1.0 / rate if rate > 0.0 else math.inf


def ray_radius(b: Barrier, x0, h, kind: RegionKind) -> float:
    """Distance ``t`` at which ``x0 + t h`` leaves the region (``inf`` if never)."""
    x0, g, H, G = _interior_data(b, x0)
    h = as_vector(h, b.dim, "h")
    nu = b.nu
    if kind is RegionKind.CLASSIC_ELLIPSOID:
        return 1.0 / math.sqrt(nu * float(h @ H @ h))
    p0 = float(g @ h)
    g0 = math.sqrt(float(h @ G @ h))
    k = math.sqrt(nu - 1.0) if kind is RegionKind.DIKIN_SET else 1.0 / math.sqrt(nu - 1.0)
    return _ray_limit(p0 + k * g0)


def outer_ellipsoid_radius(b: Barrier, center, h, x0=None) -> float:
    """Exit distance along ``x0 + t h`` from ``{(x-c)^T F''(c) (x-c) <= (nu + 2 sqrt(nu))^2}``.

    ``c`` is the analytic center and ``x0`` defaults to it.
    """
    center = b._require_interior(center)
    _, _, H = b.evaluate(center)
    h = as_vector(h, b.dim, "h")
    nu = b.nu
    R2 = (nu + 2.0 * math.sqrt(nu)) ** 2 / nu
    d = np.zeros(b.dim) if x0 is None else as_vector(x0, b.dim) - center
    qa = float(h @ H @ h)
    qb = float(d @ H @ h)
    qc = float(d @ H @ d) - R2
    if qc > 0.0:
        raise DomainError("x0 lies outside the outer ellipsoid")
    return (-qb + math.sqrt(qb * qb - qa * qc)) / qa


def set_radius(o: ConvexSetOracle, x0, h) -> float:
    s = o.sigma(as_vector(x0), as_vector(h))
    return _ray_limit(s)


@dataclass(frozen=True)
class Envelopes:
    """Extremal derivative and value bounds along a line, measured from ``x0``.

    ``f_minus``/``f_plus`` are offsets from ``f(x0)``.
    """

    p_minus: float
    p_plus: float
    f_minus: float
    f_plus: float
    iplus_right: float
    iminus_right: float


def _envelope_factors(p0: float, g0: float, kappa: float, t: float, sign: int):
    if sign > 0:
        return 1.0 - t * (p0 - g0 / kappa), 1.0 - t * (p0 + g0 * kappa)
    return 1.0 - t * (p0 + g0 / kappa), 1.0 - t * (p0 - g0 * kappa)


def _check_envelope_args(p0, s0, gamma):
    if not s0 > p0 * p0:
        raise DomainError("need s0 > p0^2")
    if not gamma >= 0.0:
        raise DomainError("gamma must be nonnegative")
    return math.sqrt(s0 - p0 * p0), math.sqrt(nu_from_gamma(gamma) - 1.0)


def p_envelope(p0: float, s0: float, gamma: float, t: float, sign: int) -> float:
    """Solution of the extremal derivative equation with control ``u = sign``."""
    g0, kappa = _check_envelope_args(p0, s0, gamma)
    a, b = _envelope_factors(p0, g0, kappa, t, sign)
    name = "p_plus" if sign > 0 else "p_minus"
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"t={t!r} outside the interval of definition of {name}")
    num = p0 + t * (g0 * g0 - p0 * p0 - sign * gamma * g0 * p0)
    return num / (a * b)


def f_envelope(p0: float, s0: float, gamma: float, t: float, sign: int) -> float:
    """Integral of :func:`p_envelope` from 0 to ``t``."""
    g0, kappa = _check_envelope_args(p0, s0, gamma)
    nu = kappa * kappa + 1.0
    a, b = _envelope_factors(p0, g0, kappa, t, sign)
    name = "f_plus" if sign > 0 else "f_minus"
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"t={t!r} outside the interval of definition of {name}")
    return -(nu - 1.0) / nu * math.log(a) - math.log(b) / nu


def envelopes_1d(p0: float, s0: float, gamma: float, t: float) -> Envelopes:
    g0, kappa = _check_envelope_args(p0, s0, gamma)
    return Envelopes(
        p_minus=p_envelope(p0, s0, gamma, t, -1),
        p_plus=p_envelope(p0, s0, gamma, t, +1),
        f_minus=f_envelope(p0, s0, gamma, t, -1),
        f_plus=f_envelope(p0, s0, gamma, t, +1),
        iplus_right=_ray_limit(p0 + g0 * kappa),
        iminus_right=_ray_limit(p0 + g0 / kappa),
    )


@dataclass
class DerivativeBoundsReport:
    ok: bool
    sigma: float
    sigma_lower: float
    sigma_upper: float
    pi: float
    pi_lower: float
    pi_upper: float
    probe_value: Optional[float] = None
    tol: float = MEMBERSHIP_TOL
    messages: List[str] = field(default_factory=list)


def derivative_bounds_check(o: ConvexSetOracle, b: Barrier, x, h, probe=None,
                            tol: float = MEMBERSHIP_TOL) -> DerivativeBoundsReport:
    """Check the two-sided bounds of ``sigma`` and ``pi`` by the first derivative and ``G``.

    Inequalities are relaxed by ``tol`` relative to the scale of the compared quantities.
    """
    x, g, _, G = _interior_data(b, x)
    h = as_vector(h, b.dim, "h")
    k = math.sqrt(b.nu - 1.0)
    p0 = float(g @ h)
    g0 = math.sqrt(max(float(h @ G @ h), 0.0))
    sigma = o.sigma(x, h)
    pi = max(sigma, o.sigma(x, -h))
    lo, hi = max(0.0, p0 + g0 / k), max(0.0, p0 + g0 * k)
    plo, phi = abs(p0) + g0 / k, abs(p0) + g0 * k
    rep = DerivativeBoundsReport(True, sigma, lo, hi, pi, plo, phi, tol=tol)

    def check(cond_lo, val, cond_hi, label):
        slack = tol * max(1.0, abs(val), abs(cond_hi))
        if not (cond_lo - slack <= val <= cond_hi + slack):
            rep.ok = False
            rep.messages.append(f"{label}={val!r} outside [{cond_lo!r}, {cond_hi!r}] (tol {tol:g})")

    check(lo, sigma, hi, "sigma")
    check(plo, pi, phi, "pi")
    if probe is not None:
        y = as_vector(probe, b.dim, "probe")
        rep.probe_value = float(g @ (y - x))
        if not rep.probe_value < 1.0:
            rep.ok = False
            rep.messages.append(f"<f'(x), y - x> = {rep.probe_value!r} is not below 1")
    return rep


def hessian_ray_bound(H0: float, g0: float, sigma: float, t: float) -> float:
    """Upper bound on ``f''(x + t h)[h, h]`` for barriers with negative curvature.

    ``H0 = f''(x)[h, h]``, ``g0 = f'(x)[h]`` and ``sigma = sigma_x(h)``.
    """
    if not H0 > 0.0:
        raise DomainError("H0 must be positive")
    if t < 0.0 or (sigma > 0.0 and t * sigma >= 1.0):
        raise DomainError(f"t={t!r} outside [0, 1/sigma)")
    r = 1.0 - sigma * t
    base = H0 / (r * r)
    k = H0 - g0 * sigma
    denom = sigma - g0 + t * k
    if k == 0.0:
        return base
    if abs(denom) <= 1e-14 * max(abs(sigma - g0), abs(t * k), 1e-300):
        # only reachable when H0 <= g0^2; the correction diverges, keep the weaker bound
        return base
    corr = t * k * k * ((2.0 * r + t * (sigma - g0)) * (sigma - g0) + t * (H0 - g0 * g0))
    return (H0 - corr / (denom * denom)) / (r * r)


def negcurv_margin(o: ConvexSetOracle, b: Barrier, x, h) -> float:
    """Smallest eigenvalue of the difference of the two sides of the negative-curvature inequality.

    Nonnegative iff
    ``(1/2)(sigma - f'[h]) C[., ., h] <= (sigma - f'[h])^2 G - (G h)(G h)^T``.
    """
    x, g, H, G = _interior_data(b, x)
    h = as_vector(h, b.dim, "h")
    Ch = cubic_form_matrix(g, H, b.third_contracted(x, h), h)
    w = o.sigma(x, h) - float(g @ h)
    Gh = G @ h
    D = w * w * G - np.outer(Gh, Gh) - 0.5 * w * Ch
    return float(np.linalg.eigvalsh(0.5 * (D + D.T))[0])


def negcurv_certificate(o: ConvexSetOracle, b: Barrier, x, h, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff the negative-curvature matrix inequality holds at ``(x, h)``.

    The eigenvalue test is relaxed by ``tol`` times the scale of ``(sigma - f'[h])^2 G``.
    """
    x_v = as_vector(x, b.dim)
    h_v = as_vector(h, b.dim, "h")
    margin = negcurv_margin(o, b, x_v, h_v)
    _, g, H = b.evaluate(x_v)
    w = o.sigma(x_v, h_v) - float(g @ h_v)
    scale = max(w * w * float(np.linalg.norm(affine_metric(g, H), 2)), 1e-300)
    return margin >= -tol * scale


def omega_tangent_holds(o: ConvexSetOracle, b: Barrier, x, h, tol: float = MEMBERSHIP_TOL) -> bool:
    """``C[h,h,h] <= 2 (omega^2 - 1)/omega * G[h,h]^{3/2}``."""
    from .core import local_geometry

    lg = local_geometry(b, x, h)
    omega = (o.sigma(as_vector(x), as_vector(h)) - lg.p0) / lg.g0
    rhs = 2.0 * (omega * omega - 1.0) / omega * lg.g0 ** 3
    return lg.c3 <= rhs + tol * max(1.0, abs(rhs), abs(lg.c3))


@dataclass
class OmegaProbeReport:
    monotone: bool
    omegas: np.ndarray
    product: float
    product_ok: bool
    mean_sigma: float
    sqrt_g: float
    mean_ok: bool
    tol: float = MEMBERSHIP_TOL

    @property
    def ok(self) -> bool:
        return self.monotone and self.product_ok and self.mean_ok


def omega_monotonicity_probe(o: ConvexSetOracle, b: Barrier, x, h, tgrid,
                             tol: float = MEMBERSHIP_TOL) -> OmegaProbeReport:
    """Check the three consequences of the negative-curvature inequality along a ray."""
    x = as_vector(x, b.dim)
    h = as_vector(h, b.dim, "h")
    ts = np.sort(np.asarray(tgrid, dtype=float).reshape(-1))
    omegas = np.array([boundary_query(o, b, x + t * h, h)[2] for t in ts])
    steps = np.diff(omegas)
    monotone = bool(np.all(steps >= -tol * np.maximum(1.0, np.abs(omegas[1:]))))
    _, g, _, G = _interior_data(b, x)
    sg = math.sqrt(float(h @ G @ h))
    s_plus, s_minus = o.sigma(x, h), o.sigma(x, -h)
    w_plus = (s_plus - float(g @ h)) / sg
    w_minus = (s_minus + float(g @ h)) / sg
    product = w_plus * w_minus
    mean_sigma = 0.5 * (s_plus + s_minus)
    return OmegaProbeReport(
        monotone=monotone,
        omegas=omegas,
        product=product,
        product_ok=bool(product >= 1.0 - tol * max(1.0, product)),
        mean_sigma=mean_sigma,
        sqrt_g=sg,
        mean_ok=bool(mean_sigma >= sg * (1.0 - tol)),
        tol=tol,
    )
