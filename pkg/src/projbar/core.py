"""Parameter algebra, the barrier evaluation interface and the derived tensors.

A barrier ``f`` on an open convex domain is described by its value, gradient,
Hessian and third derivative.  Two tensors built from these drive everything
else in the package:

* the affine metric ``G = f'' - f' f'^T``
* the cubic form ``C[h,h,h] = f'''[h,h,h] - 6 f''[h,h] f'[h] + 4 f'[h]^3``

``f`` is projectively self-concordant with parameter ``gamma`` when ``G`` is
positive definite and ``|C[h,h,h]| <= 2 gamma G[h,h]^{3/2}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DomainError, NotInteriorError, UnsupportedCapabilityError

PD_RELATIVE_TOL = 1e-10
REL_TOL_PARAMS = 1e-12


def gamma_from_nu(nu: float) -> float:
    """Projective parameter matching the affine parameter ``nu >= 2``."""
    nu = float(nu)
    if not nu >= 2.0:
        raise DomainError(f"nu must be >= 2, got {nu!r}")
    return (nu - 2.0) / math.sqrt(nu - 1.0)


def nu_from_gamma(gamma: float) -> float:
    """Inverse of :func:`gamma_from_nu`."""
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise DomainError(f"gamma must be >= 0, got {gamma!r}")
    return (gamma + math.sqrt(gamma * gamma + 4.0)) * math.sqrt(gamma * gamma / 4.0 + 1.0)


def jarre_constants(nu: float) -> Tuple[float, float, float]:
    """Constants ``(alpha, theta, nu_plus)`` of the optimal log-homogeneous extension.

    An affinely self-concordant function with parameter ``nu`` extends to the
    conic hull as ``theta*F(x/t) - theta*alpha*nu*log t``, which is a
    self-concordant barrier with parameter ``nu_plus = theta*alpha*nu``.
    """
    nu = float(nu)
    if not nu >= 1.0:
        raise DomainError(f"nu must be >= 1, got {nu!r}")
    alpha = 4.0 + 3.0 / math.sqrt(nu)
    denom = (alpha / (math.sqrt(alpha) + 2.0) - 1.0) ** 2
    theta = (1.0 + (alpha - 1.0) / denom) / (alpha * nu)
    return alpha, theta, theta * alpha * nu


@dataclass(frozen=True)
class BarrierParams:
    """Projective parameter ``gamma`` together with the matching affine ``nu``."""

    gamma: float
    nu: float

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.nu >= 2.0:
            raise DomainError(f"nu must be >= 2, got {self.nu!r}")
        expected = gamma_from_nu(self.nu)
        if abs(expected - self.gamma) > REL_TOL_PARAMS * max(1.0, abs(self.gamma)):
            raise DomainError(
                f"inconsistent parameters gamma={self.gamma!r}, nu={self.nu!r}"
            )

    @classmethod
    def from_gamma(cls, gamma: float) -> "BarrierParams":
        return cls(float(gamma), nu_from_gamma(gamma))

    @classmethod
    def from_nu(cls, nu: float) -> "BarrierParams":
        return cls(gamma_from_nu(nu), float(nu))


def as_vector(x, dim: Optional[int] = None, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}, got {v.shape[0]}")
    return v


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Barrier:
    """A barrier with analytic derivatives up to third order.

    Subclasses implement :meth:`evaluate`, :meth:`third_directional` and
    :meth:`contains`; :meth:`third_contracted` and :meth:`sigma` are optional
    (``sigma`` falls back to bisection along the ray).  Instances are
    immutable and safe to share between threads.
    """

    has_third_contracted = False

    def __init__(self, dim: int, params: BarrierParams, witness):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        self.params = params
        self.witness = _frozen(as_vector(witness, self.dim, "witness"))

    @property
    def gamma(self) -> float:
        return self.params.gamma

    @property
    def nu(self) -> float:
        return self.params.nu

    def evaluate(self, x) -> Tuple[float, np.ndarray, np.ndarray]:
        """Return ``(value, gradient, hessian)`` at an interior point."""
        raise NotImplementedError

    def value(self, x) -> float:
        return self.evaluate(x)[0]

    def third_directional(self, x, h) -> float:
        """``f'''(x)[h, h, h]``."""
        raise NotImplementedError

    def third_contracted(self, x, h) -> np.ndarray:
        """Symmetric matrix ``f'''(x)[., ., h]``."""
        raise UnsupportedCapabilityError(
            f"{type(self).__name__} does not supply f'''(x)[.,.,h]"
        )

    def contains(self, x, tol: float = 0.0) -> bool:
        """Membership in the open domain, relaxed by ``tol`` when positive."""
        raise NotImplementedError

    def sigma(self, x, h) -> float:
        """Reciprocal distance ``inf{1/t : t > 0, x + t h outside}`` along ``h``."""
        return ray_sigma(self.contains, as_vector(x, self.dim), as_vector(h, self.dim, "h"))

    def _require_interior(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        if not self.contains(x):
            raise NotInteriorError(f"point {x} is not interior to the domain")
        return x

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, gamma={self.gamma:.6g})"


def ray_sigma(contains, x: np.ndarray, h: np.ndarray, iterations: int = 60,
              t_max: float = 1e12) -> float:
    """Safeguarded bisection for the boundary crossing along ``x + t h``."""
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        return 0.0
    t = 1.0 / norm
    if contains(x + t * h):
        t_in = t
        while True:
            t *= 2.0
            if t * norm > t_max:
                return 0.0
            if not contains(x + t * h):
                t_out = t
                break
            t_in = t
    else:
        t_out = t
        while True:
            t *= 0.5
            if t * norm < 1e-300:
                raise NotInteriorError("ray starts on the boundary")
            if contains(x + t * h):
                t_in = t
                break
            t_out = t
    for _ in range(iterations):
        mid = 0.5 * (t_in + t_out)
        if contains(x + mid * h):
            t_in = mid
        else:
            t_out = mid
    return 1.0 / (0.5 * (t_in + t_out))


def is_positive_definite(M: np.ndarray, rel_tol: float = PD_RELATIVE_TOL) -> bool:
    eig = np.linalg.eigvalsh(0.5 * (M + M.T))
    return bool(eig[0] > rel_tol * max(eig[-1], 0.0) and eig[0] > 0.0)


def affine_metric_margin(g: np.ndarray, H: np.ndarray) -> float:
    """``1 - g^T H^{-1} g``, the smallest eigenvalue of ``G`` relative to ``H``.

    ``G = H - g g^T`` is positive definite iff ``H`` is and this margin is
    positive.  Unlike the eigenvalue ratio of ``G`` it does not degrade when a
    point approaches a single facet and ``H`` becomes badly scaled.
    """
    try:
        L = np.linalg.cholesky(0.5 * (H + H.T))
    except np.linalg.LinAlgError:
        return -math.inf
    w = np.linalg.solve(L, g)
    return 1.0 - float(w @ w)


def affine_metric_is_pd(g: np.ndarray, H: np.ndarray, rel_tol: float = PD_RELATIVE_TOL) -> bool:
    return affine_metric_margin(g, H) > rel_tol


def affine_metric(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    return H - np.outer(g, g)


def cubic_form_matrix(g: np.ndarray, H: np.ndarray, T_h: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Polarized cubic form ``C[., ., h]`` from ``f', f'', f'''[., ., h]``."""
    gh = float(g @ h)
    Hh = H @ h
    return (T_h - 2.0 * (gh * H + np.outer(Hh, g) + np.outer(g, Hh))
            + 4.0 * gh * np.outer(g, g))


def cubic_form_value(p0: float, s0: float, t3: float) -> float:
    return t3 - 6.0 * s0 * p0 + 4.0 * p0 ** 3


@dataclass(frozen=True)
class LocalGeometry:
    """Scalars and tensors of a barrier at a point/direction pair."""

    p0: float
    s0: float
    g0: float
    c3: float
    G: np.ndarray
    Ch: Optional[np.ndarray] = None

    @property
    def ratio(self) -> float:
        """``|C[h,h,h]| / (2 G[h,h]^{3/2})``, the local lower estimate of gamma."""
        return abs(self.c3) / (2.0 * self.g0 ** 3)


def local_geometry(b: Barrier, x, h) -> LocalGeometry:
    x = b._require_interior(x)
    h = as_vector(h, b.dim, "h")
    if not np.any(h):
        raise ValueError("direction h must be non-zero")
    _, g, H = b.evaluate(x)
    G = affine_metric(g, H)
    if not affine_metric_is_pd(g, H):
        raise NotInteriorError("affine metric is not positive definite at x")
    p0 = float(g @ h)
    s0 = float(h @ H @ h)
    g0 = math.sqrt(max(float(h @ G @ h), 0.0))
    c3 = cubic_form_value(p0, s0, b.third_directional(x, h))
    Ch = None
    if b.has_third_contracted:
        Ch = cubic_form_matrix(g, H, b.third_contracted(x, h), h)
    return LocalGeometry(p0=p0, s0=s0, g0=g0, c3=c3, G=G, Ch=Ch)
