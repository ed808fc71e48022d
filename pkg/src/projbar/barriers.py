"""Concrete projectively self-concordant barriers and the ways to combine them."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.optimize import linprog, minimize

from .core import Barrier, BarrierParams, _frozen, as_vector, gamma_from_nu, nu_from_gamma
from .errors import ConstructionError, DomainError, NotInteriorError


def _params_for(nu: float, gamma: Optional[float]) -> BarrierParams:
    # an explicit gamma overrides the natural one (used to test detection of bad declarations)
    if gamma is None:
        return BarrierParams.from_nu(nu)
    return BarrierParams.from_gamma(gamma)


class PolyhedralBarrier(Barrier):
    """``f(x) = -(1/m) sum log(b - A x)_i`` on ``{A x <= b}``."""

    has_third_contracted = True

    def __init__(self, A, b, witness=None, gamma: Optional[float] = None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = as_vector(b, A.shape[0], "b")
        m, n = A.shape
        if m < 2:
            raise ConstructionError("a polyhedral barrier needs at least two inequalities")
        if not np.any(b):
            raise ConstructionError("b = 0: the set is an improper section of the orthant")
        if np.linalg.matrix_rank(A) < n:
            raise ConstructionError("columns of A must be linearly independent")
        self.A = _frozen(A)
        self.b = _frozen(b)
        self.m = m
        if witness is None:
            witness = _chebyshev_center(A, b)
        super().__init__(n, _params_for(m, gamma), witness)
        if not self.contains(self.witness):
            raise ConstructionError("witness is not interior")

    def slack(self, x) -> np.ndarray:
        return self.b - self.A @ as_vector(x, self.dim)

    def _slack_interior(self, x) -> np.ndarray:
        s = self.slack(x)
        if np.any(s <= 0.0):
            raise NotInteriorError(f"point {x} violates A x < b")
        return s

    def evaluate(self, x):
        s = self._slack_interior(x)
        As = self.A / s[:, None]
        return (-float(np.sum(np.log(s))) / self.m,
                As.sum(axis=0) / self.m,
                As.T @ As / self.m)

    def third_directional(self, x, h):
        s = self._slack_interior(x)
        z = (self.A @ as_vector(h, self.dim, "h")) / s
        return 2.0 * float(np.sum(z ** 3)) / self.m

    def third_contracted(self, x, h):
        s = self._slack_interior(x)
        As = self.A / s[:, None]
        z = As @ as_vector(h, self.dim, "h")
        return 2.0 * (As.T * z) @ As / self.m

    def contains(self, x, tol=0.0):
        s = self.slack(x)
        return bool(np.all(s > -tol)) if tol > 0 else bool(np.all(s > 0.0))

    def sigma(self, x, h):
        s = self._slack_interior(x)
        return max(0.0, float(np.max((self.A @ as_vector(h, self.dim, "h")) / s)))


def _chebyshev_center(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, n = A.shape
    norms = np.linalg.norm(A, axis=1)
    # maximize r subject to a_i x + r |a_i| <= b_i, r <= 1 (keeps unbounded sets bounded)
    res = linprog(
        c=np.r_[np.zeros(n), -1.0],
        A_ub=np.c_[A, norms],
        b_ub=b,
        bounds=[(None, None)] * n + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0 or res.x[-1] <= 1e-12:
        raise ConstructionError("polyhedron has empty interior")
    return res.x[:n]


def polyhedral(A, b, witness=None, gamma: Optional[float] = None) -> PolyhedralBarrier:
    return PolyhedralBarrier(A, b, witness=witness, gamma=gamma)


def interval(lo: float = 0.0, hi: float = 1.0) -> PolyhedralBarrier:
    """Barrier ``-(log(x - lo) + log(hi - x))/2``."""
    return PolyhedralBarrier([[-1.0], [1.0]], [-lo, hi])


def box(n: int) -> PolyhedralBarrier:
    """Unit cube ``[0, 1]^n`` described by ``2n`` inequalities."""
    eye = np.eye(n)
    return PolyhedralBarrier(np.vstack([-eye, eye]), np.r_[np.zeros(n), np.ones(n)])


def simplex(n: int) -> PolyhedralBarrier:
    """Standard simplex ``{x >= 0, sum x <= 1}`` in ``R^n`` (``m = n + 1``)."""
    A = np.vstack([-np.eye(n), np.ones((1, n))])
    return PolyhedralBarrier(A, np.r_[np.zeros(n), 1.0])


class SpectrahedralBarrier(Barrier):
    """``f(x) = -(1/m) log det(A0 + sum x_i A_i)`` for ``m x m`` symmetric ``A_i``."""

    has_third_contracted = True

    def __init__(self, mats: Sequence, witness=None, gamma: Optional[float] = None):
        mats = [np.asarray(M, dtype=float) for M in mats]
        if len(mats) < 2:
            raise ConstructionError("need A0 and at least one A_i")
        m = mats[0].shape[0]
        for M in mats:
            if M.shape != (m, m):
                raise ConstructionError("all matrices must be m x m")
            if not np.allclose(M, M.T):
                raise ConstructionError("matrices must be symmetric")
        if m < 2:
            raise ConstructionError("matrix size must be at least 2")
        lin = np.array([M.ravel() for M in mats[1:]])
        if np.linalg.matrix_rank(lin) < len(mats) - 1:
            raise ConstructionError("A_1..A_n must be linearly independent")
        # A0 in the span of the A_i makes the set a cone through the origin: f is then
        # logarithmically homogeneous and G is singular along the radial direction
        self.proper = bool(np.linalg.matrix_rank(np.vstack([lin, mats[0].ravel()]))
                           > np.linalg.matrix_rank(lin))
        self.mats = tuple(_frozen(0.5 * (M + M.T)) for M in mats)
        self.m = m
        n = len(mats) - 1
        self._stack = _frozen(np.array(self.mats[1:]))
        if witness is None:
            witness = self._find_witness()
        super().__init__(n, _params_for(m, gamma), witness)
        if not self.contains(self.witness):
            raise ConstructionError("A(witness) is not positive definite")

    def _find_witness(self) -> np.ndarray:
        n = len(self.mats) - 1
        x0 = np.zeros(n)
        if np.linalg.eigvalsh(self.matrix(x0))[0] > 0.0:
            return x0

        # maximize the smallest eigenvalue, capped so unbounded sets stay tractable
        def neg_lmin(x):
            return -min(np.linalg.eigvalsh(self.matrix(x))[0], 1.0)

        res = minimize(neg_lmin, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if -res.fun <= 0.0:
            raise ConstructionError("no interior point found; supply a witness")
        return res.x

    def matrix(self, x) -> np.ndarray:
        x = as_vector(x, len(self.mats) - 1)
        return self.mats[0] + np.tensordot(x, self._stack, axes=1)

    def _whitened(self, x):
        """Cholesky factor of A(x) and the congruence L^-1 A_i L^-T of each A_i."""
        S = self.matrix(x)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise NotInteriorError(f"A(x) is not positive definite at {x}") from None
        K = np.array([linalg.solve_triangular(L, linalg.solve_triangular(L, Ai, lower=True).T,
                                              lower=True) for Ai in self._stack])
        return L, K

    def evaluate(self, x):
        L, K = self._whitened(x)
        val = -2.0 * float(np.sum(np.log(np.diag(L)))) / self.m
        grad = -np.trace(K, axis1=1, axis2=2) / self.m
        hess = np.einsum("iab,jba->ij", K, K) / self.m
        return val, grad, 0.5 * (hess + hess.T)

    def third_directional(self, x, h):
        _, K = self._whitened(x)
        Kh = np.tensordot(as_vector(h, self.dim, "h"), K, axes=1)
        return -2.0 * float(np.trace(Kh @ Kh @ Kh)) / self.m

    def third_contracted(self, x, h):
        _, K = self._whitened(x)
        Kh = np.tensordot(as_vector(h, self.dim, "h"), K, axes=1)
        KhK = np.einsum("ab,ibc->iac", Kh, K)
        # tr(K_h K_i K_j) + tr(K_i K_h K_j)
        T = np.einsum("iab,jba->ij", KhK, K)
        return -(T + T.T) / self.m

    def contains(self, x, tol=0.0):
        lam = np.linalg.eigvalsh(self.matrix(x))[0]
        return bool(lam > -tol) if tol > 0 else bool(lam > 0.0)

    def sigma(self, x, h):
        _, K = self._whitened(x)
        Kh = np.tensordot(as_vector(h, self.dim, "h"), K, axes=1)
        return max(0.0, float(np.linalg.eigvalsh(-0.5 * (Kh + Kh.T))[-1]))


def spectrahedral(mats, witness=None, gamma: Optional[float] = None) -> SpectrahedralBarrier:
    return SpectrahedralBarrier(mats, witness=witness, gamma=gamma)


def _log_derivs_of(u, du, d2u, d3u_h, h):
    """Value, gradient, Hessian, third directional of ``log u``."""
    uh = float(du @ h)
    return (math.log(u), du / u, d2u / u - np.outer(du, du) / u ** 2,
            d3u_h / u - 3.0 * float(h @ d2u @ h) * uh / u ** 2 + 2.0 * uh ** 3 / u ** 3)


class ExpEpigraphBarrier(Barrier):
    """``f(x, y) = -(log(log y - x) + log y)/3`` on ``{y > exp(x)}``."""

    has_third_contracted = True

    def __init__(self, gamma: Optional[float] = None):
        super().__init__(2, _params_for(3.0, gamma), [0.0, math.e])

    def _parts(self, z):
        x, y = as_vector(z, 2)
        if not y > 0.0:
            raise NotInteriorError("y must be positive")
        u = math.log(y) - x
        if not u > 0.0:
            raise NotInteriorError("log y must exceed x")
        return x, y, u

    def evaluate(self, z):
        _, y, u = self._parts(z)
        du = np.array([-1.0, 1.0 / y])
        Hu = np.array([[0.0, 0.0], [0.0, -1.0 / y ** 2]])
        Hy = np.array([[0.0, 0.0], [0.0, -1.0 / y ** 2]])
        val = -(math.log(u) + math.log(y)) / 3.0
        grad = -(du / u + np.array([0.0, 1.0 / y])) / 3.0
        hess = -(Hu / u - np.outer(du, du) / u ** 2 + Hy) / 3.0
        return val, grad, hess

    def third_directional(self, z, h):
        _, y, u = self._parts(z)
        h = as_vector(h, 2, "h")
        uh = -h[0] + h[1] / y
        u2 = -h[1] ** 2 / y ** 2
        u3 = 2.0 * h[1] ** 3 / y ** 3
        log_u = u3 / u - 3.0 * u2 * uh / u ** 2 + 2.0 * uh ** 3 / u ** 3
        log_y = 2.0 * h[1] ** 3 / y ** 3
        return -(log_u + log_y) / 3.0

    def third_contracted(self, z, h):
        _, y, u = self._parts(z)
        h = as_vector(h, 2, "h")
        du = np.array([-1.0, 1.0 / y])
        Hu = np.array([[0.0, 0.0], [0.0, -1.0 / y ** 2]])
        Tu = np.array([[0.0, 0.0], [0.0, 2.0 * h[1] / y ** 3]])
        uh = float(du @ h)
        Huh = Hu @ h
        log_u = (Tu / u - (Hu * uh + np.outer(Huh, du) + np.outer(du, Huh)) / u ** 2
                 + 2.0 * uh * np.outer(du, du) / u ** 3)
        return -(log_u + Tu) / 3.0

    def contains(self, z, tol=0.0):
        x, y = as_vector(z, 2)
        if not y > 0.0:
            return False
        return bool(math.log(y) - x > -tol) if tol > 0 else bool(math.log(y) - x > 0.0)


def exp_epigraph(gamma: Optional[float] = None) -> ExpEpigraphBarrier:
    return ExpEpigraphBarrier(gamma=gamma)


def power_gamma(p: float) -> float:
    """Parameter of the power-epigraph barrier."""
    q = p / (p - 1.0)
    r = max(p, q)
    return (r - 2.0) / math.sqrt((2.0 * r - 1.0) * (r + 1.0))


class _PowerProfile:
    """The profile ``psi(s) = phi(sqrt(s))`` and its first three derivatives.

    ``s = t^2`` is parametrized by ``rho`` in ``[0, inf)`` through
    ``s = rho * (rho + p + 1)^(-1/p) * (rho + q + 1)^(-1/q)``.  Working in
    ``s`` rather than ``t`` keeps the barrier smooth across ``x = 0``.
    """

    def __init__(self, p: float):
        self.p = p
        self.q = p / (p - 1.0)
        self.a = p + 1.0
        self.b = self.q + 1.0

    def log_s(self, rho: float) -> float:
        return -math.log1p(self.a / rho) / self.p - math.log1p(self.b / rho) / self.q

    def solve_rho(self, s: float, slack: Optional[float] = None) -> float:
        """Invert ``s(rho)``: bisection in ``log rho`` followed by two Newton steps.

        ``slack = 1 - s`` may be passed when it is known more accurately than ``s``.
        """
        if s == 0.0:
            return 0.0
        if slack is not None and slack < 0.5:
            target = math.log1p(-slack)
        else:
            target = math.log(s)
        k0 = self.a ** (-1.0 / self.p) * self.b ** (-1.0 / self.q)
        guess = s / k0 if s < 0.5 else 3.0 / max(-target, 1e-300)
        lo = hi = math.log(guess)
        while self.log_s(math.exp(lo)) > target:
            lo -= 2.0
        while self.log_s(math.exp(hi)) < target:
            hi += 2.0
        while hi - lo > 1e-14:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if self.log_s(math.exp(mid)) < target:
                lo = mid
            else:
                hi = mid
        rho = math.exp(0.5 * (lo + hi))
        for _ in range(2):
            # d log s / d rho = m(rho) / rho
            rho -= (self.log_s(rho) - target) * rho / self._m(rho)[0]
        return rho

    def _m(self, rho):
        ca, cb = self.a / self.p, self.b / self.q
        ra, rb = rho + self.a, rho + self.b
        return (ca / ra + cb / rb, -ca / ra ** 2 - cb / rb ** 2)

    def derivs(self, s: float, slack: Optional[float] = None):
        """``(psi, psi', psi'', psi''')`` at ``s`` in ``[0, 1)``."""
        p, q, a, b = self.p, self.q, self.a, self.b
        rho = self.solve_rho(s, slack)
        ra, rb = rho + a, rho + b
        k = math.exp(-math.log(ra) / p - math.log(rb) / q)
        l1 = -(1.0 / p) / ra - (1.0 / q) / rb
        l2 = (1.0 / p) / ra ** 2 + (1.0 / q) / rb ** 2
        m, dm = self._m(rho)
        psi = 0.5 * ((a / p) * math.log(ra) + (b / q) * math.log(rb))
        d1 = 1.0 / (2.0 * k)
        d2 = -l1 / (2.0 * k * k * m)
        d3 = -(l2 - 2.0 * l1 * l1 - l1 * dm / m) / (2.0 * k ** 3 * m * m)
        return psi, d1, d2, d3


class PowerEpigraphBarrier(Barrier):
    """Barrier on ``{(x, y) : y > |x|^p}`` induced by the canonical power-cone barrier."""

    has_third_contracted = True

    def __init__(self, p: float, gamma: Optional[float] = None):
        p = float(p)
        if not p > 1.0:
            raise DomainError(f"p must exceed 1, got {p!r}")
        self.p = p
        self.q = p / (p - 1.0)
        self._profile = _PowerProfile(p)
        self._log_coeff = (p + 1.0) / (3.0 * p)
        declared = power_gamma(p) if gamma is None else gamma
        super().__init__(2, BarrierParams.from_gamma(declared), [0.0, 1.0])

    def _s_derivs(self, z):
        x, y = as_vector(z, 2)
        if not y > 0.0:
            raise NotInteriorError("y must be positive")
        r = 2.0 / self.p
        w = y ** (-r)
        s = x * x * w
        if not s < 1.0:
            raise NotInteriorError("|x| must be below y^(1/p)")
        ds = np.array([2.0 * x * w, -r * x * x * w / y])
        d2s = np.array([[2.0 * w, -2.0 * r * x * w / y],
                        [-2.0 * r * x * w / y, r * (r + 1.0) * x * x * w / y ** 2]])
        d3s = np.zeros((2, 2, 2))
        d3s[0, 0, 1] = d3s[0, 1, 0] = d3s[1, 0, 0] = -2.0 * r * w / y
        d3s[0, 1, 1] = d3s[1, 0, 1] = d3s[1, 1, 0] = 2.0 * r * (r + 1.0) * x * w / y ** 2
        d3s[1, 1, 1] = -r * (r + 1.0) * (r + 2.0) * x * x * w / y ** 3
        # 1 - s without the cancellation of forming s first
        yr = y if r == 1.0 else y ** r
        slack = (yr - x * x) / yr
        return y, (s, slack), ds, d2s, d3s

    def near_boundary(self, z) -> bool:
        """True where ``t = |x| y^(-1/p)`` exceeds ``1 - 1e-10``."""
        _, (s, _), *_ = self._s_derivs(z)
        return math.sqrt(s) > 1.0 - 1e-10

    def evaluate(self, z):
        y, s, ds, d2s, _ = self._s_derivs(z)
        psi, d1, d2, _ = self._profile.derivs(*s)
        c = self._log_coeff
        val = -c * math.log(y) + psi / 3.0
        grad = d1 * ds / 3.0
        grad[1] -= c / y
        hess = (d2 * np.outer(ds, ds) + d1 * d2s) / 3.0
        hess[1, 1] += c / y ** 2
        return val, grad, hess

    def third_directional(self, z, h):
        y, s, ds, d2s, d3s = self._s_derivs(z)
        h = as_vector(h, 2, "h")
        _, d1, d2, d3 = self._profile.derivs(*s)
        sh = float(ds @ h)
        s2 = float(h @ d2s @ h)
        s3 = float(np.einsum("ijk,i,j,k->", d3s, h, h, h))
        return (d3 * sh ** 3 + 3.0 * d2 * sh * s2 + d1 * s3) / 3.0 \
            - 2.0 * self._log_coeff * h[1] ** 3 / y ** 3

    def third_contracted(self, z, h):
        y, s, ds, d2s, d3s = self._s_derivs(z)
        h = as_vector(h, 2, "h")
        _, d1, d2, d3 = self._profile.derivs(*s)
        sh = float(ds @ h)
        d2sh = d2s @ h
        T = (d3 * sh * np.outer(ds, ds)
             + d2 * (np.outer(d2sh, ds) + np.outer(ds, d2sh) + sh * d2s)
             + d1 * np.einsum("ijk,k->ij", d3s, h)) / 3.0
        T[1, 1] -= 2.0 * self._log_coeff * h[1] / y ** 3
        return T

    def contains(self, z, tol=0.0):
        x, y = as_vector(z, 2)
        if not y > 0.0:
            return False
        slack = 1.0 - x * x * y ** (-2.0 / self.p)
        return bool(slack > -tol) if tol > 0 else bool(slack > 0.0)


def power_epigraph(p: float, gamma: Optional[float] = None) -> PowerEpigraphBarrier:
    return PowerEpigraphBarrier(p, gamma=gamma)


class ConicLift(Barrier):
    """``F(t, x) = scale * (-log t + f(x / t))`` on the conic extension of the domain.

    With ``scale = nu`` this is the logarithmically homogeneous extension; with
    ``scale = 1`` it is the homogenized function used for projective images.
    """

    def __init__(self, base: Barrier, nu: Optional[float] = None, scale: Optional[float] = None):
        self.base = base
        nu = base.nu if nu is None else float(nu)
        self.scale = nu if scale is None else float(scale)
        self.has_third_contracted = base.has_third_contracted
        super().__init__(base.dim + 1, BarrierParams.from_nu(max(nu, 2.0)), np.r_[1.0, base.witness])
        self.homogeneity_degree = self.scale

    def _split(self, z):
        z = as_vector(z, self.dim)
        t = z[0]
        if not t > 0.0:
            raise NotInteriorError("t must be positive")
        y = z[1:] / t
        J = np.hstack([-y[:, None], np.eye(self.base.dim)]) / t
        e = np.zeros(self.dim)
        e[0] = 1.0 / t
        return t, y, J, e

    def evaluate(self, z):
        t, y, J, e = self._split(z)
        f, g, H = self.base.evaluate(y)
        Jg = J.T @ g
        val = -math.log(t) + f
        grad = -e + Jg
        hess = np.outer(e, e) + J.T @ H @ J - np.outer(e, Jg) - np.outer(Jg, e)
        return self.scale * val, self.scale * grad, self.scale * hess

    def directional(self, z, h):
        """``(F'[h], F''[h,h], F'''[h,h,h])`` via the split ``h = alpha z + (0, t d)``.

        With ``beta = alpha - f'[d]`` these equal ``scale`` times ``-beta``,
        ``beta^2 + G[d,d]`` and ``C[d,d,d] - 2 beta^3 - 6 beta G[d,d]``; unlike the
        assembled Hessian this stays accurate near the boundary of the cone.
        """
        t, y, J, e = self._split(z)
        h = as_vector(h, self.dim, "h")
        _, g, H = self.base.evaluate(y)
        alpha = float(e @ h)
        # same as J h, but exactly zero for radial h
        d = (h[1:] - alpha * as_vector(z, self.dim)[1:]) / t
        p = float(g @ d)
        s = float(d @ H @ d)
        Gd = max(s - p * p, 0.0)
        c3 = self.base.third_directional(y, d) - 6.0 * s * p + 4.0 * p ** 3
        beta = alpha - p
        k = self.scale
        return -k * beta, k * (beta * beta + Gd), k * (c3 - 2.0 * beta ** 3 - 6.0 * beta * Gd)

    def third_directional(self, z, h):
        return self.directional(z, h)[2]

    def third_contracted(self, z, h):
        t, y, J, e = self._split(z)
        h = as_vector(h, self.dim, "h")
        _, g, H = self.base.evaluate(y)
        eps = float(e @ h)
        w = J @ h
        T = self.base.third_contracted(y, w)
        JHw = J.T @ (H @ w)
        Jg = J.T @ g
        ee = np.outer(e, e)
        M = (-2.0 * eps * ee + J.T @ T @ J
             - 2.0 * (np.outer(e, JHw) + np.outer(JHw, e) + eps * J.T @ H @ J)
             + 2.0 * (float(g @ w) * ee + eps * (np.outer(e, Jg) + np.outer(Jg, e))))
        return self.scale * M

    def contains(self, z, tol=0.0):
        z = as_vector(z, self.dim)
        if not z[0] > 0.0:
            return False
        return self.base.contains(z[1:] / z[0], tol)


def conic_lift(b: Barrier, nu: Optional[float] = None) -> ConicLift:
    """Logarithmically homogeneous extension ``nu * (-log t + f(x/t))``.

    ``nu`` defaults to the barrier's own parameter; passing a different value
    builds the (generally not self-concordant) mis-scaled lift.
    """
    return ConicLift(b, nu=nu)


class AffineSection(Barrier):
    """Restriction ``u -> f(x0 + M u)`` to an affine subspace."""

    def __init__(self, base: Barrier, x0, M, witness=None, params: Optional[BarrierParams] = None):
        M = np.asarray(M, dtype=float)
        if M.ndim == 1:
            M = M[:, None]
        x0 = as_vector(x0, base.dim, "x0")
        if M.shape[0] != base.dim:
            raise ConstructionError("M must have as many rows as the base dimension")
        if np.linalg.matrix_rank(M) < M.shape[1]:
            raise ConstructionError("M must have full column rank")
        self.base = base
        self.x0 = _frozen(x0)
        self.M = _frozen(M)
        self.has_third_contracted = base.has_third_contracted
        if witness is None:
            witness = self._find_witness()
        super().__init__(M.shape[1], params or base.params, witness)
        if not self.contains(self.witness):
            raise ConstructionError("affine subspace does not meet the interior at the witness")

    def _find_witness(self):
        u0 = np.zeros(self.M.shape[1])
        if self.base.contains(self.x0):
            return u0
        u1 = np.linalg.lstsq(self.M, self.base.witness - self.x0, rcond=None)[0]
        if self.base.contains(self.x0 + self.M @ u1):
            return u1
        raise ConstructionError("affine subspace misses the interior; supply a witness")

    def embed(self, u) -> np.ndarray:
        return self.x0 + self.M @ as_vector(u, self.dim, "u")

    def evaluate(self, u):
        f, g, H = self.base.evaluate(self.embed(u))
        return f, self.M.T @ g, self.M.T @ H @ self.M

    def third_directional(self, u, h):
        return self.base.third_directional(self.embed(u), self.M @ as_vector(h, self.dim, "h"))

    def third_contracted(self, u, h):
        T = self.base.third_contracted(self.embed(u), self.M @ as_vector(h, self.dim, "h"))
        return self.M.T @ T @ self.M

    def contains(self, u, tol=0.0):
        return self.base.contains(self.embed(u), tol)

    def sigma(self, u, h):
        return self.base.sigma(self.embed(u), self.M @ as_vector(h, self.dim, "h"))


def affine_section(b: Barrier, x0, M, witness=None) -> AffineSection:
    return AffineSection(b, x0, M, witness=witness)


class ProjectiveImage(Barrier):
    """Push-forward of a barrier under ``x -> A(x)/q(x)``.

    ``A(x) = L x + a`` and ``q(x) = l.x + q0``.  The image barrier satisfies
    ``g(A(x)/q(x)) = f(x) + log q(x)``.  Internally the map is the linear
    isomorphism ``(1, x) -> (q(x), A(x))`` of the homogenized space, inverted
    once at construction.
    """

    def __init__(self, base: Barrier, L, a, l, q0: float, witness=None):
        n = base.dim
        L = np.atleast_2d(np.asarray(L, dtype=float))
        a = as_vector(a, n, "a")
        l = as_vector(l, n, "l")
        lifted = np.zeros((n + 1, n + 1))
        lifted[0, 0] = float(q0)
        lifted[0, 1:] = l
        lifted[1:, 0] = a
        lifted[1:, 1:] = L
        if L.shape != (n, n) or np.linalg.cond(lifted) > 1e12 or np.linalg.cond(L) > 1e12:
            raise ConstructionError("the map must be an affine isomorphism with q and A never both zero")
        self.base = base
        self.lifted = _frozen(lifted)
        self.lifted_inv = _frozen(np.linalg.inv(lifted))
        self._homog = ConicLift(base, scale=1.0)
        self.has_third_contracted = base.has_third_contracted
        if witness is None:
            if not self.q(base.witness) > 0.0:
                raise ConstructionError("q must be positive at the base witness; supply a witness")
            witness = self.forward(base.witness)
        super().__init__(n, base.params, witness)
        if not self.contains(self.witness):
            raise ConstructionError("witness is not interior to the image")

    def q(self, x) -> float:
        return float(self.lifted[0] @ np.r_[1.0, as_vector(x, self.base.dim)])

    def forward(self, x) -> np.ndarray:
        """``x -> A(x)/q(x)``."""
        v = self.lifted @ np.r_[1.0, as_vector(x, self.base.dim)]
        if not v[0] > 0.0:
            raise NotInteriorError("q(x) must be positive")
        return v[1:] / v[0]

    def inverse(self, y) -> np.ndarray:
        v = self._lift_point(y)
        if not v[0] > 0.0:
            raise NotInteriorError("point is not in the image of {q > 0}")
        return v[1:] / v[0]

    def forward_jacobian(self, x) -> np.ndarray:
        x = as_vector(x, self.base.dim)
        v = self.lifted @ np.r_[1.0, x]
        return (self.lifted[1:, 1:] - np.outer(v[1:] / v[0], self.lifted[0, 1:])) / v[0]

    def _lift_point(self, y):
        return self.lifted_inv @ np.r_[1.0, as_vector(y, self.dim, "y")]

    def evaluate(self, y):
        P = self.lifted_inv[:, 1:]
        f, g, H = self._homog.evaluate(self._lift_point(y))
        return f, P.T @ g, P.T @ H @ P

    def third_directional(self, y, h):
        P = self.lifted_inv[:, 1:]
        return self._homog.third_directional(self._lift_point(y), P @ as_vector(h, self.dim, "h"))

    def third_contracted(self, y, h):
        P = self.lifted_inv[:, 1:]
        T = self._homog.third_contracted(self._lift_point(y), P @ as_vector(h, self.dim, "h"))
        return P.T @ T @ P

    def contains(self, y, tol=0.0):
        return self._homog.contains(self._lift_point(y), tol)


def projective_image(b: Barrier, L, a, l, q0: float, witness=None) -> ProjectiveImage:
    return ProjectiveImage(b, L, a, l, q0, witness=witness)


class DirectProduct(Barrier):
    """``(nu1 f1(x) + nu2 f2(y)) / (nu1 + nu2)`` on a product of sets."""

    def __init__(self, b1: Barrier, b2: Barrier, gamma: Optional[float] = None):
        self.parts = (b1, b2)
        self.weights = (b1.nu / (b1.nu + b2.nu), b2.nu / (b1.nu + b2.nu))
        self.split = b1.dim
        self.has_third_contracted = b1.has_third_contracted and b2.has_third_contracted
        super().__init__(b1.dim + b2.dim, _params_for(b1.nu + b2.nu, gamma),
                         np.r_[b1.witness, b2.witness])

    def _halves(self, v):
        v = as_vector(v, self.dim)
        return v[: self.split], v[self.split:]

    def evaluate(self, z):
        (x, y) = self._halves(z)
        (w1, w2) = self.weights
        f1, g1, H1 = self.parts[0].evaluate(x)
        f2, g2, H2 = self.parts[1].evaluate(y)
        return (w1 * f1 + w2 * f2, np.r_[w1 * g1, w2 * g2],
                linalg.block_diag(w1 * H1, w2 * H2))

    def third_directional(self, z, h):
        (x, y), (h1, h2) = self._halves(z), self._halves(h)
        return (self.weights[0] * self.parts[0].third_directional(x, h1)
                + self.weights[1] * self.parts[1].third_directional(y, h2))

    def third_contracted(self, z, h):
        (x, y), (h1, h2) = self._halves(z), self._halves(h)
        return linalg.block_diag(self.weights[0] * self.parts[0].third_contracted(x, h1),
                                 self.weights[1] * self.parts[1].third_contracted(y, h2))

    def contains(self, z, tol=0.0):
        x, y = self._halves(z)
        return self.parts[0].contains(x, tol) and self.parts[1].contains(y, tol)

    def sigma(self, z, h):
        (x, y), (h1, h2) = self._halves(z), self._halves(h)
        return max(self.parts[0].sigma(x, h1), self.parts[1].sigma(y, h2))


def direct_product(b1: Barrier, b2: Barrier, gamma: Optional[float] = None) -> DirectProduct:
    return DirectProduct(b1, b2, gamma=gamma)


class ScaledBarrier(Barrier):
    """``F = factor * f``; with ``factor = nu`` this is the affinely self-concordant barrier."""

    def __init__(self, base: Barrier, factor: float):
        self.base = base
        self.factor = float(factor)
        self.has_third_contracted = base.has_third_contracted
        super().__init__(base.dim, base.params, base.witness)

    def evaluate(self, x):
        f, g, H = self.base.evaluate(x)
        return self.factor * f, self.factor * g, self.factor * H

    def third_directional(self, x, h):
        return self.factor * self.base.third_directional(x, h)

    def third_contracted(self, x, h):
        return self.factor * self.base.third_contracted(x, h)

    def contains(self, x, tol=0.0):
        return self.base.contains(x, tol)

    def sigma(self, x, h):
        return self.base.sigma(x, h)


def affine_barrier(b: Barrier) -> ScaledBarrier:
    """``F = nu * f``, affinely self-concordant with parameter ``nu``."""
    return ScaledBarrier(b, b.nu)


def proof_polynomial(nu: float, mu: float, t):
    """``p_mu(t)``: nonnegative for all ``t`` iff the lifted third-order bound holds."""
    t = np.asarray(t, dtype=float)
    return (4.0 * (nu - 1.0) * t ** 6 + 12.0 * (nu - 2.0) * t ** 4 + 4.0 * mu * t ** 3
            + 12.0 * (nu - 3.0) * t ** 2 + 12.0 * mu * t + 4.0 * nu - mu * mu)


def proof_polynomial_factored(kappa: float, t, sign: int):
    """Factored form of ``p_mu(t)`` at ``mu = sign * 2 gamma`` with ``nu = kappa^2 + 1``."""
    t = np.asarray(t, dtype=float)
    s = 1.0 if sign > 0 else -1.0
    return (4.0 / kappa ** 2 * (kappa * t + s) ** 2
            * (kappa * (t * t + 2.0) * (t - s) ** 2
               + (kappa - 1.0) * ((t ** 4 + 3.0 * t * t + 3.0) * kappa + 1.0)))


__all__ = [
    "PolyhedralBarrier", "SpectrahedralBarrier", "ExpEpigraphBarrier", "PowerEpigraphBarrier",
    "ConicLift", "AffineSection", "ProjectiveImage", "DirectProduct", "ScaledBarrier",
    "polyhedral", "interval", "box", "simplex", "spectrahedral", "exp_epigraph",
    "power_epigraph", "power_gamma", "conic_lift", "affine_section", "projective_image",
    "direct_product", "affine_barrier", "proof_polynomial", "proof_polynomial_factored",
    "gamma_from_nu", "nu_from_gamma",
]
