"""Barrier duality through the map ``x -> p = -f'(x) / (1 + <f'(x), x>)``.

The dual function is ``f_*(p) = -min_x (f(x) + log(1 + <x, p>))``.  At the
minimizer the map above holds, so ``f_*`` and its derivatives can be assembled
from the primal data at ``x``; the affine metric is carried to the dual affine
metric and the cubic form to its negative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import Barrier, as_vector, affine_metric, cubic_form_matrix, is_positive_definite
from .errors import DualUndefinedError, NotInteriorError, OutsideBijectionError

DUAL_GRAD_TOL = 1e-10
DUAL_MAX_ITER = 200
MAX_HALVINGS = 60
NEWTON_REGION = 0.25


@dataclass(frozen=True)
class DualPair:
    """A primal point and its image under the duality map."""

    x: np.ndarray
    p: np.ndarray

    @property
    def pairing(self) -> float:
        """``1 + <x, p>``, which equals ``1 / (1 + <f'(x), x>)``."""
        return 1.0 + float(self.x @ self.p)


def _scale(g: np.ndarray, x: np.ndarray) -> float:
    beta = 1.0 + float(g @ x)
    if not beta > 0.0:
        raise OutsideBijectionError(f"1 + <f'(x), x> = {beta!r} is not positive")
    return beta


def dual_point(b: Barrier, x) -> np.ndarray:
    x = b._require_interior(x)
    _, g, _ = b.evaluate(x)
    return -g / _scale(g, x)


def dual_pair(b: Barrier, x) -> DualPair:
    x = b._require_interior(x)
    return DualPair(x=x, p=dual_point(b, x))


def dual_point_jacobian(b: Barrier, x) -> np.ndarray:
    """``dp/dx = (g (g + H x)^T - beta H) / beta^2`` with ``beta = 1 + <g, x>``."""
    x = b._require_interior(x)
    _, g, H = b.evaluate(x)
    beta = _scale(g, x)
    return (np.outer(g, g + H @ x) - beta * H) / beta ** 2


def _q(b: Barrier, p: np.ndarray, x: np.ndarray):
    s = 1.0 + float(x @ p)
    if not s > 0.0 or not b.contains(x):
        return None
    f, g, H = b.evaluate(x)
    return f + math.log(s), g + p / s, H - np.outer(p, p) / s ** 2, g, H


def _grad_floor(p: np.ndarray, x: np.ndarray, g: np.ndarray, G: np.ndarray) -> float:
    """G-metric size of the rounding error in ``q_p'(x) = f'(x) + p / (1 + <x, p>)``.

    Near the boundary of the dual domain ``1 + <x, p>`` cancels, so the gradient
    cannot be resolved below ``eps (1 + |x||p|) / s`` relative to ``|p| / s``.
    """
    s = 1.0 + float(x @ p)
    eps = np.finfo(float).eps
    rel = 8.0 * eps * (1.0 + float(np.linalg.norm(x) * np.linalg.norm(p))) / s
    err = rel * np.abs(p) / s + 8.0 * eps * np.abs(g)
    try:
        return math.sqrt(max(float(err @ np.linalg.solve(G, err)), 0.0))
    except np.linalg.LinAlgError:
        return 0.0


def dual_value(b: Barrier, p, x_start=None) -> Tuple[float, np.ndarray]:
    """Evaluate ``f_*(p)`` by minimizing ``q_p(x) = f(x) + log(1 + <x, p>)``.

    Newton steps use ``q_p''`` where it is positive definite and the affine
    metric ``G`` otherwise (``q_p`` is only quasi-convex); steps are halved until
    the iterate is interior and ``q_p`` decreases.  Returns ``(f_*(p), x*)``.
    """
    p = as_vector(p, b.dim, "p")
    if x_start is None:
        from .ipm import analytic_center

        x_start = analytic_center(b, b.witness)
    x = as_vector(x_start, b.dim, "x_start").copy()
    cur = _q(b, p, x)
    if cur is None:
        raise DualUndefinedError("q_p is undefined at the starting point")
    prev_dec = math.inf
    for _ in range(DUAL_MAX_ITER):
        val, grad, hess, g, H = cur
        G = affine_metric(g, H)
        try:
            Ginv_grad = np.linalg.solve(G, grad)
        except np.linalg.LinAlgError:
            raise DualUndefinedError("affine metric became singular") from None
        dec = math.sqrt(max(float(grad @ Ginv_grad), 0.0))
        # below the rounding floor keep polishing only while Newton still contracts
        if dec <= DUAL_GRAD_TOL or (dec <= _grad_floor(p, x, g, G) and dec > 0.5 * prev_dec):
            return -val, x
        prev_dec = dec
        step = -np.linalg.solve(hess, grad) if is_positive_definite(hess) else -Ginv_grad
        slope = float(grad @ step)
        if slope >= 0.0:
            step, slope = -Ginv_grad, -float(grad @ Ginv_grad)
        if dec < NEWTON_REGION:
            # near the minimizer q_p'' ~ G and value decreases sink below the rounding
            # of the log terms, so take the full step without a line search
            trial = _q(b, p, x + step)
            if trial is not None:
                x = x + step
                cur = trial
                continue
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = _q(b, p, x + t * step)
            if trial is not None and trial[0] <= val + 1e-4 * t * slope + 1e-15 * abs(val):
                break
            t *= 0.5
        else:
            raise DualUndefinedError("line search failed; the iterate cannot stay interior")
        x = x + t * step
        cur = trial
    raise DualUndefinedError(f"no convergence within {DUAL_MAX_ITER} iterations")


class DualBarrier(Barrier):
    """The dual function ``f_*`` as a barrier on ``-X°``.

    Requires ``X`` and its polar to be bounded (``X`` compact with the origin
    inside); this is declared by the caller, not verified.
    """

    def __init__(self, primal: Barrier, start=None):
        from .ipm import analytic_center

        self.primal = primal
        self.has_third_contracted = primal.has_third_contracted
        center = analytic_center(primal, primal.witness if start is None else start)
        self._start = center
        super().__init__(primal.dim, primal.params, dual_point(primal, center))

    def primal_point(self, p) -> np.ndarray:
        return dual_value(self.primal, p, self._start)[1]

    def _data(self, p):
        p = as_vector(p, self.dim, "p")
        try:
            val, x = dual_value(self.primal, p, self._start)
        except DualUndefinedError as exc:
            raise NotInteriorError(f"dual function undefined at {p}: {exc}") from None
        _, g, H = self.primal.evaluate(x)
        beta = _scale(g, x)
        G = affine_metric(g, H)
        Ginv = np.linalg.inv(G)
        A = np.eye(self.dim) + np.outer(x, g)
        # dx/dp
        J = -beta * Ginv @ A.T
        grad = -beta * x
        hess = beta ** 2 * (A @ Ginv @ A.T + np.outer(x, x))
        return val, grad, 0.5 * (hess + hess.T), x, g, H, J

    def evaluate(self, p):
        val, grad, hess, *_ = self._data(p)
        return val, grad, hess

    def third_directional(self, p, k):
        k = as_vector(k, self.dim, "k")
        _, gs, Hs, x, g, H, J = self._data(p)
        w = J @ k
        t3 = self.primal.third_directional(x, w)
        c = t3 - 6.0 * float(w @ H @ w) * float(g @ w) + 4.0 * float(g @ w) ** 3
        gk = float(gs @ k)
        return -c + 6.0 * float(k @ Hs @ k) * gk - 4.0 * gk ** 3

    def third_contracted(self, p, k):
        k = as_vector(k, self.dim, "k")
        _, gs, Hs, x, g, H, J = self._data(p)
        w = J @ k
        Cw = cubic_form_matrix(g, H, self.primal.third_contracted(x, w), w)
        gk = float(gs @ k)
        Hk = Hs @ k
        return (-J.T @ Cw @ J + 2.0 * (gk * Hs + np.outer(Hk, gs) + np.outer(gs, Hk))
                - 4.0 * gk * np.outer(gs, gs))

    def contains(self, p, tol=0.0):
        try:
            dual_value(self.primal, as_vector(p, self.dim, "p"), self._start)
        except (DualUndefinedError, ValueError):
            return False
        return True


def dual_barrier(b: Barrier, start=None) -> DualBarrier:
    return DualBarrier(b, start=start)


def primal_from_dual_gradient(p, dual_grad) -> np.ndarray:
    """``x = -f_*'(p) / (1 + <f_*'(p), p>)``."""
    p = as_vector(p)
    d = as_vector(dual_grad, p.shape[0])
    s = 1.0 + float(d @ p)
    if not s > 0.0:
        raise OutsideBijectionError("1 + <f_*'(p), p> is not positive")
    return -d / s
