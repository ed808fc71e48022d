"""Short-step path following for ``min <c, x>`` over the domain of a barrier.

Two methods are provided:

* the affine baseline, Newton steps on ``F_tau = F + tau <c, .>`` with ``F = nu f``;
* the projective method, steps of fixed length in the hyperbolic distance of the
  projectively invariant local model ``q_x``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .core import Barrier, affine_metric, as_vector
from .errors import (DomainError, InfeasibleStepError, NonConvergenceError, NotInteriorError,
                     OutsideBijectionError, OutsideModelDomainError)


class Method(enum.Enum):
    AFFINE = "affine"
    PROJECTIVE = "projective"


AFFINE = Method.AFFINE
PROJECTIVE = Method.PROJECTIVE

CENTER_TOL = 1e-10
CENTER_MAX_ITER = 500
MAX_ITER = 100_000
# step length used when the optimal one is infinite (gamma = 0)
LAMBDA_CAP = 2.0


def _newton_system(H: np.ndarray, v: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(H, v)
    except np.linalg.LinAlgError:
        raise DomainError("Hessian is singular") from None


def analytic_center(b: Barrier, x_start) -> np.ndarray:
    """Minimizer of ``f`` by damped Newton, stopping at decrement ``<= 1e-10``."""
    x = b._require_interior(x_start).copy()
    for _ in range(CENTER_MAX_ITER):
        val, g, H = b.evaluate(x)
        step = -_newton_system(H, g)
        lam = math.sqrt(max(-float(g @ step), 0.0))
        if lam <= CENTER_TOL:
            return x
        # damping keeps F = nu f inside its Dikin ellipsoid
        t = 1.0 / (1.0 + math.sqrt(b.nu) * lam)
        if lam * math.sqrt(b.nu) < 0.25:
            t = 1.0
        while not b.contains(x + t * step) or b.value(x + t * step) > val:
            t *= 0.5
            if t < 1e-18:
                raise NonConvergenceError("analytic center line search failed")
        x = x + t * step
    raise NonConvergenceError(
        f"no analytic center within {CENTER_MAX_ITER} iterations (unbounded domain?)")


def _scaled(F: Barrier, x):
    """Value, gradient and Hessian of ``F``."""
    return F.evaluate(F._require_interior(x))


def affine_decrement(F: Barrier, c, tau: float, x) -> float:
    """``rho_tau(x) = || F'(x) + tau c ||`` in the dual norm of ``F''(x)``."""
    _, g, H = _scaled(F, x)
    r = g + tau * as_vector(c, F.dim, "c")
    return math.sqrt(max(float(r @ _newton_system(H, r)), 0.0))


def mu_on_path(F: Barrier, c, tau: float, x) -> float:
    """``mu = tau^2 c^T F''(x)^{-1} c / nu``; ``mu`` lies in ``(0, 1]`` on the central path."""
    _, _, H = _scaled(F, x)
    c = as_vector(c, F.dim, "c")
    return tau * tau * float(c @ _newton_system(H, c)) / F.nu


def path_velocity_norm(mu: float, nu: float, tau: float) -> float:
    """Length ``sqrt(mu nu)/tau`` of the central-path velocity in the local norm."""
    return math.sqrt(mu * nu) / tau


def projective_length_factor(mu: float) -> float:
    """Ratio ``sqrt(1 - mu)`` of path length elements in the metrics ``nu G`` and ``F''``."""
    return math.sqrt(1.0 - mu)


def affine_newton_step(F: Barrier, c, tau: float, x) -> np.ndarray:
    """Full Newton step on ``F + tau <c, .>``; returns the new point."""
    x = F._require_interior(x)
    _, g, H = F.evaluate(x)
    return x - _newton_system(H, g + tau * as_vector(c, F.dim, "c"))


def tau_hat(F: Barrier, c, x) -> float:
    """``argmin_tau rho_tau(x) = -c^T F''^{-1} F' / (c^T F''^{-1} c)``."""
    _, g, H = _scaled(F, x)
    c = as_vector(c, F.dim, "c")
    Hc = _newton_system(H, c)
    cHc = float(c @ Hc)
    if not cHc > 0.0:
        raise DomainError("tau_hat is undefined for c = 0")
    return -float(g @ Hc) / cHc


def _model_parts(b: Barrier, x_hat, x):
    x_hat = b._require_interior(x_hat)
    f, g, H = b.evaluate(x_hat)
    d = as_vector(x, b.dim) - x_hat
    lin = 1.0 - float(g @ d)
    quad = float(d @ affine_metric(g, H) @ d)
    return f, lin, quad


def model_domain_contains(b: Barrier, x_hat, x) -> bool:
    _, lin, quad = _model_parts(b, x_hat, x)
    return bool(lin > 0.0 and lin * lin > quad)


def quadratic_model(b: Barrier, x_hat, x) -> float:
    """``f(x_hat) - 0.5 log((1 - f'(x_hat)[d])^2 - G(x_hat)[d, d])``, ``d = x - x_hat``."""
    f, lin, quad = _model_parts(b, x_hat, x)
    if not (lin > 0.0 and lin * lin > quad):
        raise OutsideModelDomainError("point lies outside the domain of the local model")
    return f - 0.5 * math.log(lin * lin - quad)


def hyperbolic_distance(b: Barrier, x_hat, x) -> float:
    """``artanh(sqrt(G(x_hat)[d, d]) / (1 - f'(x_hat)[d]))``."""
    _, lin, quad = _model_parts(b, x_hat, x)
    if not (lin > 0.0 and lin * lin > quad):
        raise OutsideModelDomainError("point lies outside the domain of the local model")
    return math.atanh(math.sqrt(max(quad, 0.0)) / lin)


def projective_step(b: Barrier, c, x_i, lambda_bar: float) -> np.ndarray:
    """Point ``x_f`` at hyperbolic distance ``lambda_bar`` whose model dual variable is ``kappa c``.

    With ``g = f'(x_i)``, ``G = G(x_i)``, ``a = g^T G^-1 g`` and ``eta = tanh^2 lambda_bar``
    the step is ``x_f - x_i = -zeta (r G^-1 c + G^-1 g)``, where ``r`` solves the
    homogeneous distance equation ``r^2 c^T G^-1 c + 2 r c^T G^-1 g + a - eta = 0`` and
    ``zeta = 1 - <g, x_f - x_i> = 1 / (1 - a - r c^T G^-1 g)``.  The usual
    parametrization by ``upsilon = r zeta`` divides by ``1 - a``, which vanishes
    near vertices of polytopes; this one does not.  Relative to the origin
    ``x_i`` the model dual variable at ``x_f`` is ``r c``, so among the roots with
    ``zeta > 0`` (``x_f`` in the component of the model domain containing
    ``x_i``) the one with the largest ``r`` is the forward target.
    """
    x_i = b._require_interior(x_i)
    c = as_vector(c, b.dim, "c")
    if not lambda_bar > 0.0:
        raise DomainError("lambda_bar must be positive")
    _, g, H = b.evaluate(x_i)
    G = affine_metric(g, H)
    u = _newton_system(G, g)
    v = _newton_system(G, c)
    a = float(g @ u)
    cc = float(c @ v)
    cg = float(c @ u)
    eta = math.tanh(lambda_bar) ** 2
    if cc == 0.0:
        # pure centering: jump to the model minimizer
        if not 1.0 - a > 0.0:
            raise OutsideBijectionError("the model has no minimizer (1 - g^T G^-1 g <= 0)")
        return x_i - u / (1.0 - a)
    disc = cg * cg - cc * (a - eta)
    if disc < 0.0:
        raise InfeasibleStepError("the central path is out of reach at this distance")
    sq = math.sqrt(disc)
    qq = -(cg + math.copysign(sq, cg)) if cg != 0.0 else sq
    ratios = {qq / cc, (a - eta) / qq if qq != 0.0 else 0.0}
    best = None
    for r in ratios:
        den = 1.0 - a - r * cg
        if not den > 0.0:
            continue
        zeta = 1.0 / den
        if best is None or r > best[0]:
            best = (r, zeta)
    if best is None:
        raise InfeasibleStepError("no root of the step equation lands in the model domain")
    r, zeta = best
    return x_i - zeta * (r * v + u)


def lambda_under(lambda_bar: float, gamma: Union[float, Method]) -> float:
    """Bound on the decrement after a step started at decrement ``lambda_bar``.

    Returns ``inf`` where the bound is vacuous (for small ``gamma`` this happens
    just below :func:`lambda_bar_max`).
    """
    if gamma is AFFINE:
        if not 0.0 <= lambda_bar <= 1.0:
            raise DomainError("affine bound needs 0 <= lambda_bar <= 1")
        return 4.0 - lambda_bar ** 2 - 4.0 * math.sqrt(1.0 - lambda_bar ** 2)
    gamma = float(gamma)
    if gamma < 0.0 or lambda_bar < 0.0:
        raise DomainError("gamma and lambda_bar must be nonnegative")
    t2 = math.tanh(lambda_bar) ** 2
    sech2 = 1.0 / math.cosh(lambda_bar) ** 2
    rad = sech2 * sech2 - gamma * gamma * t2
    if rad < 0.0:
        raise DomainError(f"lambda_bar={lambda_bar!r} exceeds the admissible range for gamma={gamma!r}")
    num = 4.0 * gamma - gamma ** 3 * t2 - 4.0 * gamma * math.sqrt(rad)
    arg = num / ((gamma * gamma + 4.0) * sech2)
    if arg >= 1.0:
        # near the end of the range the decrement escapes in finite time: no bound
        return math.inf
    return math.atanh(arg)


def lambda_bar_max(gamma: Union[float, Method]) -> float:
    """Largest ``lambda_bar`` for which :func:`lambda_under` is defined."""
    if gamma is AFFINE:
        return 1.0
    gamma = float(gamma)
    if gamma == 0.0:
        return math.inf
    return math.atanh((-gamma + math.sqrt(gamma * gamma + 4.0)) / 2.0)


def optimal_lambda(gamma: Union[float, Method], tol: float = 1e-10):
    """Maximize ``lambda_bar - lambda_under(lambda_bar)``; returns ``(lambda_star, lambda_low)``.

    For ``gamma = 0`` the bound vanishes identically and the optimum is ``(inf, 0)``.
    """
    if gamma is not AFFINE and float(gamma) == 0.0:
        return math.inf, 0.0
    hi = lambda_bar_max(gamma)
    lo = 0.0

    def gain(lam):
        return lam - lambda_under(lam, gamma)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = gain(x1), gain(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = gain(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = gain(x1)
    lam = 0.5 * (lo + hi)
    return lam, lambda_under(lam, gamma)


@dataclass
class ProblemInstance:
    """``min <c, x>`` over the domain of ``barrier``."""

    barrier: Barrier
    c: np.ndarray
    x0: Optional[np.ndarray] = None
    optimum: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        self.c = as_vector(self.c, self.barrier.dim, "objective")
        if self.x0 is not None:
            self.x0 = as_vector(self.x0, self.barrier.dim, "x0")
            if not self.barrier.contains(self.x0):
                raise NotInteriorError("x0 is not interior")

    def start(self) -> np.ndarray:
        return self.barrier.witness.copy() if self.x0 is None else self.x0.copy()


@dataclass
class SolverRecord:
    iteration: int
    x: np.ndarray
    objective: float
    decrement: float
    step_distance: float
    tau_estimate: float
    gap_bound: float
    phase: str = "path"
    pre_decrement: float = math.nan


@dataclass
class SolverTrace:
    method: Method
    records: List[SolverRecord] = field(default_factory=list)
    lambda_bar: float = math.nan
    lambda_low: float = math.nan
    converged: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return self.records[-1].x

    @property
    def objective(self) -> float:
        return self.records[-1].objective

    @property
    def gap_bound(self) -> float:
        return self.records[-1].gap_bound

    @property
    def iterations(self) -> int:
        return sum(1 for r in self.records if r.phase == "path")


def _gap(F: Barrier, c, x):
    if not np.any(c):
        return 0.0, math.inf, affine_decrement(F, c, 0.0, x)
    t = tau_hat(F, c, x)
    gap = F.nu / t if t > 0.0 else math.inf
    return t, gap, affine_decrement(F, c, max(t, 0.0), x)


def _record(trace, F, c, x, step_distance, phase, pre=math.nan, decrement=None):
    t, gap, rho = _gap(F, c, x)
    trace.records.append(SolverRecord(
        iteration=len(trace.records), x=x.copy(), objective=float(c @ x),
        decrement=rho if decrement is None else decrement, step_distance=step_distance,
        tau_estimate=t, gap_bound=gap, phase=phase, pre_decrement=pre))
    return gap


def _largest_tau(F: Barrier, c, x, target: float) -> float:
    """Largest ``tau`` with ``rho_tau(x) = target`` (a quadratic equation in ``tau``)."""
    _, g, H = F.evaluate(x)
    Hc = _newton_system(H, c)
    a = float(c @ Hc)
    bq = float(g @ Hc)
    d = float(g @ _newton_system(H, g)) - target * target
    disc = bq * bq - a * d
    if disc < 0.0:
        raise InfeasibleStepError("no tau reaches the requested decrement")
    return (-bq + math.sqrt(disc)) / a


def solve(prob: ProblemInstance, method: Method = PROJECTIVE, eps: float = 1e-6,
          max_iter: int = MAX_ITER, lambda_bar: Optional[float] = None) -> SolverTrace:
    """Run the short-step method until the gap estimate ``nu / tau_hat`` is at most ``eps``.

    Both methods start from the analytic center (computed from ``prob.x0`` or
    the barrier witness).  ``tau_hat`` is the least-squares estimate of the
    path parameter at the current iterate.
    """
    b = prob.barrier
    c = prob.c
    from .barriers import affine_barrier

    F = affine_barrier(b)
    trace = SolverTrace(method=method)
    if method is AFFINE:
        lam_bar, lam_low = optimal_lambda(AFFINE)
    else:
        lam_bar, lam_low = optimal_lambda(b.gamma)
        if not math.isfinite(lam_bar):
            lam_bar = LAMBDA_CAP
            trace.notes.append(f"gamma = 0: step length capped at {LAMBDA_CAP}")
    if lambda_bar is not None:
        lam_bar = float(lambda_bar)
    trace.lambda_bar, trace.lambda_low = lam_bar, lam_low
    x = analytic_center(b, prob.start())
    _record(trace, F, c, x, 0.0, "center")
    if not np.any(c):
        trace.converged = True
        trace.notes.append("c = 0: pure centering")
        return trace

    for _ in range(max_iter):
        if method is AFFINE:
            tau = _largest_tau(F, c, x, lam_bar)
            x_new = affine_newton_step(F, c, tau, x)
            if not b.contains(x_new):
                raise InfeasibleStepError("Newton step left the domain")
            _, _, H = F.evaluate(x)
            dist = math.sqrt(float((x_new - x) @ H @ (x_new - x)))
            post = affine_decrement(F, c, tau, x_new)
            x = x_new
            gap = _record(trace, F, c, x, dist, "path", pre=lam_bar, decrement=post)
        else:
            step_len = lam_bar
            for _ in range(60):
                x_new = projective_step(b, c, x, step_len)
                if b.contains(x_new):
                    break
                step_len *= 0.5
                trace.notes.append(f"iteration {len(trace.records)}: step halved to {step_len:.6g}")
            else:
                raise InfeasibleStepError("projective step cannot stay in the domain")
            dist = hyperbolic_distance(b, x, x_new)
            x = x_new
            gap = _record(trace, F, c, x, dist, "path")
        if gap <= eps:
            trace.converged = True
            return trace
    raise NonConvergenceError(f"no convergence within {max_iter} iterations", trace=trace)
