"""Bundled barriers and the linear-programming test suite."""
from __future__ import annotations

from typing import Dict, List

import numpy as np
from scipy.optimize import linprog

from .barriers import (box, direct_product, exp_epigraph, interval, polyhedral, power_epigraph,
                       simplex, spectrahedral)
from .core import Barrier
from .ipm import ProblemInstance


def disk() -> Barrier:
    """Unit disk as the 2x2 spectrahedron ``[[1 + x, y], [y, 1 - x]] >= 0``."""
    return spectrahedral([np.eye(2), np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])])


def ball3() -> Barrier:
    """3x3 spectrahedron ``[[1 + x, y, z], [y, 1 - x, 0], [z, 0, 1]] >= 0`` in ``R^3``."""
    e = np.zeros((3, 3))
    A1, A2, A3 = e.copy(), e.copy(), e.copy()
    A1[0, 0], A1[1, 1] = 1.0, -1.0
    A2[0, 1] = A2[1, 0] = 1.0
    A3[0, 2] = A3[2, 0] = 1.0
    return spectrahedral([np.eye(3), A1, A2, A3])


def triangle() -> Barrier:
    return simplex(2)


def bundled_barriers() -> Dict[str, Barrier]:
    """Every concrete barrier family shipped with the package, at small sizes."""
    return {
        "interval": interval(),
        "box2": box(2),
        "triangle": simplex(2),
        "simplex3": simplex(3),
        "simplex4": simplex(4),
        "spectrahedron2": disk(),
        "spectrahedron3": ball3(),
        "exp_epigraph": exp_epigraph(),
        "power1.5": power_epigraph(1.5),
        "power2": power_epigraph(2.0),
        "power3": power_epigraph(3.0),
    }


def planar_barriers() -> Dict[str, Barrier]:
    """Two-dimensional instances used for the region nesting checks."""
    rng = np.random.default_rng(7)
    return {
        "triangle": simplex(2),
        "box2": box(2),
        "pentagon": random_polytope(2, 5, rng),
        "spectrahedron2": disk(),
        "exp_epigraph": exp_epigraph(),
        "power1.5": power_epigraph(1.5),
        "power2": power_epigraph(2.0),
        "power3": power_epigraph(3.0),
        "interval_product": direct_product(interval(), interval()),
    }


def random_polytope(n: int, extra: int, rng) -> Barrier:
    """``extra`` random half-spaces containing the origin, intersected with ``[-2, 2]^n``."""
    A = rng.standard_normal((extra, n))
    b = rng.uniform(0.5, 1.5, extra)
    eye = np.eye(n)
    return polyhedral(np.vstack([A, eye, -eye]), np.r_[b, 2.0 * np.ones(2 * n)])


def lp_optimum(b: Barrier, c) -> float:
    """Optimal value of ``min <c, x>`` over a polyhedral barrier's domain."""
    res = linprog(np.asarray(c, dtype=float), A_ub=b.A, b_ub=b.b,
                  bounds=[(None, None)] * b.dim, method="highs")
    if res.status != 0:
        raise ValueError(f"reference LP failed: {res.message}")
    return float(res.fun)


def _problem(name: str, b: Barrier, c) -> ProblemInstance:
    return ProblemInstance(barrier=b, c=np.asarray(c, dtype=float), optimum=lp_optimum(b, c), name=name)


def lp_suite(seed: int = 2024) -> List[ProblemInstance]:
    """Ten bounded LPs: intervals, boxes, triangles, simplices and random polytopes."""
    rng = np.random.default_rng(seed)
    probs = [
        _problem("interval", interval(), [1.0]),
        _problem("interval_wide", interval(-1.0, 3.0), [-1.0]),
        _problem("box2", box(2), [1.0, 1.0]),
        _problem("box3", box(3), [1.0, -2.0, 0.5]),
        _problem("triangle", simplex(2), [-1.0, 0.0]),
        _problem("triangle_skew", simplex(2), [0.3, -0.7]),
        _problem("simplex4", simplex(4), [1.0, -1.0, 0.5, -0.25]),
    ]
    for n in (4, 5, 6):
        b = random_polytope(n, 2 * n, rng)
        probs.append(_problem(f"random{n}", b, rng.standard_normal(n)))
    return probs
