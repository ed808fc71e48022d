"""Projectively self-concordant barriers: evaluation, geometry, duality and path following."""
from .core import (Barrier, BarrierParams, LocalGeometry, affine_metric, cubic_form_matrix,
                   cubic_form_value, gamma_from_nu, jarre_constants, local_geometry, nu_from_gamma)
from .barriers import (affine_section, box, conic_lift, direct_product, exp_epigraph, interval,
                       polyhedral, power_epigraph, projective_image, simplex, spectrahedral)
from .duality import dual_barrier, dual_point, dual_value
from .geometry import ConvexSetOracle, RegionKind, boundary_query, envelopes_1d, region_contains
from .ipm import AFFINE, PROJECTIVE, ProblemInstance, SolverTrace, optimal_lambda, solve
from .verify import estimate_gamma, verify_lift_equivalence

__version__ = "0.1.0"

__all__ = [
    "Barrier", "BarrierParams", "LocalGeometry", "affine_metric", "cubic_form_matrix",
    "cubic_form_value", "gamma_from_nu", "jarre_constants", "local_geometry", "nu_from_gamma",
    "affine_section", "box", "conic_lift", "direct_product", "exp_epigraph", "interval",
    "polyhedral", "power_epigraph", "projective_image", "simplex", "spectrahedral",
    "dual_barrier", "dual_point", "dual_value", "ConvexSetOracle", "RegionKind",
    "boundary_query", "envelopes_1d", "region_contains", "AFFINE", "PROJECTIVE",
    "ProblemInstance", "SolverTrace", "optimal_lambda", "solve", "estimate_gamma",
    "verify_lift_equivalence",
]
