"""Iterated ball-averaging solver for boundary value problems.

The package discretizes the restricted averaging operator (ball averages
with a position-dependent radius, boundary values pinned) on a lattice and
iterates it to the harmonic extension of the boundary data. Geometry,
fields, the averaging operator, the iteration driver, analytic reference
solutions and a config-driven CLI each live in their own module.
"""

from __future__ import annotations

from ._backend import backend_name
from .averaging import (BOUNDARY_CONSISTENT, REDISTRIBUTE, BallStencil,
                        QuadratureSpec, RadiusSpec, SigmaOperator,
                        adjacent_pairs, apply_sigma, ball_volume,
                        build_operator, build_stencil, sigma_lipschitz_probe)
from .expressions import ExpressionError, compile_expression, point_function
from .field import (BoundaryData, GridField, field_from_csv, read_csv,
                    sup_diff, sup_norm, write_csv, write_pgm)
from .geometry import (BOUNDARY, CONVEX_ONLY, EXTERIOR, INTERIOR, NONCONVEX,
                       STRONGLY_CONVEX, DomainSpec, GridSpec, NodeMask,
                       boundary_parameter, boundary_perimeter,
                       boundary_projection, build_mask, classify_convexity,
                       contains_ball, signed_distance)
from .iteration import (CONVERGED, MAX_ITER, STALLED, BarrierMonitor,
                        IterationReport, Monitors, StopRule,
                        fixed_point_residual, run)
from .oracles import (BarrierConstant, BarrierFunction, HullRefusal,
                      HullWitness, OracleSolution, SandwichCheck, barrier,
                      barrier_constant, bump, check_barrier_sandwich,
                      fundamental_shifted, graph_samples, harmonic_poly,
                      hull_membership, hull_membership_bruteforce,
                      laplacian_fd, linear_1d, poisson_solution,
                      random_interior_points)

__version__ = "1.0.0"

__all__ = [
    "BOUNDARY", "BOUNDARY_CONSISTENT", "BallStencil", "BarrierConstant",
    "BarrierFunction", "BarrierMonitor", "BoundaryData", "CONVERGED",
    "CONVEX_ONLY", "DomainSpec", "EXTERIOR", "ExpressionError", "GridField",
    "GridSpec", "HullRefusal", "HullWitness", "INTERIOR", "IterationReport",
    "MAX_ITER", "Monitors", "NONCONVEX", "NodeMask", "OracleSolution",
    "QuadratureSpec", "REDISTRIBUTE", "RadiusSpec", "STALLED",
    "STRONGLY_CONVEX", "SandwichCheck", "SigmaOperator", "StopRule",
    "adjacent_pairs", "apply_sigma", "backend_name", "ball_volume",
    "barrier", "barrier_constant", "boundary_parameter",
    "boundary_perimeter", "boundary_projection", "build_mask",
    "build_operator", "build_stencil", "bump", "check_barrier_sandwich",
    "classify_convexity", "compile_expression", "contains_ball",
    "field_from_csv", "fixed_point_residual", "fundamental_shifted",
    "graph_samples", "harmonic_poly", "hull_membership",
    "hull_membership_bruteforce", "laplacian_fd", "linear_1d",
    "point_function", "poisson_solution", "random_interior_points",
    "read_csv", "run", "sigma_lipschitz_probe", "signed_distance",
    "sup_diff", "sup_norm", "write_csv", "write_pgm",
]
