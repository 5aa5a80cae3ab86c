"""Constant mean curvature graphs in hyperbolic space: the Dirichlet problem
``div(Du/W) + (2/u)(1/W - H) = 0``, ``u = a`` on the boundary of a convex
planar domain, together with the closed-form radial caps and explicit bounds
used to check discrete solutions."""
from hypcmc.analysis import (THEOREM_IDS, CriticalPointSet, NodalSummary, PhiField, Slack,
                             TheoremReport, boundary_normal_residual, find_critical_points,
                             nodal_summary, phi, verify_all)
from hypcmc.closed_form import (BoundUndefinedError, NoCapError, RadialCap, bound_set,
                                existence_window, gradient_bound, lemma22_bound, radial_cap,
                                um_lower_bound, um_upper_bound)
from hypcmc.geometry import (DomainError, DomainSpec, Mesh, MeshBudgetError, disc, ellipse,
                             load_curve, make_domain, triangulate)
from hypcmc.kernels import BACKEND
from hypcmc.solver import (NonConvergenceError, SolutionField, SolverConfig, gradient_field,
                           residual, solve_dirichlet)

__all__ = [
    "BACKEND", "THEOREM_IDS", "BoundUndefinedError", "CriticalPointSet", "DomainError",
    "DomainSpec", "Mesh", "MeshBudgetError", "NoCapError", "NodalSummary", "NonConvergenceError",
    "PhiField", "RadialCap", "Slack", "SolutionField", "SolverConfig", "TheoremReport",
    "bound_set", "boundary_normal_residual", "disc", "ellipse", "existence_window",
    "find_critical_points", "gradient_bound", "gradient_field", "lemma22_bound", "load_curve",
    "make_domain", "nodal_summary", "phi", "radial_cap", "residual", "solve_dirichlet",
    "triangulate", "um_lower_bound", "um_upper_bound", "verify_all",
]
