"""Q1 finite elements: assembly, Dirichlet solves, functionals and discrete norms."""

from .assembly import CoercivityCheck, LinearSystem, assemble, check_coercivity, dirichlet_form
from .field import CellSamples, DiscreteField, export_field, read_field
from .functionals import (LinearFunctional, averaged_indicator_rhs, ball_average, load_rhs,
                          point_functional, stack_vectors)
from .norms import (DistributionFunction, ball_samples, boundary_poincare_ratio, caccioppoli_ratio,
                    distribution_function, exterior_density, grad_l2, grad_lp, holder_seminorm,
                    lp_norm, y12_norm)
from .solve import (SolveInfo, SolverSettings, boundary_vector, gmres_jacobi, pcg, solve_dirichlet,
                    solve_many)

__all__ = [
    "CellSamples", "CoercivityCheck", "DiscreteField", "DistributionFunction", "LinearFunctional",
    "LinearSystem", "SolveInfo", "SolverSettings", "assemble", "averaged_indicator_rhs",
    "ball_average", "ball_samples", "boundary_poincare_ratio", "boundary_vector", "caccioppoli_ratio",
    "check_coercivity", "dirichlet_form", "distribution_function", "export_field",
    "exterior_density", "gmres_jacobi", "grad_l2", "grad_lp", "holder_seminorm", "load_rhs",
    "lp_norm", "pcg", "point_functional", "read_field", "solve_dirichlet", "solve_many",
    "stack_vectors", "y12_norm",
]
