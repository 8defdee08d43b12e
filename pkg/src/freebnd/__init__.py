"""Numerical toolkit for nonlocal obstacle problems and boundary regularity."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .functions import (Bump, ClosedForm, Constant, Gaussian, Grid, GridFunction, HalfSpacePower,  # noqa: F401
                        Polynomial, Product, RadialPower, Sum, closed_form_from_dict)
from .kernels import (HomogeneousKernel, QuadratureScheme, assemble_operator_matrix,  # noqa: F401
                      eval_operator, eval_operator_gradient_form, fractional_laplacian_constant)
from .geometry import (DiskTorsion, Domain, IntervalTorsion, PositivePower, RegularizedHalfLine,
                       d_power_form, RegularizedDistance, build_regularized_distance, d_power,  # noqa: F401
                       dist_to_boundary, torsion_solve)
from .obstacle import (FreeBoundaryPoint, ObstacleProblem, ObstacleSolution, classify_point,  # noqa: F401
                       compute_normal, differentiate_solution, extract_free_boundary, solve_obstacle)
from .regularity import (DsExpansion, HolderEstimate, estimate_holder, finite_difference,  # noqa: F401
                         fit_ds_expansion, quotient_regularity, verify_expansion_decay, verify_lds_decay,
                         cancellation_slope)
from .extension import (ExtensionField, fit_halfline_profile, geometric_heights, neumann_trace,
                        poisson_extend)  # noqa: F401
from .lcp import lemke, obstacle_oracle  # noqa: F401
from .io import load_grid_function, save_grid_function  # noqa: F401
