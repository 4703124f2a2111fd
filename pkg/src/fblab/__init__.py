"""fblab: numerical laboratory for an unstable parabolic free-boundary problem."""

__version__ = "0.1.0"

from .grids import (DerivativeBundle, Grid, ParabolicCylinder, SpaceTimeField,
                    cylinder, finite_differences, restrict)
from .holder import HolderNorm, discrete_holder_norm, holder_norm_from_samples
from .solver import (LeastSolutionResult, RegularizationSchedule, f_eps,
                     check_time_monotonicity, least_solution, solve_regularized)

__all__ = [
    "Grid", "SpaceTimeField", "ParabolicCylinder", "DerivativeBundle",
    "cylinder", "finite_differences", "restrict",
    "HolderNorm", "discrete_holder_norm", "holder_norm_from_samples",
    "f_eps", "RegularizationSchedule", "LeastSolutionResult",
    "solve_regularized", "least_solution", "check_time_monotonicity",
    "__version__",
]
