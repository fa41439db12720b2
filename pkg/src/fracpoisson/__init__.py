"""Solver and benchmark suite for the spectral fractional Poisson problem.

The operator (-Laplace)^s on the unit disc, square or cube is treated
through its extension to a weighted integer-order problem on the extruded
cylinder: finite elements in the domain direction, an eigenvalue-indexed
spectral basis in the extruded direction, and quasi-optimal linear algebra
via multigrid-preconditioned CG over the distinct spectral shifts.
"""

from .errors import (
    AssemblyError,
    ConfigurationError,
    DataError,
    DomainError,
    IllConditionedBasisError,
    NonConvergenceError,
    NumericalError,
    TruncationError,
    UnsupportedConfigurationError,
)
from .extension import FractionalParams, SpectralFactorization, energy_loss
from .mesh import Mesh, MeshHierarchy, build_hierarchy, build_initial, refine_uniform
from .fem import FeSpace, build_space, assemble_mass, assemble_stiffness, assemble_load
from .mgsolve import MgHierarchy, build_mg, pcg_solve
from .spectrum import SpectrumApprox, weyl_eigenvalue, choose_mode_count, decimate
from .solver import ProblemSpec, Solution, SolveContext, SolveReport, builtin_rhs, solve
from .verify import SeriesValue, energy, h1alpha_error, kron_oracle_solve

__version__ = "0.1.0"
