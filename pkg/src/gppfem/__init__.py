"""Relaxation Crank-Nicolson finite elements for the coupled
Gross-Pitaevskii-Poisson system on periodic meshes."""

from .diagnostics import DiagnosticsRecord, discrete_energy, discrete_mass, l2_error, rate_table
from .fem import (
    FeSpace,
    Field,
    QuadratureRule,
    build_space,
    default_quadrature,
    evaluate,
    field_mean,
    l2_project,
)
from .linalg import CompatibilityError, SolverFailure
from .mesh import Mesh, build_interval_mesh, build_rect_mesh
from .problems import ProblemSpec, catalog_get, residual_check
from .scheme import (
    ConfigError,
    Operators,
    Params,
    SchemeState,
    advance_wave,
    build_operators,
    initialize,
    relax_density,
    run,
    solve_potential,
    step,
)

__version__ = "0.1.0"
