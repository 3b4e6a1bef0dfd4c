"""Numerical laboratory for the reduced radial Schrodinger equation.

The substitution u = r R turns the three-dimensional radial problem into
a one-dimensional equation u'' = f(r) u, but the reduction silently
plants a point source at the origin unless u(0) = 0.  This package makes
that subtlety executable: it classifies potentials by their origin
behaviour, computes the indicial exponents that govern u near r = 0,
measures the hidden point-source strength of any candidate solution
through shrinking flux spheres, and solves bound-state spectra under
competing origin boundary policies (Dirichlet, square-integrability,
self-adjoint-extension mixing) so their physical consequences can be
compared side by side.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, NumericalError, RadialisError,
                     RegimeRefusal, StateNotFound)
from .potentials import (Potential, PotentialClass, PotentialClassKind,
                         classify, coulomb, coulomb_plus_inverse_square,
                         evaluate, finite_well, harmonic, inverse_square,
                         make_builtin, power_law)
from .indicial import (AdmissibleSet, BoundaryPolicy, Dirichlet,
                       IndicialResult, Regime, SAEMixing,
                       SquareIntegrableOnly, admissible_behaviors,
                       indicial_exponents, policy_name)
from .numerics import (GridSpacing, RadialGrid, Trajectory, count_nodes,
                       count_sign_changes, log_derivative, numerov_propagate)
from .point_source import (DEFAULT_PROBE_RADII, DEFAULT_TOLERANCE,
                           ResidualReport, audit_eigenstate, audit_samples,
                           check_compatibility, point_source_strength,
                           surface_flux)
from .shooting import (Eigenstate, SolveRequest, SolveTolerances, effective_f,
                       energy_ratios, mismatch, near_origin_exponent,
                       origin_seed, request_indicial, solve_state, spectrum)

__all__ = [
    "__version__",
    "RadialisError", "ConfigError", "NumericalError", "RegimeRefusal",
    "StateNotFound",
    "Potential", "PotentialClass", "PotentialClassKind", "classify",
    "evaluate", "make_builtin", "coulomb", "harmonic", "inverse_square",
    "finite_well", "coulomb_plus_inverse_square", "power_law",
    "Regime", "BoundaryPolicy", "Dirichlet", "SquareIntegrableOnly",
    "SAEMixing", "IndicialResult", "AdmissibleSet", "indicial_exponents",
    "admissible_behaviors", "policy_name",
    "GridSpacing", "RadialGrid", "Trajectory", "numerov_propagate",
    "log_derivative", "count_nodes", "count_sign_changes",
    "DEFAULT_PROBE_RADII", "DEFAULT_TOLERANCE", "ResidualReport",
    "surface_flux", "point_source_strength", "check_compatibility",
    "audit_samples", "audit_eigenstate",
    "SolveRequest", "SolveTolerances", "Eigenstate", "effective_f",
    "origin_seed", "request_indicial", "mismatch", "solve_state", "spectrum",
    "energy_ratios", "near_origin_exponent",
]
