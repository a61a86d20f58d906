"""Variational solver for the fractional (p,q)-Laplacian eigenvalue problem.

Computes principal eigenvalues with indefinite weights, the combined
existence threshold, and positive solutions above it via coercive
minimization and a numerical mountain-pass search, with brute-force
oracles for verification.
"""

from .domain import (
    BOUNDED_DOMAIN,
    WHOLE_SPACE,
    DomainGrid,
    FracParams,
    KernelMatrix,
    WeightField,
    build_grid,
    build_kernel,
    exterior_tail,
)
from .energy import (
    EnergyReport,
    evaluate_energies,
    evaluate_I,
    frac_laplacian_apply,
    grad_I,
    grad_J,
    seminorm_pow,
)
from .eigensolver import (
    EigResult,
    SimplicityReport,
    SolverOptions,
    ThresholdReport,
    check_min_formula,
    lambda_star,
    principal_single,
    rn_principal,
    simplicity_probe,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    InfeasibleWeightError,
    MinFormulaError,
    MonotonicityError,
    NoDescentDirectionError,
    ParameterError,
    RegimeError,
)
from .mountainpass import (
    CriticalPoint,
    GeometryEstimate,
    MountainPassPath,
    SweepRow,
    SweepTable,
    estimate_geometry,
    find_descent_endpoint,
    minimize_J,
    mountain_pass,
    sweep_lambda,
)
from .oracle import (
    InequalityReport,
    dense_linear_eig,
    fd_gradient,
    inequality_suite,
    quadratic_saddle,
    subspace_grid_search,
)
from .problem import (
    Problem,
    build_problem,
    decay_weight,
    weak_residual,
    weight_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
