"""Sinc-quadrature finite element solvers for the space-time fractional
diffusion equation :math:`\\partial_t^\\gamma u + L^\\beta u = f`."""

from fracsinc.fem import (
    ComplexField,
    FemResourceError,
    FemSystem,
    ShiftedSolveError,
    build_system,
    error_norms,
    l2_norm,
    l2_project,
    load_vector,
    shifted_solve,
)
from fracsinc.mittag_leffler import (
    FractionalParams,
    MittagLefflerAccuracyWarning,
    gamma_fn,
    mittag_leffler,
    ml,
)
from fracsinc.sinc import (
    ContourConfig,
    RealifyError,
    interval_average_apply,
    propagate_homogeneous,
    realify,
    sinc_grid,
)
from fracsinc.timeconv import (
    GeometricPartition,
    TabulatedForcing,
    geometric_partition,
    midpoint_loads,
    solve_full,
    solve_nonhomogeneous,
    uniform_partition,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "ContourConfig",
    "FemResourceError",
    "FemSystem",
    "FractionalParams",
    "GeometricPartition",
    "MittagLefflerAccuracyWarning",
    "RealifyError",
    "ShiftedSolveError",
    "TabulatedForcing",
    "build_system",
    "error_norms",
    "gamma_fn",
    "geometric_partition",
    "interval_average_apply",
    "l2_norm",
    "l2_project",
    "load_vector",
    "midpoint_loads",
    "mittag_leffler",
    "ml",
    "propagate_homogeneous",
    "realify",
    "shifted_solve",
    "sinc_grid",
    "solve_full",
    "solve_nonhomogeneous",
    "uniform_partition",
]
