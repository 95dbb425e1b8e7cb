"""Lattice solver and verification suite for a 4D abelian spinor-curvature model."""

from ._backend import backend_name
from .bounds import (
    CubicSolution,
    PhiBoundReport,
    RegularityReport,
    cubic_bound,
    cubic_solve,
    largest_positive_root,
    phi_bound_check,
    regularity_report,
)
from .config import RunConfig, parse_keyvalues
from .errors import (
    AbortedRunError,
    FieldFormatError,
    GaugeFixFailedError,
    InvalidDomainError,
    MismatchError,
    OutOfSectorError,
    ParameterError,
    SwLatticeError,
)
from .fields import (
    covariant_derivative,
    covariant_derivative_transpose,
    curvature,
    gauge_current,
    gauge_field,
    laplacian,
    phi_op,
    phi_star,
    spinor_field,
)
from .functional import (
    EnergyBreakdown,
    operator_gradient,
    sw_energy,
    sw_gradient,
)
from .gauge import (
    CoulombReport,
    RatioStats,
    apply_gauge,
    coercivity_report,
    coulomb_fix,
    uhlenbeck_estimate,
)
from .io import (
    peek_header,
    read_boundary,
    read_field,
    write_boundary,
    write_field,
)
from .lattice import (
    COMBOS,
    Form,
    LatticeDomain,
    boundary_defect,
    build_domain,
    codifferential,
    d,
    d_transpose,
    inner_product,
    lp_norm,
    sobolev_norm,
)
from .refine import STUDY_NAMES, StudyResult, refine_study
from .solver import (
    BoundaryData,
    HConditionReport,
    ResidualNorms,
    Solution,
    SolverConfig,
    SourcePair,
    TraceRow,
    h_condition_monitor,
    manufacture,
    residual,
    solve,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AbortedRunError",
    "BoundaryData",
    "COMBOS",
    "CoulombReport",
    "CubicSolution",
    "EnergyBreakdown",
    "FieldFormatError",
    "Form",
    "GaugeFixFailedError",
    "HConditionReport",
    "InvalidDomainError",
    "LatticeDomain",
    "MismatchError",
    "OutOfSectorError",
    "ParameterError",
    "PhiBoundReport",
    "RatioStats",
    "RegularityReport",
    "ResidualNorms",
    "RunConfig",
    "STUDY_NAMES",
    "Solution",
    "SolverConfig",
    "SourcePair",
    "StudyResult",
    "SwLatticeError",
    "TraceRow",
    "apply_gauge",
    "backend_name",
    "boundary_defect",
    "build_domain",
    "codifferential",
    "coercivity_report",
    "coulomb_fix",
    "covariant_derivative",
    "covariant_derivative_transpose",
    "cubic_bound",
    "cubic_solve",
    "curvature",
    "d",
    "d_transpose",
    "gauge_current",
    "gauge_field",
    "h_condition_monitor",
    "laplacian",
    "inner_product",
    "largest_positive_root",
    "lp_norm",
    "manufacture",
    "operator_gradient",
    "parse_keyvalues",
    "peek_header",
    "phi_bound_check",
    "phi_op",
    "phi_star",
    "read_boundary",
    "read_field",
    "refine_study",
    "regularity_report",
    "residual",
    "sobolev_norm",
    "solve",
    "spinor_field",
    "sw_energy",
    "sw_gradient",
    "uhlenbeck_estimate",
    "write_boundary",
    "write_field",
    "write_trace_csv",
    "__version__",
]
