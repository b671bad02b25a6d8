"""Numerical toolkit for Lyapunov stability of compact sets under ODE flows."""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatchError,
    EscapedDomainError,
    EvalDomainError,
    ExprSyntaxError,
    LyapsetError,
    NondifferentiableError,
    OrbitUnboundedError,
    ProblemFormatError,
    StepLimitError,
)
from .expr import (
    ScalarFieldSpec,
    VectorFieldSpec,
    differentiate,
    eval_expr,
    eval_field,
    gradient,
    parse,
    print_expr,
)
from .flow import (
    IntegratorConfig,
    Trajectory,
    flow,
    iterate_orbit,
    partial_trajectory,
    sample_times,
    semigroup_defect,
    trajectory,
)
from .geometry import (
    Box,
    ClosedBall,
    CompactSet,
    FiniteSetApprox,
    PointCloud,
    ShellLocation,
    SinglePoint,
    distance_to_set,
    hausdorff,
    sample_set_points,
    sample_shell,
    set_from_json,
    shell_classify,
)
from .limits import (
    AttractionVerdict,
    OmegaEstimate,
    RoaGrid,
    classify_attraction,
    estimate_omega,
    omega_distance_decay,
    roa_grid,
)
from .lyapunov import (
    CertificateReport,
    ConverseConfig,
    ConversePropertyReport,
    ConverseTable,
    big_L,
    central_gradient,
    converse_table,
    ell,
    truncation_bound,
    verify_certificate,
    verify_converse_properties,
)
from .problem import ProblemDefinition, load_problem
from .stability import (
    EpsilonDeltaPair,
    StabilityReport,
    UniformTimeEstimate,
    check_positive_invariance,
    classify_stability,
    estimate_delta,
    uniform_attraction_time,
)

__all__ = [
    "AttractionVerdict",
    "Box",
    "CertificateReport",
    "ClosedBall",
    "CompactSet",
    "ConverseConfig",
    "ConversePropertyReport",
    "ConverseTable",
    "DimensionMismatchError",
    "EpsilonDeltaPair",
    "EscapedDomainError",
    "EvalDomainError",
    "ExprSyntaxError",
    "FiniteSetApprox",
    "IntegratorConfig",
    "LyapsetError",
    "NondifferentiableError",
    "OmegaEstimate",
    "OrbitUnboundedError",
    "PointCloud",
    "ProblemDefinition",
    "ProblemFormatError",
    "RoaGrid",
    "ScalarFieldSpec",
    "ShellLocation",
    "SinglePoint",
    "StabilityReport",
    "StepLimitError",
    "Trajectory",
    "UniformTimeEstimate",
    "VectorFieldSpec",
    "big_L",
    "central_gradient",
    "check_positive_invariance",
    "classify_attraction",
    "classify_stability",
    "converse_table",
    "differentiate",
    "distance_to_set",
    "ell",
    "estimate_delta",
    "estimate_omega",
    "eval_expr",
    "eval_field",
    "flow",
    "gradient",
    "hausdorff",
    "iterate_orbit",
    "load_problem",
    "omega_distance_decay",
    "parse",
    "partial_trajectory",
    "print_expr",
    "roa_grid",
    "sample_set_points",
    "sample_shell",
    "sample_times",
    "semigroup_defect",
    "set_from_json",
    "shell_classify",
    "trajectory",
    "truncation_bound",
    "uniform_attraction_time",
    "verify_certificate",
    "verify_converse_properties",
]
