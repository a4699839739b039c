"""Limit laws of U-max / U-min statistics for rotation-invariant kernels on the circle."""

from .density import (
    DensitySpec,
    Mixture,
    Tabulated,
    Uniform,
    VonMises,
    density_eval,
    product_integral,
    sample_angle,
    sample_angles,
)
from .errors import (
    B3Violation,
    BoundaryMaximum,
    ConditionError,
    ConfigError,
    ConsistencyError,
    DegenerateHessian,
    DegreeError,
    DomainError,
    FamilyError,
    ModeMismatch,
    UmaxError,
    UndefinedTauError,
    ValidationError,
)
from .extremum import (
    HessianReport,
    MaxAnalysis,
    det_neg_hessian_gapsum,
    find_max_oracle,
    hessian_fd,
    pairwise_hessian,
    regular_polygon_analysis,
    tridiagonal_det,
    validate_conditions,
)
from .kernels import (
    AngleTuple,
    CirclePoint,
    GFunction,
    KernelSpec,
    central_angles,
    eval_kernel,
    eval_on_points,
    g_second_derivative,
)
from .limit_law import (
    LimitLaw,
    limit_cdf,
    limit_constant_gapsum,
    limit_constant_general,
    rescale,
)
from .simulator import (
    EmpiricalCDF,
    SimulationConfig,
    SimulationResult,
    run_replicates,
    tail_probability,
    u_statistic,
    umax_bruteforce,
    umax_gapsum_dp,
)

__version__ = "0.1.0"
