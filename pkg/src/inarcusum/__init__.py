"""Change-point detection for integer-valued autoregressive (INAR) count series."""

__version__ = "0.1.0"

from .changepoint import (
    AlternativeQuantities,
    ChangePointEstimate,
    ScanKind,
    alternative_quantities,
    changepoint_scan,
    empirical_moment_matrix,
    estimate_changepoint,
    plugin_alternative_quantities,
    psi_alpha,
    psi_mu,
    theta_tilde,
)
from .cusum import (
    CusumPath,
    TestConfig,
    TestKind,
    TestReport,
    alpha_star,
    critical_value,
    cusum_path,
    evaluate_fit,
    run_test,
    statistic,
    tail_probability,
)
from .estimate import (
    EstimationResult,
    cls_estimate,
    information_matrix,
    inverse_sqrt,
    residuals,
    sigma2_estimate,
)
from .estimator import InarCusumDetector
from .exceptions import InarError, NotPositiveDefinite, SingularDesign, UnstableModel
from .model import (
    ChangeSpec,
    InarModel,
    InnovationSpec,
    ObservationSeries,
    companion_matrix,
    moment_matrix_C,
    simulate,
    simulate_with_change,
    stationary_moments,
)

__all__ = [
    "AlternativeQuantities",
    "ChangePointEstimate",
    "ChangeSpec",
    "CusumPath",
    "EstimationResult",
    "InarCusumDetector",
    "InarError",
    "InarModel",
    "InnovationSpec",
    "NotPositiveDefinite",
    "ObservationSeries",
    "ScanKind",
    "SingularDesign",
    "TestConfig",
    "TestKind",
    "TestReport",
    "UnstableModel",
    "alpha_star",
    "alternative_quantities",
    "changepoint_scan",
    "cls_estimate",
    "companion_matrix",
    "critical_value",
    "cusum_path",
    "empirical_moment_matrix",
    "estimate_changepoint",
    "evaluate_fit",
    "information_matrix",
    "inverse_sqrt",
    "moment_matrix_C",
    "plugin_alternative_quantities",
    "psi_alpha",
    "psi_mu",
    "residuals",
    "run_test",
    "sigma2_estimate",
    "simulate",
    "simulate_with_change",
    "stationary_moments",
    "statistic",
    "tail_probability",
    "theta_tilde",
]
