"""Universal regularized operator method for composite monotone inclusions.

Curvature-driven smoothing of nonsmooth monotone vector fields, a
regularized proximal step with adaptive line search, and dual averaging
with computable accuracy certificates.
"""

from ._kernels import backend
from .curvature import (CurvatureProfile, EnvelopeSum, GrowthReport,
                        HolderEnvelope, LogOrthantMetric, NormedMetric,
                        SmoothedCurvature, check_quadratic_growth,
                        default_t_grid, gcb_estimate, holder_kappa_envelope,
                        holder_sigma_constant, holder_sigma_envelope,
                        pointwise_delta, profile_csv_rows, sigma_hat,
                        sigma_hat_inverse, sigma_hat_prime)
from .errors import (AssumptionViolatedError, DimensionMismatchError,
                     InnerSolveError, LineSearchStalledError,
                     MalformedSpecError, MetricCompatibilityError,
                     SamplingError, UnboundedLMOError, UromError)
from .solver import (Certificate, RunResult, SolverConfig, TelescopeReport,
                     check_telescoped_guarantee, default_M0, dual_step,
                     line_search_M, predicted_iterations, run, summary_dict,
                     trace_rows, update_certificate, write_trace_csv)
from .space import (Ball, Box, CompositeVI, EuclideanSpace, FeasibleSet,
                    OperatorOracle, ProductSet, Simplex, WholeSpace,
                    register_oracle, taylor_jacobian, taylor_model)
from .step import (InnerResult, MonotoneReport, ProgressReport, StepParams,
                   StepResult, alpha_from, c_p_constant,
                   check_subproblem_monotone, reduced_operator, solve_inner_vi,
                   solve_step, verify_progress)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolatedError", "Ball", "Box", "Certificate", "CompositeVI",
    "CurvatureProfile", "DimensionMismatchError", "EnvelopeSum",
    "EuclideanSpace", "FeasibleSet", "GrowthReport", "HolderEnvelope",
    "InnerResult", "InnerSolveError", "LineSearchStalledError",
    "LogOrthantMetric", "MalformedSpecError", "MetricCompatibilityError",
    "MonotoneReport", "NormedMetric", "OperatorOracle", "ProductSet",
    "ProgressReport", "RunResult", "SamplingError", "Simplex",
    "SmoothedCurvature", "SolverConfig", "StepParams", "StepResult",
    "TelescopeReport", "UnboundedLMOError", "UromError", "WholeSpace",
    "alpha_from", "backend", "c_p_constant", "check_quadratic_growth",
    "check_subproblem_monotone", "check_telescoped_guarantee", "default_M0",
    "default_t_grid", "dual_step", "gcb_estimate", "holder_kappa_envelope",
    "holder_sigma_constant", "holder_sigma_envelope", "line_search_M",
    "pointwise_delta", "predicted_iterations", "profile_csv_rows",
    "reduced_operator", "register_oracle", "run", "sigma_hat",
    "sigma_hat_inverse", "sigma_hat_prime", "solve_inner_vi", "solve_step",
    "summary_dict", "taylor_jacobian", "taylor_model", "trace_rows",
    "update_certificate", "verify_progress", "write_trace_csv",
]
