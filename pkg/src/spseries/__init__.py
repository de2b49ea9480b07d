"""Closed-form spectral power series solutions for quadratic ODE systems.

Solves ``xdot = diag(x)(b + A x)`` as ``x_i(t) = sum_n alpha_i^n
e^{(n . lam) t}`` over multi-indices n, with constructive convergence
certificates, initial-condition fitting, a reference integrator, and
corrected reduced models.
"""
from .bounds import (
    ConvergenceCertificate,
    certificate,
    compute_K,
    compute_N0,
    compute_N1,
    delta_grid_report,
    spectral_norm,
)
from .errors import SPSError
from .fit import FitResult, fit_sum, fit_tail_limits, recommended_tail_truncation
from .logistic import (
    LogisticParams,
    as_quadratic_system,
    closed_form,
    series_coefficients,
    series_value,
    t0_exact,
    t0_unclamped,
)
from .model import (
    QuadraticSystem,
    TruncationSpec,
    emit,
    parse_document,
    parse_system,
    validate,
)
from .oracle import Trajectory, integrate, trajectory_csv
from .reduction import (
    ReducedModel,
    correct_delta,
    correct_gamma,
    corrected_system,
    partial,
    reduce_system,
    reduction_report,
)
from .series import (
    CoefficientTensor,
    build_coefficients,
    build_up_to,
    coefficients_csv,
    convolution_S,
    enumerate_indices,
    evaluate,
    evaluate_derivative,
    next_coefficient,
    residual_spectrum,
    scale_free_parameters,
    total_degree,
)
from .spectral import (
    SpectralData,
    analyze,
    equilibrium,
    kernel_direction,
    linearization,
    resonance_check,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientTensor",
    "ConvergenceCertificate",
    "FitResult",
    "LogisticParams",
    "QuadraticSystem",
    "ReducedModel",
    "SPSError",
    "SpectralData",
    "Trajectory",
    "TruncationSpec",
    "analyze",
    "as_quadratic_system",
    "build_coefficients",
    "build_up_to",
    "certificate",
    "closed_form",
    "coefficients_csv",
    "compute_K",
    "compute_N0",
    "compute_N1",
    "convolution_S",
    "correct_delta",
    "correct_gamma",
    "corrected_system",
    "delta_grid_report",
    "emit",
    "enumerate_indices",
    "equilibrium",
    "evaluate",
    "evaluate_derivative",
    "fit_sum",
    "fit_tail_limits",
    "integrate",
    "kernel_direction",
    "linearization",
    "next_coefficient",
    "parse_document",
    "parse_system",
    "partial",
    "recommended_tail_truncation",
    "reduce_system",
    "reduction_report",
    "resonance_check",
    "residual_spectrum",
    "scale_free_parameters",
    "series_coefficients",
    "series_value",
    "spectral_norm",
    "spectrum",
    "t0_exact",
    "t0_unclamped",
    "total_degree",
    "trajectory_csv",
    "validate",
]
