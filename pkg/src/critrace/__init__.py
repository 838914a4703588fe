"""Numerics for critical Sobolev-trace problems with variable exponents."""
__version__ = "0.1.0"

from .errors import CritraceError, InputError, NumericalError
from .fields import ProblemConfig, TaylorModel, critical_trace_exponent, validate_config
from .fermi import GeometrySpec, curvature_data
from .extremal import BubbleParams, bubble_integral_table, trace_constant, trace_constant_closed_form
from .luxemburg import SampledField, luxemburg_norm, modular, sobolev_norm
from .expansions import ExpansionRegressor, direct_lhs, fit_expansion, verify_expansion
from .energy import energy_curve, f_coefficients, theorem42_verdict

__all__ = [
    "BubbleParams", "CritraceError", "ExpansionRegressor", "GeometrySpec", "InputError",
    "NumericalError", "ProblemConfig", "SampledField", "TaylorModel", "bubble_integral_table",
    "critical_trace_exponent", "curvature_data", "direct_lhs", "energy_curve", "f_coefficients",
    "fit_expansion", "luxemburg_norm", "modular", "sobolev_norm", "theorem42_verdict",
    "trace_constant", "trace_constant_closed_form", "validate_config", "verify_expansion",
]
