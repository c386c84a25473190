"""Blind functional deconvolution of periodic bivariate functions by wavelet thresholding."""

from .blind_deconv import (ConfigError, Diagnostics, EstimatorConfig, RateParams, RateResult,
                           estimate, estimate_known_kernel, estimate_levels, rate_exponent,
                           select_J, select_Jprime, truncate_kernel)
from .experiment import ExperimentSpec, MiseReport, oracle_J_search, run_benchmark
from .signal_core import DimensionError, RowSpectrum, SampledField, dft_rows, idft_rows

__all__ = [
    "ConfigError", "Diagnostics", "DimensionError", "EstimatorConfig", "ExperimentSpec",
    "MiseReport", "RateParams", "RateResult", "RowSpectrum", "SampledField", "dft_rows",
    "estimate", "estimate_known_kernel", "estimate_levels", "idft_rows", "oracle_J_search",
    "rate_exponent", "run_benchmark", "select_J", "select_Jprime", "truncate_kernel",
]
