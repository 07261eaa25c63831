"""tensorcast: transaction-activity tensors, non-negative CP factorization,
and stochastic forecasting of the temporal factors."""

from ._kernels import BACKEND
from .calibrate import (
    CalibrationConfig,
    ModelParams,
    NormalityResult,
    RatioSeries,
    calibrate_all,
    calibrate_ou,
    ewma_correlation,
    historical_volatility,
    ratio_series,
    shapiro_lognormal_test,
)
from .cp import FactorSet, FitTrace, SolverConfig, extract_time_factor, nncp_decompose, reconstruct
from .errors import ConfigError, DataError, NumericalError
from .mc import (
    PathBundle,
    SimConfig,
    correlated_increment_check,
    simulate_coupled,
    simulate_gbm,
    simulate_ou,
)
from .payoff import DigitalReport, DigitalSpec, HorizonSplit, classify, digital_value, evaluate_horizons
from .shapiro import shapiro_wilk
from .tensor import (
    Tensor3,
    frobenius_norm,
    khatri_rao,
    kronecker,
    matricize,
    n_mode_product,
    refold,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CalibrationConfig",
    "ConfigError",
    "DataError",
    "DigitalReport",
    "DigitalSpec",
    "FactorSet",
    "FitTrace",
    "HorizonSplit",
    "ModelParams",
    "NormalityResult",
    "NumericalError",
    "PathBundle",
    "RatioSeries",
    "SimConfig",
    "SolverConfig",
    "Tensor3",
    "calibrate_all",
    "calibrate_ou",
    "classify",
    "correlated_increment_check",
    "digital_value",
    "evaluate_horizons",
    "ewma_correlation",
    "extract_time_factor",
    "frobenius_norm",
    "historical_volatility",
    "khatri_rao",
    "kronecker",
    "matricize",
    "n_mode_product",
    "nncp_decompose",
    "ratio_series",
    "reconstruct",
    "refold",
    "shapiro_lognormal_test",
    "shapiro_wilk",
    "simulate_coupled",
    "simulate_gbm",
    "simulate_ou",
]
