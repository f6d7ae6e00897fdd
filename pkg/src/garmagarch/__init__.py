"""Joint conditional mean/variance models for non-Gaussian time series.

A link-transformed series follows an ARMA recursion in its conditional mean
and a GARCH recursion in its conditional variance; the per-observation
distribution parameters are recovered from those two moments.  The package
covers filtering, likelihood and quasi-likelihood estimation, simulation,
Monte Carlo studies, residual diagnostics and stationarity verification.
"""

from .diagnostics import DiagnosticsReport, compute_diagnostics
from .engine import (
    FilterOutput,
    InitPolicy,
    Orders,
    ParamVector,
    filter_moments,
    filter_path,
    loglik,
)
from .estimate import (
    FitConfig,
    FitReport,
    fit,
    fit_gmle,
    fit_mle,
    fit_pseudo_ml,
    gaussian_objective_se,
    information_se,
)
from .exceptions import (
    ConfigError,
    DataError,
    DomainError,
    EstimationError,
    GarmaGarchError,
    NumericalError,
    SimulationError,
    StudyError,
)
from .families import Family, family_names, get_family
from .simulate import (
    StudyPreset,
    StudyResult,
    get_preset,
    preset_names,
    run_study,
    simulate_path,
)
from .stationarity import StationarityReport, check_stationarity

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DiagnosticsReport",
    "DomainError",
    "EstimationError",
    "Family",
    "FilterOutput",
    "FitConfig",
    "FitReport",
    "GarmaGarchError",
    "InitPolicy",
    "NumericalError",
    "Orders",
    "ParamVector",
    "SimulationError",
    "StationarityReport",
    "StudyError",
    "StudyPreset",
    "StudyResult",
    "check_stationarity",
    "compute_diagnostics",
    "family_names",
    "filter_moments",
    "filter_path",
    "fit",
    "fit_gmle",
    "fit_mle",
    "fit_pseudo_ml",
    "gaussian_objective_se",
    "get_family",
    "get_preset",
    "information_se",
    "loglik",
    "preset_names",
    "run_study",
    "simulate_path",
    "__version__",
]
