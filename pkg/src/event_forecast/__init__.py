"""Prediction bounds for the number of future events among units still at risk.

Fit a log-location-scale lifetime model to censored (possibly staggered)
field data, then bound the count of events expected in a future window by
plug-in, calibration-bootstrap, direct-bootstrap or GPQ-bootstrap methods.
"""

__version__ = "0.1.0"

from .bootstrap import BootstrapRun, generate_replicates
from .data import CensoredDataset, Cohort, Observation, builtin, load_csv, read_csv, save_csv
from .distributions import LlsFamily, LlsParams
from .estimator import WithinSamplePredictor
from .exceptions import (BootstrapError, ConvergenceError, DataError, DegenerateRiskSetError,
                         DomainError, EstimabilityError, EventForecastError, StudyError)
from .likelihood import FitResult, conditional_prob, fit_mle, log_likelihood
from .prediction import (Bound, BoundSet, PredictionTask, PredictiveDistribution,
                         calibration_bounds, direct_bounds, gpq_bounds, gpq_transform,
                         plugin_bounds)

__all__ = [
    "BootstrapError", "BootstrapRun", "Bound", "BoundSet", "CensoredDataset", "Cohort",
    "ConvergenceError", "DataError", "DegenerateRiskSetError", "DomainError",
    "EstimabilityError", "EventForecastError", "FitResult", "LlsFamily", "LlsParams",
    "Observation", "PredictionTask", "PredictiveDistribution", "StudyError",
    "WithinSamplePredictor", "builtin", "calibration_bounds", "conditional_prob",
    "direct_bounds", "fit_mle", "generate_replicates", "gpq_bounds", "gpq_transform",
    "load_csv", "log_likelihood", "plugin_bounds", "read_csv", "save_csv",
]
