"""Monte Carlo coverage studies, large-sample asymptotics and distribution matching."""

from .asymptotics import (V1Estimate, estimate_v1, lambda_asymptotic, lambda_closed_form,
                          v1_from_estimates)
from .dist_compare import curves_csv, match_distributions, weibull_with_quantile
from .study import CoverageResult, CoverageRow, SimFactors, exclusion_probability, run_coverage_study

__all__ = [
    "CoverageResult",
    "CoverageRow",
    "SimFactors",
    "V1Estimate",
    "curves_csv",
    "estimate_v1",
    "exclusion_probability",
    "lambda_asymptotic",
    "lambda_closed_form", "v1_from_estimates",
    "match_distributions",
    "run_coverage_study",
    "v1_from_estimates",
    "weibull_with_quantile",
]
