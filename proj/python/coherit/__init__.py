"""Functional de-biased estimation of co-heritability in sparse linear models.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._coherit import (  # noqa: F401
    CoheritError,
    debias_coefficients,
    estimate_pair,
    estimate_pairwise,
    estimate_quadratic,
    find_projection,
    fit_scaled_lasso,
    marginal_t_stats,
    preset_names,
    run_preset,
    run_setting,
    sample_gaussian_ar1,
    standardize_columns,
)

__version__ = "0.1.0"

__all__ = [
    "CoheritError",
    "debias_coefficients",
    "estimate_pair",
    "estimate_pairwise",
    "estimate_quadratic",
    "find_projection",
    "fit_scaled_lasso",
    "marginal_t_stats",
    "preset_names",
    "run_preset",
    "run_setting",
    "sample_gaussian_ar1",
    "standardize_columns",
]
