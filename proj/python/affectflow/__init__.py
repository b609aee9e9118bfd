"""Event-aligned emotion dynamics toolkit.

Thin Python surface over the C++ core: valence scoring, affect statement
detection, CUSUM change points, stratified bootstraps, curve fits, mixture
models, and regression discontinuity analysis.
"""

from affectflow._core import (  # noqa: F401
    Lexicon,
    bootstrap_ci,
    cusum,
    detect_affect_label,
    estimate_duration,
    fit_exponential,
    fit_gaussian,
    fit_gmm,
    fit_lorentzian,
    fit_quadratic,
    half_life,
    median_excursion,
    rdd_fit,
    rolling_mean,
    run_pipeline,
    select_k,
    __version__,
)

__all__ = [
    "Lexicon",
    "bootstrap_ci",
    "cusum",
    "detect_affect_label",
    "estimate_duration",
    "fit_exponential",
    "fit_gaussian",
    "fit_gmm",
    "fit_lorentzian",
    "fit_quadratic",
    "half_life",
    "median_excursion",
    "rdd_fit",
    "rolling_mean",
    "run_pipeline",
    "select_k",
    "__version__",
]
