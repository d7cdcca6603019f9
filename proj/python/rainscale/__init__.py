"""Downscaling precipitation extremes.

Point-process GEV fitting of daily precipitation exceedances, n-year return
values with delta-method uncertainty, and grid-to-station regression and
kriging. The heavy lifting lives in the compiled extension ``_core``.
"""

from rainscale._core import (  # noqa: F401
    DesignSpec,
    FitResult,
    GevParams,
    KrigingModel,
    PairedRecord,
    PointPrediction,
    RatioResult,
    RegressionFit,
    ReturnLevel,
    delta_method_se,
    fit_model,
    fit_ols,
    fit_point_process,
    future_present_ratio,
    gev_cdf,
    great_circle_miles,
    initial_params,
    pp_exceedance_rate,
    pp_intensity,
    pp_neg_log_likelihood,
    pp_threshold_for_rate,
    predict_point_return,
    ratio_significance,
    render_map_svg,
    return_level,
    return_level_gradient,
    return_level_with_se,
    simulate_pp_exceedances,
    universal_krige,
)

__all__ = [
    "DesignSpec",
    "FitResult",
    "GevParams",
    "KrigingModel",
    "PairedRecord",
    "PointPrediction",
    "RatioResult",
    "RegressionFit",
    "ReturnLevel",
    "delta_method_se",
    "fit_model",
    "fit_ols",
    "fit_point_process",
    "future_present_ratio",
    "gev_cdf",
    "great_circle_miles",
    "initial_params",
    "pp_exceedance_rate",
    "pp_intensity",
    "pp_neg_log_likelihood",
    "pp_threshold_for_rate",
    "predict_point_return",
    "ratio_significance",
    "render_map_svg",
    "return_level",
    "return_level_gradient",
    "return_level_with_se",
    "simulate_pp_exceedances",
    "universal_krige",
]
