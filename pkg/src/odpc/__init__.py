"""One-sided dynamic principal components for multivariate time-series forecasting."""

from .core import (
    DegenerateDataError,
    FitOptions,
    ODPCComponent,
    coordinate_descent_a,
    fit_component,
    initialize_component,
    reconstruction_mse,
    update_D,
    update_a,
)
from .forecast import (
    ARForecaster,
    PanelForecast,
    fit_component_forecaster,
    forecast_components,
    forecast_panel,
)
from .model import (
    ODPCModel,
    bind_panel,
    fit_odpc,
    load_model,
    reconstruct,
    residuals,
    save_model,
)
from .panel import (
    LaggedDesign,
    TimeSeriesPanel,
    build_f_matrix,
    build_lagged_design,
    component_series,
    load_panel,
    load_panel_json,
    save_panel_json,
)
from .selection import (
    EvaluationReport,
    SelectionResult,
    bic_for_stage,
    rolling_origin_evaluate,
    select_lags_stepwise_bic,
    select_lags_stepwise_cv,
)
from .simulate import (
    DGP_KINDS,
    DGPSpec,
    MonteCarloReport,
    SimulatedPanel,
    gen_dfm1,
    gen_dfm2,
    gen_varma,
    generate,
    run_monte_carlo,
    sw_baseline_forecast,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TimeSeriesPanel",
    "LaggedDesign",
    "load_panel",
    "save_panel_json",
    "load_panel_json",
    "build_lagged_design",
    "component_series",
    "build_f_matrix",
    "DegenerateDataError",
    "FitOptions",
    "ODPCComponent",
    "reconstruction_mse",
    "update_D",
    "update_a",
    "coordinate_descent_a",
    "initialize_component",
    "fit_component",
    "ODPCModel",
    "fit_odpc",
    "reconstruct",
    "residuals",
    "save_model",
    "load_model",
    "bind_panel",
    "ARForecaster",
    "PanelForecast",
    "fit_component_forecaster",
    "forecast_components",
    "forecast_panel",
    "SelectionResult",
    "EvaluationReport",
    "bic_for_stage",
    "select_lags_stepwise_bic",
    "select_lags_stepwise_cv",
    "rolling_origin_evaluate",
    "DGP_KINDS",
    "DGPSpec",
    "SimulatedPanel",
    "gen_dfm1",
    "gen_dfm2",
    "gen_varma",
    "generate",
    "sw_baseline_forecast",
    "MonteCarloReport",
    "run_monte_carlo",
]
