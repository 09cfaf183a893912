"""Choosing the number of components and lags, and rolling-origin backtests.

Both selectors assume k1 = k2 = k per component and proceed stepwise: search
k in 0..K_max for the current component, fix the winner, move to the next
component, and stop as soon as the new component's best criterion fails to
improve on the previous stage's. The cross-validated variant scores each
candidate by out-of-sample forecast error over expanding-window origins; the
BIC variant scores the in-sample residual trace with a dimension penalty.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DegenerateDataError, FitOptions, fit_component
from .forecast import fit_component_forecaster, forecast_panel
from .model import ODPCModel, _stage_reconstruction, fit_odpc
from .panel import TimeSeriesPanel

__all__ = [
    "SelectionResult",
    "EvaluationReport",
    "bic_for_stage",
    "select_lags_stepwise_bic",
    "select_lags_stepwise_cv",
    "rolling_origin_evaluate",
    "BASELINE_METHOD",
]

BASELINE_METHOD = "ar_baseline"
TARGET_MODES = ("level_sum", "last_value")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a stepwise search.

    ``table`` holds one (stage, k, criterion) row per evaluated candidate.
    ``stopping_stage`` is the 1-based stage at which the search ended: the
    first stage whose best candidate failed to improve, or the last fitted
    stage when the component cap or feasibility ended the search.
    """

    lag_specs: tuple[tuple[int, int], ...]
    table: tuple[tuple[int, int, float], ...]
    stopping_stage: int
    criterion: str


def bic_for_stage(residual_trace: float, T: int, cumulative_lags: int, k: int, m: int) -> float:
    """BIC-type criterion for one stage of the stepwise search.

    ``residual_trace`` is the trace of the residual second-moment matrix
    R'R / (T - cumulative_lags); ``cumulative_lags`` is 2 * sum of the k
    values of all components so far, the current candidate included.
    """
    t_eff = T - cumulative_lags
    if t_eff <= 0:
        raise ValueError(
            f"nonpositive effective sample: T - 2*sum(k) = {t_eff} must be > 0")
    if residual_trace <= 0:
        raise ValueError(f"residual trace must be positive, got {residual_trace}")
    return t_eff * math.log(residual_trace) + m * (2 * k + 3) * math.log(t_eff)


def _feasible_ks(K_max: int, sample_len: int) -> list[int]:
    """Candidates 0..K_max that leave a fittable sample: len - 2k >= k + 2."""
    ks = [k for k in range(K_max + 1) if sample_len - 2 * k >= k + 2]
    if len(ks) < K_max + 1:
        warnings.warn(
            f"candidate lags truncated to k <= {max(ks) if ks else 'none'} "
            f"(sample of length {sample_len} cannot support K_max={K_max})",
            stacklevel=3)
    return ks


def select_lags_stepwise_bic(panel: TimeSeriesPanel, K_max: int,
                             options: FitOptions | None = None,
                             max_components: int = 5) -> SelectionResult:
    """Stepwise lag/component selection by the BIC-type criterion.

    Per stage, every feasible k is fitted on the current residual panel and
    scored by :func:`bic_for_stage`; ties go to the smaller k. The search
    stops when a stage's best BIC is no better than the previous stage's
    (equality counts as no improvement), or after ``max_components`` stages.
    """
    if K_max < 0:
        raise ValueError(f"K_max must be >= 0, got {K_max}")
    T0, m = panel.T, panel.m
    current = panel
    chosen: list[tuple[int, int]] = []
    table: list[tuple[int, int, float]] = []
    prev_best = None
    stage = 0
    while len(chosen) < max_components:
        stage = len(chosen) + 1
        cum = 2 * sum(k for k, _ in chosen)
        ks = [k for k in _feasible_ks(K_max, current.T) if T0 - (cum + 2 * k) > 0]
        if not ks:
            stage = len(chosen)
            break
        best = None
        for k in ks:
            try:
                comp = fit_component(current, k, k, options)
            except DegenerateDataError:
                continue             # nothing left for this candidate to fit
            resid = current.values[2 * k:] - _stage_reconstruction(comp)
            count = T0 - (cum + 2 * k)
            trace = float(np.sum(resid * resid)) / count
            if trace <= 0.0:
                bic = -math.inf          # exact fit dominates any penalty
            else:
                bic = bic_for_stage(trace, T0, cum + 2 * k, k, m)
            table.append((stage, k, bic))
            if best is None or bic < best[0]:
                best = (bic, k, resid)
        if best is None:
            stage = len(chosen)
            break
        if prev_best is not None and best[0] >= prev_best:
            break
        chosen.append((best[1], best[1]))
        prev_best = best[0]
        current = TimeSeriesPanel(best[2], panel.series_names)
    return SelectionResult(lag_specs=tuple(chosen), table=tuple(table),
                           stopping_stage=stage, criterion="bic")


def _cv_error(panel: TimeSeriesPanel, specs, origins, h, options, max_order) -> float:
    """Mean squared h-step forecast error over expanding-window origins."""
    total = 0.0
    for origin in origins:
        train = TimeSeriesPanel(panel.values[:origin], panel.series_names)
        model = fit_odpc(train, specs, options)
        shortest = min(c.f.size for c in model.components)
        order_cap = max(0, min(max_order, shortest - 3))
        fc = forecast_panel(model, h, max_order=order_cap)
        err = panel.values[origin + h - 1] - fc.values[h - 1]
        total += float(np.mean(err ** 2))
    return total / len(origins)


def select_lags_stepwise_cv(panel: TimeSeriesPanel, K_max: int, h: int = 1,
                            n_folds: int = 10,
                            options: FitOptions | None = None,
                            max_components: int = 5,
                            max_order: int = 10) -> SelectionResult:
    """Stepwise lag/component selection by cross-validated forecast error.

    Candidates are scored on ``n_folds`` expanding-window origins: for each
    origin the full model (already-chosen stages plus the candidate) is
    refitted on periods up to the origin and its h-step forecast is compared
    with the realized panel row, averaging the per-series squared errors.
    Ties go to the smaller k; a stage whose best error is no lower than the
    previous stage's stops the search. The AR order cap is clamped to what
    the shortest component series in a fold supports.
    """
    if K_max < 0:
        raise ValueError(f"K_max must be >= 0, got {K_max}")
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    if n_folds < 1:
        raise ValueError(f"n_folds must be >= 1, got {n_folds}")
    T = panel.T
    first_origin = T - h - n_folds + 1
    if first_origin < 4:
        raise ValueError(
            f"insufficient sample for cross-validation: T={T}, h={h}, n_folds={n_folds}")
    origins = list(range(first_origin, first_origin + n_folds))

    chosen: list[tuple[int, int]] = []
    table: list[tuple[int, int, float]] = []
    prev_best = None
    stage = 0
    while len(chosen) < max_components:
        stage = len(chosen) + 1
        shrink = 2 * sum(k for k, _ in chosen)
        avail = first_origin - shrink
        ks = [k for k in _feasible_ks(K_max, avail) if avail - k >= 3]
        if not ks:
            stage = len(chosen)
            break
        best = None
        for k in ks:
            try:
                cv = _cv_error(panel, chosen + [(k, k)], origins, h, options, max_order)
            except DegenerateDataError:
                continue
            table.append((stage, k, cv))
            if best is None or cv < best[0]:
                best = (cv, k)
        if best is None:
            stage = len(chosen)
            break
        if prev_best is not None and best[0] >= prev_best:
            break
        chosen.append((best[1], best[1]))
        prev_best = best[0]
    return SelectionResult(lag_specs=tuple(chosen), table=tuple(table),
                           stopping_stage=stage, criterion="cv")


@dataclass(frozen=True)
class EvaluationReport:
    """Rolling-origin forecast errors and derived RMSE summaries.

    ``errors`` maps (method, series, horizon) to the per-origin errors
    E_{t,h}, t = 0 .. n_origins - 1. RMSEs are recomputed from the stored
    errors on every call.
    """

    window: int
    horizons: tuple[int, ...]
    n_origins: int
    target_mode: str
    methods: tuple[str, ...]
    series: tuple[str, ...]
    errors: dict

    def rmse(self, method: str, series: str, horizon: int) -> float:
        e = np.asarray(self.errors[(method, series, horizon)])
        return float(np.sqrt(np.mean(e ** 2)))

    def relative_rmse(self, method: str, series: str, horizon: int) -> float:
        """RMSE relative to the univariate AR baseline for the same target."""
        return self.rmse(method, series, horizon) / self.rmse(BASELINE_METHOD, series, horizon)

    def rows(self) -> list[tuple]:
        """Long-format rows (method, series, horizon, origin, error)."""
        out = []
        for method in self.methods:
            for series in self.series:
                for horizon in self.horizons:
                    for t, e in enumerate(self.errors[(method, series, horizon)]):
                        out.append((method, series, horizon, t, e))
        return out

    def summary(self) -> dict:
        out: dict = {}
        for method in self.methods:
            per_method: dict = {}
            for series in self.series:
                per_series = {}
                for horizon in self.horizons:
                    per_series[str(horizon)] = {
                        "rmse": self.rmse(method, series, horizon),
                        "relative_rmse": self.relative_rmse(method, series, horizon),
                    }
                per_method[series] = per_series
            out[method] = per_method
        return out


def _ar_baseline_forecast(train: np.ndarray, cols, h: int, max_order: int) -> dict[int, np.ndarray]:
    order_cap = max(0, min(max_order, train.shape[0] - 3))
    out = {}
    for j in cols:
        forecaster = fit_component_forecaster(train[:, j], order_cap)
        out[j] = forecaster.forecast(train[:, j], h)
    return out


def rolling_origin_evaluate(panel: TimeSeriesPanel, forecaster, *, window: int,
                            horizons, n_origins: int, targets=None,
                            target_mode: str = "level_sum",
                            method_name: str = "method",
                            max_order: int = 10) -> EvaluationReport:
    """Backtest a forecaster against a per-series AR baseline.

    ``forecaster`` is a callable ``(train_panel, h) -> (h, m) array``. For
    origin t and horizon h the training window is the trailing ``window``
    periods ending at period T - h - t. In "level_sum" mode (the default,
    built for targets that are sums of differenced series) the error is the
    h-step sum of realized values minus the sum of the forecast path; in
    "last_value" mode only the h-th step is compared.
    """
    horizons = tuple(int(h) for h in horizons)
    if not horizons or any(h < 1 for h in horizons):
        raise ValueError("horizons must be a non-empty list of integers >= 1")
    if target_mode not in TARGET_MODES:
        raise ValueError(f"target_mode must be one of {TARGET_MODES}, got {target_mode!r}")
    if n_origins < 1:
        raise ValueError(f"n_origins must be >= 1, got {n_origins}")
    T = panel.T
    if window + max(horizons) + n_origins > T:
        raise ValueError(
            f"infeasible geometry: window + max(horizon) + n_origins = "
            f"{window + max(horizons) + n_origins} exceeds T = {T}")
    if targets is None:
        targets = panel.series_names
    name_to_col = {name: j for j, name in enumerate(panel.series_names)}
    try:
        cols = [name_to_col[name] for name in targets]
    except KeyError as exc:
        raise ValueError(f"unknown target series {exc.args[0]!r}") from None

    methods = (method_name, BASELINE_METHOD)
    errors: dict = {(meth, name, h): np.zeros(n_origins)
                    for meth in methods for name in targets for h in horizons}

    for h in horizons:
        for t in range(n_origins):
            end = T - h - t
            train_values = panel.values[end - window:end]
            train_panel = TimeSeriesPanel(train_values, panel.series_names)
            fc = np.asarray(forecaster(train_panel, h), dtype=float)
            if fc.shape != (h, panel.m):
                raise ValueError(
                    f"forecaster returned shape {fc.shape}, expected ({h}, {panel.m})")
            base = _ar_baseline_forecast(train_values, cols, h, max_order)
            actual = panel.values[end:end + h]
            for name, j in zip(targets, cols):
                if target_mode == "level_sum":
                    e_m = actual[:, j].sum() - fc[:, j].sum()
                    e_b = actual[:, j].sum() - base[j].sum()
                else:
                    e_m = actual[-1, j] - fc[-1, j]
                    e_b = actual[-1, j] - base[j][-1]
                errors[(method_name, name, h)][t] = e_m
                errors[(BASELINE_METHOD, name, h)][t] = e_b

    errors = {key: tuple(val.tolist()) for key, val in errors.items()}
    return EvaluationReport(window=window, horizons=horizons, n_origins=n_origins,
                            target_mode=target_mode, methods=methods,
                            series=tuple(targets), errors=errors)
