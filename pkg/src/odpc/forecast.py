"""Univariate AR forecasting of component series and panel-level forecasts.

Each fitted component series is extrapolated with an AR(p) model estimated by
conditional least squares, the order picked by AIC. Panel forecasts then
combine the per-component paths through the fitted loadings:

    z_hat[T+h, j] = sum_i ( alpha^i_j + sum_v B^i[v, j] * f^i[T+h-v] )

where component values at or before period T are the observed ones and later
values come from the AR recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ODPCModel

__all__ = [
    "ARForecaster",
    "PanelForecast",
    "fit_component_forecaster",
    "forecast_components",
    "forecast_panel",
]

_VAR_FLOOR = 1e-300  # keeps log() finite on exact fits


@dataclass(frozen=True)
class ARForecaster:
    """AR(p) model fitted by conditional least squares.

    ``coefficients[i]`` multiplies the value lagged i+1 periods. ``order`` 0
    means a constant-mean forecaster. ``spectral_radius`` is the companion
    matrix's largest eigenvalue magnitude; values >= 1 flag an explosive fit
    (diagnosed, not rejected).
    """

    order: int
    coefficients: np.ndarray
    intercept: float
    residual_variance: float
    aic: float
    spectral_radius: float

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def forecast(self, history, h: int) -> np.ndarray:
        """Iterate the fitted recursion h steps past the end of ``history``."""
        if h < 1:
            raise ValueError(f"horizon must be >= 1, got {h}")
        hist = np.asarray(history, dtype=float)
        if hist.size < self.order:
            raise ValueError(
                f"history of length {hist.size} too short for an AR({self.order}) forecast")
        buf = list(hist[hist.size - self.order:])
        out = np.empty(h)
        for s in range(h):
            nxt = self.intercept
            for i in range(self.order):
                nxt += self.coefficients[i] * buf[-1 - i]
            out[s] = nxt
            if self.order:
                buf.append(nxt)
        return out


def _ar_design(x: np.ndarray, p: int, start: int) -> np.ndarray:
    n = x.size
    cols = [np.ones(n - start)]
    for lag in range(1, p + 1):
        cols.append(x[start - lag:n - lag])
    return np.column_stack(cols)


def _conditional_ls(x: np.ndarray, p: int, start: int) -> tuple[np.ndarray, float]:
    X = _ar_design(x, p, start)
    beta, _, _, _ = np.linalg.lstsq(X, x[start:], rcond=None)
    resid = x[start:] - X @ beta
    return beta, float(resid @ resid)


def _companion_radius(coeffs: np.ndarray) -> float:
    p = coeffs.size
    if p == 0:
        return 0.0
    companion = np.zeros((p, p))
    companion[0] = coeffs
    if p > 1:
        companion[np.arange(1, p), np.arange(p - 1)] = 1.0
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def fit_component_forecaster(series, max_order: int = 10) -> ARForecaster:
    """Fit AR(p) by conditional least squares, selecting p by AIC.

    Orders 0..max_order are scored on the common sample t > max_order so the
    AIC values are comparable; the winning order is then refitted on its full
    conditional sample. A constant series comes out as the order-0 forecaster
    (exact fits hit a variance floor that the AIC penalty breaks in favor of
    smaller orders).
    """
    x = np.asarray(series, dtype=float)
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    if x.size <= max_order + 2:
        raise ValueError(
            f"series too short: need length > max_order + 2 = {max_order + 2}, got {x.size}")
    if np.ptp(x) == 0.0:
        # constant series: order 0, forecast is the constant
        return ARForecaster(order=0, coefficients=np.empty(0), intercept=float(x[0]),
                            residual_variance=0.0, aic=-math.inf, spectral_radius=0.0)
    n_eff = x.size - max_order
    best_p, best_aic = 0, math.inf
    for p in range(max_order + 1):
        _, rss = _conditional_ls(x, p, max_order)
        aic = n_eff * math.log(max(rss / n_eff, _VAR_FLOOR)) + 2 * (p + 1)
        if aic < best_aic:
            best_p, best_aic = p, aic
    beta, rss = _conditional_ls(x, best_p, best_p)
    coeffs = beta[1:]
    return ARForecaster(
        order=best_p,
        coefficients=coeffs,
        intercept=float(beta[0]),
        residual_variance=rss / (x.size - best_p),
        aic=best_aic,
        spectral_radius=_companion_radius(coeffs))


def forecast_components(model: ODPCModel, h: int, max_order: int = 10) -> list[np.ndarray]:
    """h-step forecast path of every component series, via AR(p)-AIC."""
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    paths = []
    for comp in model.components:
        forecaster = fit_component_forecaster(comp.f, max_order)
        paths.append(forecaster.forecast(comp.f, h))
    return paths


@dataclass(frozen=True)
class PanelForecast:
    """h x m panel forecast plus the component paths that produced it.

    ``component_paths[i]`` covers periods T+1-k2^i .. T+h: the trailing k2^i
    observed component values followed by the h forecast values.
    """

    horizon: int
    values: np.ndarray
    component_paths: tuple[np.ndarray, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError("panel forecast produced non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def to_dict(self, series_names=None) -> dict:
        d = {
            "horizon": self.horizon,
            "values": self.values.tolist(),
            "component_paths": [path.tolist() for path in self.component_paths],
        }
        if series_names is not None:
            d["series_names"] = list(series_names)
        return d


def forecast_panel(model: ODPCModel, h: int, max_order: int = 10) -> PanelForecast:
    """Forecast all series h steps ahead from the fitted components.

    For lag v at step s, component values with T+s-v <= T are the observed
    tail of the component series; later ones come from its AR forecast path.
    """
    paths = forecast_components(model, h, max_order)
    values = np.zeros((h, model.m))
    combined = []
    for comp, path in zip(model.components, paths):
        k2 = comp.k2
        if k2:
            full = np.concatenate([comp.f[comp.f.size - k2:], path])
        else:
            full = path.copy()
        Fh = np.empty((h, k2 + 2))
        Fh[:, 0] = 1.0
        for v in range(k2 + 1):
            Fh[:, 1 + v] = full[k2 - v:k2 - v + h]
        values += Fh @ comp.D
        combined.append(full)
    return PanelForecast(horizon=h, values=values, component_paths=tuple(combined))
