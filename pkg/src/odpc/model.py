"""Sequential multi-component models fitted on reconstruction residuals.

Component 1 is fitted to the panel; component i >= 2 to the residual panel
left by components 1..i-1, restricted to the periods those components
reconstruct. A model with lag pairs (k1^i, k2^i) can therefore reconstruct
only the last ``T - sum_i (k1^i + k2^i)`` periods.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import FitOptions, ODPCComponent, fit_component
from .panel import TimeSeriesPanel, build_f_matrix

__all__ = [
    "ODPCModel",
    "fit_odpc",
    "reconstruct",
    "residuals",
    "model_to_dict",
    "model_from_dict",
    "bind_panel",
    "save_model",
    "load_model",
]


def _stage_reconstruction(comp: ODPCComponent) -> np.ndarray:
    """Reconstruction of one stage over its own reconstructed periods."""
    return build_f_matrix(comp.f, comp.k1, comp.k2) @ comp.D


@dataclass(frozen=True)
class ODPCModel:
    """Ordered components, each fitted on the previous stage's residuals.

    ``panel`` keeps the training panel when the model was fitted in-process;
    models loaded from JSON carry ``panel=None`` (forecasting and
    reconstruction still work, residuals need the panel).
    """

    components: tuple[ODPCComponent, ...]
    T: int
    m: int
    series_names: tuple[str, ...]
    panel: TimeSeriesPanel | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.components:
            raise ValueError("model needs at least one component")
        if self.reconstructable_from > self.T:
            raise ValueError(
                f"lags consume the whole sample: sum(k1+k2) = {self.total_lags} >= T = {self.T}")

    @property
    def lag_specs(self) -> tuple[tuple[int, int], ...]:
        return tuple((c.k1, c.k2) for c in self.components)

    @property
    def total_lags(self) -> int:
        return sum(c.k1 + c.k2 for c in self.components)

    @property
    def reconstructable_from(self) -> int:
        """First reconstructed period, 1-based: sum over components of k1+k2, plus 1."""
        return self.total_lags + 1

    def mse(self) -> float:
        """Mean squared residual entry over the common reconstructed periods."""
        return float(np.mean(residuals(self).values ** 2))


def fit_odpc(panel: TimeSeriesPanel, lag_specs, options: FitOptions | None = None) -> ODPCModel:
    """Fit components sequentially, one per (k1, k2) pair in ``lag_specs``.

    Each successive component sees the residual panel of the previous stage,
    restricted to the periods that stage reconstructs; intercepts are
    re-estimated at every stage. Raises ValueError when the remaining sample
    is too short for a stage's lags, DegenerateDataError when a residual
    panel has no variation left.
    """
    specs = [(int(k1), int(k2)) for k1, k2 in lag_specs]
    if not specs:
        raise ValueError("lag_specs must contain at least one (k1, k2) pair")
    components = []
    current = panel
    for k1, k2 in specs:
        comp = fit_component(current, k1, k2, options)
        components.append(comp)
        resid = current.values[k1 + k2:] - _stage_reconstruction(comp)
        current = TimeSeriesPanel(resid, panel.series_names)
    return ODPCModel(
        components=tuple(components), T=panel.T, m=panel.m,
        series_names=tuple(panel.series_names), panel=panel)


def reconstruct(model: ODPCModel) -> TimeSeriesPanel:
    """Sum of the per-stage reconstructions over the common periods.

    Returns a panel covering periods ``model.reconstructable_from .. T``
    (each stage's reconstruction is aligned to its own range and restricted
    to the common tail).
    """
    n_common = model.T - model.total_lags
    total = np.zeros((n_common, model.m))
    for comp in model.components:
        rec = _stage_reconstruction(comp)
        total += rec[rec.shape[0] - n_common:]
    return TimeSeriesPanel(total, model.series_names)


def residuals(model: ODPCModel) -> TimeSeriesPanel:
    """Training panel minus the model reconstruction on the common periods."""
    if model.panel is None:
        raise ValueError("model is not bound to its training panel; "
                         "reload it with load_model(path, panel=...)")
    rec = reconstruct(model)
    resid = model.panel.values[model.T - rec.T:] - rec.values
    return TimeSeriesPanel(resid, model.series_names)


def model_to_dict(model: ODPCModel) -> dict:
    return {
        "lag_specs": [list(spec) for spec in model.lag_specs],
        "T": model.T,
        "m": model.m,
        "series_names": list(model.series_names),
        "components": [comp.to_dict() for comp in model.components],
    }


def model_from_dict(d: dict, panel: TimeSeriesPanel | None = None) -> ODPCModel:
    model = ODPCModel(
        components=tuple(ODPCComponent.from_dict(c) for c in d["components"]),
        T=int(d["T"]),
        m=int(d["m"]),
        series_names=tuple(d["series_names"]),
        panel=None)
    if panel is not None:
        model = bind_panel(model, panel)
    return model


def bind_panel(model: ODPCModel, panel: TimeSeriesPanel) -> ODPCModel:
    """Attach a training panel to a loaded model, checking that it matches."""
    if panel.T != model.T or panel.m != model.m:
        raise ValueError(
            f"panel has T={panel.T}, m={panel.m} but the model was fitted on "
            f"T={model.T}, m={model.m}")
    if tuple(panel.series_names) != tuple(model.series_names):
        raise ValueError("panel series names do not match the model")
    return ODPCModel(components=model.components, T=model.T, m=model.m,
                     series_names=model.series_names, panel=panel)


def save_model(model: ODPCModel, path, provenance: dict | None = None) -> None:
    """Write the model as JSON; ``provenance`` is stored verbatim if given."""
    d = model_to_dict(model)
    if provenance is not None:
        d = {"provenance": provenance, **d}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=2)
        fh.write("\n")


def load_model(path, panel: TimeSeriesPanel | None = None) -> ODPCModel:
    """Load a model written by :func:`save_model`, optionally binding a panel."""
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh), panel=panel)
