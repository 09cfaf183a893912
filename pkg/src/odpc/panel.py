"""Panel containers and the lag-matrix algebra shared by the fitting code.

A panel is a dense T x m matrix of observations, one row per period (oldest
first) and one column per series. The helpers here build the stacked lag
matrices that turn the component fit into a pair of ordinary least-squares
problems: ``lag_matrix`` collects contemporaneous and lagged rows,
``build_lagged_design`` stacks them into the big design `C`, and
``build_f_matrix`` arranges lags of a fitted component next to an intercept
column.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeSeriesPanel",
    "LaggedDesign",
    "load_panel",
    "save_panel_json",
    "load_panel_json",
    "lag_matrix",
    "build_lagged_design",
    "component_series",
    "build_f_matrix",
]


class TimeSeriesPanel:
    """Immutable T x m panel of finite real observations.

    Parameters
    ----------
    values : array-like, shape (T, m)
        One row per period, oldest first. Every entry must be finite;
        missing values are not supported.
    series_names : sequence of str, optional
        Unique column names. Defaults to ``V1 .. Vm``.
    """

    __slots__ = ("_values", "_names")

    def __init__(self, values, series_names=None):
        arr = np.array(values, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"panel values must be two-dimensional, got ndim={arr.ndim}")
        T, m = arr.shape
        if T < 2:
            raise ValueError(f"panel needs at least 2 periods, got T={T}")
        if m < 1:
            raise ValueError("panel needs at least one series")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            r, c = bad[0]
            raise ValueError(f"non-finite value at row {r + 1}, column {c + 1}")
        if series_names is None:
            names = tuple(f"V{j + 1}" for j in range(m))
        else:
            names = tuple(str(s) for s in series_names)
            if len(names) != m:
                raise ValueError(f"got {len(names)} series names for {m} series")
            if len(set(names)) != m:
                raise ValueError("series names must be unique")
        arr.flags.writeable = False
        self._values = arr
        self._names = names

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def series_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def T(self) -> int:
        return self._values.shape[0]

    @property
    def m(self) -> int:
        return self._values.shape[1]

    def __repr__(self) -> str:
        return f"TimeSeriesPanel(T={self.T}, m={self.m})"

    def to_dict(self) -> dict:
        return {"series_names": list(self._names), "values": self._values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TimeSeriesPanel":
        return cls(d["values"], d["series_names"])


def _parses_as_numbers(row) -> bool:
    try:
        for cell in row:
            float(cell)
    except ValueError:
        return False
    return True


def load_panel(path, header: bool | None = None, delimiter: str = ",") -> TimeSeriesPanel:
    """Read a panel from a delimited text file, one row per period.

    Parameters
    ----------
    path : str or Path
    header : bool, optional
        Whether the first row holds series names. ``None`` (default) sniffs:
        the first row is treated as a header iff any of its cells does not
        parse as a number.
    delimiter : str
        Field delimiter, default comma.

    Raises
    ------
    ValueError
        On unparseable cells, ragged rows or non-finite values; the offending
        (data) row and column are reported 1-based.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh, delimiter=delimiter)
                if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError(f"{path}: no rows found")
    if header is None:
        header = not _parses_as_numbers(rows[0])
    names = None
    if header:
        names = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                f"ragged rows: row {i + 1} has {len(row)} columns, expected {width}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ValueError(
                    f"could not parse {cell.strip()!r} at row {i + 1}, column {j + 1}"
                ) from None
    return TimeSeriesPanel(data, names)


def save_panel_json(panel: TimeSeriesPanel, path) -> None:
    """Write a panel as JSON ``{"series_names": [...], "values": [[...], ...]}``."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(panel.to_dict(), fh)


def load_panel_json(path) -> TimeSeriesPanel:
    with open(path, encoding="utf-8") as fh:
        return TimeSeriesPanel.from_dict(json.load(fh))


def _check_lag(value: int, name: str) -> int:
    k = int(value)
    if k != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if k < 0:
        raise ValueError(f"{name} must be >= 0, got {k}")
    return k


def lag_matrix(values: np.ndarray, k1: int) -> np.ndarray:
    """Stack rows ``(z_t', z_{t-1}', ..., z_{t-k1}')`` for t = k1+1..T.

    Returns an array of shape ``(T - k1, m * (k1 + 1))`` whose column blocks
    are ordered lag-major: block h holds the panel lagged by h periods.
    """
    T = values.shape[0]
    return np.hstack([values[k1 - h:T - h] for h in range(k1 + 1)])


@dataclass(frozen=True)
class LaggedDesign:
    """Design matrices for one (k1, k2) lag configuration.

    ``Z_target`` holds the reconstructed rows (the last ``T - (k1 + k2)``
    periods of the panel). ``C`` stacks ``k2 + 1`` row blocks; block l equals
    the lag matrix aligned so that ``block_l @ a`` gives the component series
    lagged by l periods over the reconstructed rows. ``lagged`` is the full
    ``(T - k1) x m(k1+1)`` lag matrix the blocks are sliced from.
    """

    k1: int
    k2: int
    Z_target: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    lagged: np.ndarray = field(repr=False)

    @property
    def n_periods(self) -> int:
        """Number of reconstructed rows, T - (k1 + k2)."""
        return self.Z_target.shape[0]

    @property
    def m(self) -> int:
        return self.Z_target.shape[1]

    @property
    def n_weights(self) -> int:
        """Length of the combination weight vector, m * (k1 + 1)."""
        return self.C.shape[1]

    def blocks(self) -> np.ndarray:
        """View of C as (k2+1, n_periods, n_weights) row blocks."""
        return self.C.reshape(self.k2 + 1, self.n_periods, self.n_weights)


def build_lagged_design(panel: TimeSeriesPanel, k1: int, k2: int) -> LaggedDesign:
    """Build the stacked design matrices for a (k1, k2) component fit.

    Requires ``T - (k1 + k2) >= k2 + 2`` so the loading regression has more
    rows than coefficients.
    """
    k1 = _check_lag(k1, "k1")
    k2 = _check_lag(k2, "k2")
    T = panel.T
    n = T - (k1 + k2)
    if n < k2 + 2:
        t_min = k1 + 2 * k2 + 2
        raise ValueError(
            f"panel too short for lags k1={k1}, k2={k2}: need T >= {t_min}, got T={T}")
    lagged = lag_matrix(panel.values, k1)
    C = np.vstack([lagged[k2 - l:k2 - l + n] for l in range(k2 + 1)])
    Z_target = panel.values[k1 + k2:]
    return LaggedDesign(k1=k1, k2=k2, Z_target=Z_target, C=C, lagged=lagged)


def component_series(panel: TimeSeriesPanel, a, k1: int) -> np.ndarray:
    """Evaluate the component f_t = sum_h sum_j a[h, j] z_{t-h, j} for t = k1+1..T.

    ``a`` is laid out lag-major in blocks of length m: ``[a_0 | a_1 | ... |
    a_k1]``, block h weighting the panel lagged by h periods. Canonical use
    passes a unit-norm vector, but any length-m(k1+1) vector is accepted (the
    map is linear in ``a``).
    """
    k1 = _check_lag(k1, "k1")
    a = np.asarray(a, dtype=float)
    p = panel.m * (k1 + 1)
    if a.shape != (p,):
        raise ValueError(f"weight vector has length {a.size}, expected m*(k1+1) = {p}")
    return lag_matrix(panel.values, k1) @ a


def build_f_matrix(f, k1: int, k2: int) -> np.ndarray:
    """Arrange an intercept column next to k2+1 lags of the component series.

    ``f`` is the component over t = k1+1..T (length T - k1). The result has
    shape ``(T - (k1+k2), k2 + 2)``: column 0 is ones and column 1 + h holds
    the component lagged by h periods, aligned to the reconstructed rows.
    """
    _check_lag(k1, "k1")
    k2 = _check_lag(k2, "k2")
    f = np.asarray(f, dtype=float)
    n = f.size - k2
    if n < 1:
        raise ValueError(f"component series of length {f.size} too short for k2={k2}")
    F = np.empty((n, k2 + 2))
    F[:, 0] = 1.0
    for h in range(k2 + 1):
        F[:, 1 + h] = f[k2 - h:k2 - h + n]
    return F
