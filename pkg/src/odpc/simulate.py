"""Simulated data-generating processes and the PMSE benchmarking harness.

Five DGPs are provided: two dynamic factor models (an MA(2) factor loaded
with three lags, and an AR(2) factor loaded with two lags), their variants
with AR(1) idiosyncratic noise, and a VARMA built from independent AR(1)
states accumulated through a lower-triangular ones matrix. Factor DGPs are
calibrated so the mean per-series empirical variance of the common part is
one; the VARMA panel itself is rescaled to mean variance one.

``run_monte_carlo`` replays the forecasting comparison: simulate T+1 periods,
fit each method on the first T, forecast period T+1, and score the mean over
series of the squared forecast error against the held-out row (forecasts for
the factor DGPs carry the common part only; nothing attempts to predict the
idiosyncratic noise). Replication r of a cell draws from a counter-based
Philox stream keyed by (base_seed, dgp, T, m, r), so reports are independent
of execution order and thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import FitOptions
from .forecast import fit_component_forecaster, forecast_panel
from .model import fit_odpc
from .panel import TimeSeriesPanel

__all__ = [
    "DGP_KINDS",
    "DGPSpec",
    "SimulatedPanel",
    "replication_seed",
    "gen_dfm1",
    "gen_dfm2",
    "gen_varma",
    "generate",
    "sw_baseline_forecast",
    "MonteCarloCell",
    "MonteCarloReport",
    "run_monte_carlo",
]

DGP_KINDS = ("DFM1", "DFM1AR", "DFM2", "DFM2AR", "VARMA")
BURN_IN = 200

# Tables 1-2 settings: one component with k1 = k2 = the number of factor lags
# in the generating model, and the known static factor count for the
# principal-components baseline.
FACTOR_LAGS = {"DFM1": 3, "DFM1AR": 3, "DFM2": 2, "DFM2AR": 2}
SW_FACTORS = {"DFM1": 4, "DFM1AR": 4, "DFM2": 3, "DFM2AR": 3}
# Table 3 settings: (components, k1, k2) for the dynamic method and static
# factor counts for the baseline, column by column.
VARMA_ODPC_CONFIGS = ((1, 1, 1), (2, 1, 1), (5, 1, 1))
VARMA_SW_FACTORS = (2, 6, 10)


@dataclass(frozen=True)
class DGPSpec:
    """A simulated process: which family, the panel size, and its seed.

    ``params`` records the random parameters realized at generation time
    (moving-average/autoregressive coefficients, the common-part scale, the
    VARMA diagonal) so a run can be audited.
    """

    kind: str
    T: int
    m: int
    seed: object
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ValueError(f"unknown DGP {self.kind!r}; valid kinds: {', '.join(DGP_KINDS)}")
        if self.T < 10:
            raise ValueError(f"T must be >= 10, got {self.T}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")


@dataclass(frozen=True)
class SimulatedPanel:
    """A simulated panel of T+1 periods; the last row is the forecast target.

    ``common`` holds the (T+1) x m common part for factor DGPs (None for
    VARMA); ``factor`` the realized factor path. The panel equals common plus
    idiosyncratic noise entrywise for factor DGPs.
    """

    panel: TimeSeriesPanel
    common: np.ndarray | None
    dgp: DGPSpec
    factor: np.ndarray | None = None

    @property
    def training_panel(self) -> TimeSeriesPanel:
        """All periods except the held-out last row."""
        return TimeSeriesPanel(self.panel.values[:-1], self.panel.series_names)

    @property
    def holdout(self) -> np.ndarray:
        """The held-out final row, the forecast target."""
        return self.panel.values[-1]


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def replication_seed(base_seed: int, kind: str, T: int, m: int, rep: int) -> tuple:
    """Entropy tuple keying the Philox stream of one replication."""
    return (int(base_seed), DGP_KINDS.index(kind), int(T), int(m), int(rep))


def _check_dims(T: int, m: int) -> None:
    if T < 10:
        raise ValueError(f"T must be >= 10, got {T}")
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")


def _mean_series_variance(x: np.ndarray) -> float:
    return float(np.mean(np.var(x, axis=0)))


def _dfm_common(f_arr: np.ndarray, T: int, m: int, n_lags: int) -> np.ndarray:
    """Common part loading n_lags factor lags with the sin/cos/ramp/ones weights."""
    j = np.arange(1, m + 1)
    weights = [np.sin(2 * np.pi * j / m), np.cos(2 * np.pi * j / m),
               j / m, np.ones(m)][:n_lags]
    out = np.zeros((T + 1, m))
    for lag, w in enumerate(weights):
        out += f_arr[BURN_IN - lag:BURN_IN - lag + T + 1, None] * w
    return out


def _idiosyncratic(rng: np.random.Generator, T: int, m: int,
                   ar: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Standard normal noise, or per-series unit-variance AR(1) when ``ar``."""
    if not ar:
        return rng.standard_normal((T + 1, m)), None
    rho = rng.uniform(-0.9, 0.9, size=m)
    eps = rng.standard_normal((BURN_IN + T + 1, m)) * np.sqrt(1.0 - rho ** 2)
    u = np.empty_like(eps)
    u[0] = eps[0]
    for t in range(1, u.shape[0]):
        u[t] = rho * u[t - 1] + eps[t]
    return u[BURN_IN:], rho


def _finish_factor_panel(kind, T, m, seed, common, factor, rng, ar, extra) -> SimulatedPanel:
    scale = 1.0 / np.sqrt(_mean_series_variance(common))
    common = common * scale
    noise, rho = _idiosyncratic(rng, T, m, ar)
    params = dict(extra)
    params["scale"] = scale
    if rho is not None:
        params["idiosyncratic_ar"] = rho.tolist()
    spec = DGPSpec(kind=kind, T=T, m=m, seed=seed, params=params)
    return SimulatedPanel(panel=TimeSeriesPanel(common + noise), common=common,
                          dgp=spec, factor=factor[BURN_IN:])


def gen_dfm1(T: int, m: int, seed, ar_idiosyncratic: bool = False,
             theta1: float | None = None, theta2: float | None = None) -> SimulatedPanel:
    """MA(2)-factor model: four factor lags weighted sin/cos/ramp/ones per series.

    theta2 ~ U(-0.7, 0.7) and theta1 ~ U(0, 1 - |theta2|) unless pinned; the
    common part is scaled so its mean per-series empirical variance is one.
    With ``ar_idiosyncratic`` the noise is per-series unit-variance AR(1)
    with coefficients drawn U(-0.9, 0.9).
    """
    _check_dims(T, m)
    rng = _rng(seed)
    th2 = rng.uniform(-0.7, 0.7) if theta2 is None else float(theta2)
    th1 = rng.uniform(0.0, 1.0 - abs(th2)) if theta1 is None else float(theta1)
    v = rng.standard_normal(BURN_IN + T + 1)
    f = np.empty_like(v)
    f[0] = v[0]
    f[1] = v[1] + th1 * v[0]
    f[2:] = v[2:] + th1 * v[1:-1] + th2 * v[:-2]
    kind = "DFM1AR" if ar_idiosyncratic else "DFM1"
    common = _dfm_common(f, T, m, n_lags=4)
    return _finish_factor_panel(kind, T, m, seed, common, f, rng, ar_idiosyncratic,
                                {"theta1": th1, "theta2": th2})


def gen_dfm2(T: int, m: int, seed, ar_idiosyncratic: bool = False) -> SimulatedPanel:
    """AR(2)-factor model f_t = 1.4 f_{t-1} - 0.45 f_{t-2} + v_t, three factor lags."""
    _check_dims(T, m)
    rng = _rng(seed)
    v = rng.standard_normal(BURN_IN + T + 1)
    f = np.empty_like(v)
    f[0] = v[0]
    f[1] = 1.4 * f[0] + v[1]
    for t in range(2, f.size):
        f[t] = 1.4 * f[t - 1] - 0.45 * f[t - 2] + v[t]
    kind = "DFM2AR" if ar_idiosyncratic else "DFM2"
    common = _dfm_common(f, T, m, n_lags=3)
    return _finish_factor_panel(kind, T, m, seed, common, f, rng, ar_idiosyncratic, {})


def gen_varma(T: int, m: int, seed, lambda_diag=None) -> SimulatedPanel:
    """VARMA panel: independent AR(1) states accumulated column by column.

    States follow x_t = diag(lambda) x_{t-1} + u_t with lambda ~ U(-0.9, 0.9)
    per coordinate (unless pinned); the observed panel is the running row sum
    of the states (a lower-triangular ones loading), rescaled so the mean
    per-series empirical variance is one.
    """
    _check_dims(T, m)
    rng = _rng(seed)
    lam = rng.uniform(-0.9, 0.9, size=m) if lambda_diag is None \
        else np.broadcast_to(np.asarray(lambda_diag, dtype=float), (m,)).copy()
    shocks = rng.standard_normal((BURN_IN + T + 1, m))
    x = np.empty_like(shocks)
    x[0] = shocks[0]
    for t in range(1, x.shape[0]):
        x[t] = lam * x[t - 1] + shocks[t]
    z = np.cumsum(x[BURN_IN:], axis=1)
    scale = 1.0 / np.sqrt(_mean_series_variance(z))
    z = z * scale
    spec = DGPSpec(kind="VARMA", T=T, m=m, seed=seed,
                   params={"lambda": lam.tolist(), "scale": scale})
    return SimulatedPanel(panel=TimeSeriesPanel(z), common=None, dgp=spec, factor=None)


def generate(kind: str, T: int, m: int, seed) -> SimulatedPanel:
    """Dispatch on the DGP name."""
    if kind == "DFM1":
        return gen_dfm1(T, m, seed)
    if kind == "DFM1AR":
        return gen_dfm1(T, m, seed, ar_idiosyncratic=True)
    if kind == "DFM2":
        return gen_dfm2(T, m, seed)
    if kind == "DFM2AR":
        return gen_dfm2(T, m, seed, ar_idiosyncratic=True)
    if kind == "VARMA":
        return gen_varma(T, m, seed)
    raise ValueError(f"unknown DGP {kind!r}; valid kinds: {', '.join(DGP_KINDS)}")


def sw_baseline_forecast(panel: TimeSeriesPanel, r: int, h: int,
                         max_order: int = 10) -> np.ndarray:
    """Static-factor forecast: r principal components, each forecast by AR-AIC.

    Factors are the leading principal-component scores of the centered
    panel; the h x m forecast maps the univariate factor forecasts back
    through the loadings and adds the column means.
    """
    if not 1 <= r <= min(panel.T, panel.m):
        raise ValueError(
            f"factor count must satisfy 1 <= r <= min(T, m) = {min(panel.T, panel.m)}, got {r}")
    values = panel.values
    mu = values.mean(axis=0)
    centered = values - mu
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    loadings = vt[:r]                          # r x m
    scores = centered @ loadings.T             # T x r
    paths = np.empty((h, r))
    for i in range(r):
        forecaster = fit_component_forecaster(scores[:, i], max_order)
        paths[:, i] = forecaster.forecast(scores[:, i], h)
    return paths @ loadings + mu


@dataclass(frozen=True)
class MonteCarloCell:
    """Per-replication PMSEs of one (dgp, T, m, method) combination."""

    dgp: str
    T: int
    m: int
    method: str
    pmse: tuple[float, ...]

    @property
    def mean_pmse(self) -> float:
        return float(np.mean(self.pmse))


@dataclass(frozen=True)
class MonteCarloReport:
    """All cells of a study plus best-vs-runner-up significance calls.

    ``significance`` maps (dgp, T, m) to (best_method, runner_up, z_stat,
    significant): a paired two-sided normal test on the per-replication
    squared-error differences at the 95% level.
    """

    cells: tuple[MonteCarloCell, ...]
    replications: int
    base_seed: int
    significance: dict

    def cell(self, dgp: str, T: int, m: int, method: str) -> MonteCarloCell:
        for c in self.cells:
            if (c.dgp, c.T, c.m, c.method) == (dgp, T, m, method):
                return c
        raise KeyError((dgp, T, m, method))

    def mean(self, dgp: str, T: int, m: int, method: str) -> float:
        return self.cell(dgp, T, m, method).mean_pmse

    def csv_rows(self) -> list[tuple]:
        """One row per cell: dgp, T, m, method, replications, mean_pmse, best, significant."""
        rows = []
        for c in self.cells:
            best, _, _, signif = self.significance[(c.dgp, c.T, c.m)]
            rows.append((c.dgp, c.T, c.m, c.method, len(c.pmse),
                         c.mean_pmse, c.method == best, c.method == best and signif))
        return rows

    def format_table(self) -> str:
        """Text table per DGP, best cell bracketed, * when significant at 95%."""
        lines = []
        by_dgp: dict[str, list[MonteCarloCell]] = {}
        for c in self.cells:
            by_dgp.setdefault(c.dgp, []).append(c)
        for dgp, cells in by_dgp.items():
            methods = []
            for c in cells:
                if c.method not in methods:
                    methods.append(c.method)
            lines.append(f"DGP {dgp}  (replications={self.replications}, "
                         f"base_seed={self.base_seed})")
            header = f"{'T':>5} {'m':>5}" + "".join(f" {meth:>14}" for meth in methods)
            lines.append(header)
            sizes = []
            for c in cells:
                if (c.T, c.m) not in sizes:
                    sizes.append((c.T, c.m))
            for T, m in sizes:
                best, _, _, signif = self.significance[(dgp, T, m)]
                row = f"{T:>5} {m:>5}"
                for meth in methods:
                    value = self.mean(dgp, T, m, meth)
                    text = f"{value:.3f}"
                    if meth == best:
                        text = f"[{text}]" + ("*" if signif else "")
                    row += f" {text:>14}"
                lines.append(row)
            lines.append("")
        return "\n".join(lines)


def _method_labels(kind: str, methods, varma_odpc, varma_sw) -> list[str]:
    labels = []
    if kind == "VARMA":
        if "ODPC" in methods:
            labels += [f"ODPC({q},{k1},{k2})" for q, k1, k2 in varma_odpc]
        if "SW" in methods:
            labels += [f"SW({r})" for r in varma_sw]
    else:
        if "ODPC" in methods:
            labels.append("ODPC")
        if "SW" in methods:
            labels.append(f"SW({SW_FACTORS[kind]})")
    return labels


def _check_grid(kind: str, T: int, m: int, methods, varma_odpc, varma_sw) -> None:
    if kind == "VARMA":
        if "ODPC" in methods:
            for q, k1, k2 in varma_odpc:
                need = q * (k1 + k2) + k2 + 2
                if T < need:
                    raise ValueError(
                        f"infeasible grid: VARMA ODPC({q},{k1},{k2}) needs T >= {need}, got {T}")
        if "SW" in methods and any(r > min(T, m) for r in varma_sw):
            raise ValueError(f"infeasible grid: SW factor count exceeds min(T, m) = {min(T, m)}")
    else:
        k = FACTOR_LAGS[kind]
        if "ODPC" in methods and T < 3 * k + 2:
            raise ValueError(f"infeasible grid: {kind} ODPC needs T >= {3 * k + 2}, got {T}")
        if "SW" in methods and SW_FACTORS[kind] > min(T, m):
            raise ValueError(f"infeasible grid: SW needs min(T, m) >= {SW_FACTORS[kind]}")


def _replication_pmses(kind, T, m, rep, methods, base_seed, fit_options, max_order,
                       varma_odpc, varma_sw) -> dict[str, float]:
    sim = generate(kind, T, m, replication_seed(base_seed, kind, T, m, rep))
    train = sim.training_panel
    target = sim.holdout
    out: dict[str, float] = {}

    def pmse(forecast_row: np.ndarray) -> float:
        return float(np.mean((target - forecast_row) ** 2))

    if kind == "VARMA":
        if "ODPC" in methods:
            for q, k1, k2 in varma_odpc:
                model = fit_odpc(train, [(k1, k2)] * q, fit_options)
                out[f"ODPC({q},{k1},{k2})"] = pmse(forecast_panel(model, 1, max_order).values[0])
        if "SW" in methods:
            for r in varma_sw:
                out[f"SW({r})"] = pmse(sw_baseline_forecast(train, r, 1, max_order)[0])
    else:
        if "ODPC" in methods:
            k = FACTOR_LAGS[kind]
            model = fit_odpc(train, [(k, k)], fit_options)
            out["ODPC"] = pmse(forecast_panel(model, 1, max_order).values[0])
        if "SW" in methods:
            r = SW_FACTORS[kind]
            out[f"SW({r})"] = pmse(sw_baseline_forecast(train, r, 1, max_order)[0])
    return out


def _significance_call(cells: list[MonteCarloCell]) -> tuple[str, str | None, float, bool]:
    """Best method and whether it beats the runner-up at the 95% level."""
    order = sorted(cells, key=lambda c: (c.mean_pmse, c.method))
    best = order[0]
    if len(order) == 1:
        return best.method, None, 0.0, False
    runner = order[1]
    d = np.asarray(best.pmse) - np.asarray(runner.pmse)
    if d.size < 2:
        return best.method, runner.method, 0.0, False
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return best.method, runner.method, 0.0, False
    z = float(np.mean(d) / (sd / np.sqrt(d.size)))
    return best.method, runner.method, z, abs(z) > 1.959963984540054


def run_monte_carlo(dgps, grid, replications: int, methods=("ODPC", "SW"),
                    base_seed: int = 0, threads: int = 1,
                    fit_options: FitOptions | None = None, max_order: int = 10,
                    varma_odpc_configs=VARMA_ODPC_CONFIGS,
                    varma_sw_factors=VARMA_SW_FACTORS) -> MonteCarloReport:
    """Average PMSE study over seeded replications of the requested DGPs.

    For every (dgp, T, m) cell and replication, a panel of T+1 periods is
    simulated, each method is fitted on the first T periods, and the
    one-step forecast is scored against the held-out row T+1 (mean squared
    error across series). Replication streams are derived from ``base_seed``
    (see :func:`replication_seed`), so results do not depend on ``threads``.
    """
    dgps = [str(d) for d in dgps]
    for d in dgps:
        if d not in DGP_KINDS:
            raise ValueError(f"unknown DGP {d!r}; valid kinds: {', '.join(DGP_KINDS)}")
    grid = [(int(T), int(m)) for T, m in grid]
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    methods = tuple(methods)
    for meth in methods:
        if meth not in ("ODPC", "SW"):
            raise ValueError(f"unknown method family {meth!r}; valid: ODPC, SW")
    varma_odpc = tuple(tuple(int(x) for x in cfg) for cfg in varma_odpc_configs)
    varma_sw = tuple(int(r) for r in varma_sw_factors)
    for kind in dgps:
        for T, m in grid:
            DGPSpec(kind=kind, T=T, m=m, seed=0)   # validates dimensions
            _check_grid(kind, T, m, methods, varma_odpc, varma_sw)

    tasks = [(kind, T, m, rep) for kind in dgps for T, m in grid
             for rep in range(replications)]

    def work(task):
        kind, T, m, rep = task
        return task, _replication_pmses(kind, T, m, rep, methods, base_seed,
                                        fit_options, max_order, varma_odpc, varma_sw)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(work, tasks))
    else:
        results = dict(map(work, tasks))

    cells = []
    significance = {}
    for kind in dgps:
        for T, m in grid:
            group = []
            for label in _method_labels(kind, methods, varma_odpc, varma_sw):
                pmses = tuple(results[(kind, T, m, rep)][label]
                              for rep in range(replications))
                group.append(MonteCarloCell(dgp=kind, T=T, m=m, method=label, pmse=pmses))
            cells.extend(group)
            significance[(kind, T, m)] = _significance_call(group)

    return MonteCarloReport(cells=tuple(cells), replications=replications,
                            base_seed=int(base_seed), significance=significance)
