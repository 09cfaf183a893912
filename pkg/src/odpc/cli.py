"""Command-line interface: fit, forecast, simulate, evaluate, select-lags.

Exit codes: 0 on success, 1 on numeric failures (degenerate data,
non-finite results), 2 on configuration errors (bad flags, unreadable or
mismatched inputs). Every output file carries a provenance header with the
tool version and the resolved configuration, and contains no timestamps, so
a rerun with identical flags writes identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .core import DegenerateDataError, FitOptions
from .forecast import forecast_panel
from .model import fit_odpc, load_model, reconstruct, save_model
from .panel import load_panel
from .selection import (
    rolling_origin_evaluate,
    select_lags_stepwise_bic,
    select_lags_stepwise_cv,
)
from .simulate import DGP_KINDS, run_monte_carlo

_CONFIG_ERRORS = (ValueError, KeyError, OSError, json.JSONDecodeError)
_NUMERIC_ERRORS = (DegenerateDataError, FloatingPointError, OverflowError,
                   ZeroDivisionError, np.linalg.LinAlgError)


def _parse_lag_specs(text: str) -> list[tuple[int, int]]:
    """Parse "k1,k2" pairs separated by ';' into a lag-spec list."""
    specs = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValueError(f"bad lag spec {chunk!r}: expected 'k1,k2'")
        k1, k2 = (int(p) for p in parts)
        if k1 < 0:
            raise ValueError("k1 must be >= 0")
        if k2 < 0:
            raise ValueError("k2 must be >= 0")
        specs.append((k1, k2))
    return specs


def _parse_grid(text: str) -> list[tuple[int, int]]:
    grid = []
    for chunk in text.split(","):
        parts = chunk.lower().split("x")
        if len(parts) != 2:
            raise ValueError(f"bad grid cell {chunk!r}: expected 'TxM'")
        grid.append((int(parts[0]), int(parts[1])))
    return grid


def _parse_header(flag: str) -> bool | None:
    return {"auto": None, "yes": True, "no": False}[flag]


def _fit_options(args) -> FitOptions:
    return FitOptions(tolerance=args.tolerance, max_iterations=args.max_iter,
                      a_update=args.a_update)


def _provenance(args, command: str) -> dict:
    skip = {"func", "command"}
    config = {key: value for key, value in sorted(vars(args).items())
              if key not in skip and value is not None}
    return {"tool": "odpc", "version": __version__, "command": command, "config": config}


def _provenance_lines(prov: dict) -> list[str]:
    pairs = " ".join(f"{key}={value}" for key, value in sorted(prov["config"].items()))
    return [f"# odpc version={prov['version']} command={prov['command']}",
            f"# config: {pairs}"]


def _default_threads() -> int:
    env = os.environ.get("ODPC_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def cmd_fit(args) -> int:
    panel = load_panel(args.input, header=_parse_header(args.header),
                       delimiter=args.delimiter)
    specs = _parse_lag_specs(args.lags)
    model = fit_odpc(panel, specs, _fit_options(args))
    save_model(model, args.out, provenance=_provenance(args, "fit"))
    print(f"fitted {len(model.components)} component(s) on T={panel.T}, m={panel.m}")
    for i, comp in enumerate(model.components, start=1):
        print(f"  component {i}: k1={comp.k1} k2={comp.k2} mse={comp.mse:.6g} "
              f"iterations={comp.iterations} converged={comp.converged}")
    print(f"reconstruction covers periods {model.reconstructable_from}..{model.T}; "
          f"residual mse {model.mse():.6g}")
    print(f"model written to {args.out}")
    return 0


def cmd_forecast(args) -> int:
    panel = load_panel(args.input, header=_parse_header(args.header),
                       delimiter=args.delimiter)
    model = load_model(args.model, panel=panel)
    fc = forecast_panel(model, args.horizon, max_order=args.max_order)
    prov = _provenance(args, "forecast")
    if args.format == "json":
        doc = {"provenance": prov, **fc.to_dict(series_names=model.series_names)}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            for line in _provenance_lines(prov):
                fh.write(line + "\n")
            writer = csv.writer(fh)
            writer.writerow(model.series_names)
            for row in fc.values:
                writer.writerow([repr(float(x)) for x in row])
    print(f"{args.horizon}-step forecast for {model.m} series written to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    dgps = [d.strip() for d in args.dgp.split(",")]
    grid = _parse_grid(args.grid)
    methods = tuple(m.strip().upper() for m in args.methods.split(","))
    kwargs = {}
    if args.varma_odpc:
        kwargs["varma_odpc_configs"] = [tuple(int(x) for x in cfg.split(","))
                                        for cfg in args.varma_odpc.split(";")]
    if args.varma_sw:
        kwargs["varma_sw_factors"] = [int(r) for r in args.varma_sw.split(",")]
    report = run_monte_carlo(dgps, grid, args.reps, methods=methods,
                             base_seed=args.seed, threads=args.threads,
                             max_order=args.max_order, **kwargs)
    table = report.format_table()
    print(table, end="")
    if args.out:
        prov = _provenance(args, "simulate")
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            for line in _provenance_lines(prov):
                fh.write(line + "\n")
            writer = csv.writer(fh)
            writer.writerow(["dgp", "T", "m", "method", "replications",
                             "mean_pmse", "best", "significant"])
            for row in report.csv_rows():
                writer.writerow([row[0], row[1], row[2], row[3], row[4],
                                 repr(row[5]), row[6], row[7]])
        table_path = os.path.splitext(args.out)[0] + ".txt"
        with open(table_path, "w", encoding="utf-8") as fh:
            for line in _provenance_lines(prov):
                fh.write(line + "\n")
            fh.write(table)
        print(f"report written to {args.out} and {table_path}")
    return 0


def cmd_evaluate(args) -> int:
    panel = load_panel(args.input, header=_parse_header(args.header),
                       delimiter=args.delimiter)
    specs = _parse_lag_specs(args.lags)
    horizons = [int(h) for h in args.horizons.split(",")]
    targets = [t.strip() for t in args.targets.split(",")] if args.targets else None
    fit_opts = _fit_options(args)

    def odpc_forecaster(train_panel, h):
        model = fit_odpc(train_panel, specs, fit_opts)
        shortest = min(c.f.size for c in model.components)
        cap = max(0, min(args.max_order, shortest - 3))
        return forecast_panel(model, h, max_order=cap).values

    report = rolling_origin_evaluate(
        panel, odpc_forecaster, window=args.window, horizons=horizons,
        n_origins=args.origins, targets=targets, target_mode=args.target_mode,
        method_name="odpc", max_order=args.max_order)
    prov = _provenance(args, "evaluate")
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        for line in _provenance_lines(prov):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["method", "series", "horizon", "origin", "error"])
        for method, series, horizon, origin, error in report.rows():
            writer.writerow([method, series, horizon, origin, repr(error)])
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump({"provenance": prov, "window": report.window,
                       "horizons": list(report.horizons),
                       "target_mode": report.target_mode,
                       "rmse": report.summary()}, fh, indent=2)
            fh.write("\n")
    for series in report.series:
        for h in report.horizons:
            print(f"odpc {series} h={h}: rmse={report.rmse('odpc', series, h):.6g} "
                  f"relative={report.relative_rmse('odpc', series, h):.4f}")
    print(f"errors written to {args.out}")
    return 0


def cmd_select_lags(args) -> int:
    panel = load_panel(args.input, header=_parse_header(args.header),
                       delimiter=args.delimiter)
    fit_opts = _fit_options(args)
    if args.method == "cv":
        result = select_lags_stepwise_cv(panel, args.kmax, h=args.horizon,
                                         n_folds=args.folds, options=fit_opts,
                                         max_components=args.max_components,
                                         max_order=args.max_order)
    else:
        result = select_lags_stepwise_bic(panel, args.kmax, options=fit_opts,
                                          max_components=args.max_components)
    print(f"criterion={result.criterion} chosen lag_specs="
          f"{';'.join(f'{k1},{k2}' for k1, k2 in result.lag_specs) or '(none)'}")
    for stage, k, value in result.table:
        print(f"  stage {stage} k={k}: {value:.6g}")
    if args.out:
        doc = {"provenance": _provenance(args, "select-lags"),
               "criterion": result.criterion,
               "lag_specs": [list(s) for s in result.lag_specs],
               "stopping_stage": result.stopping_stage,
               "table": [{"stage": s, "k": k, "value": v} for s, k, v in result.table]}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        print(f"selection written to {args.out}")
    return 0


def _add_io_flags(sub, needs_input=True):
    if needs_input:
        sub.add_argument("--input", "-i", required=True, help="panel CSV, one row per period")
        sub.add_argument("--header", choices=("auto", "yes", "no"), default="auto",
                         help="whether the CSV has a header row (default: auto-detect)")
        sub.add_argument("--delimiter", default=",", help="CSV delimiter (default ',')")


def _add_fit_flags(sub):
    sub.add_argument("--tolerance", type=float, default=1e-4,
                     help="relative MSE decrease that stops the fit (default 1e-4)")
    sub.add_argument("--max-iter", type=int, default=500,
                     help="iteration cap per component (default 500)")
    sub.add_argument("--a-update", choices=("auto", "full_least_squares",
                                            "coordinate_descent"), default="auto",
                     help="weight update rule (default auto: full LS up to 200 weights)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odpc",
        description="One-sided dynamic principal components: fit, forecast, "
                    "simulate, evaluate, select-lags.")
    parser.add_argument("--version", action="version", version=f"odpc {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit components to a panel CSV")
    _add_io_flags(fit)
    fit.add_argument("--lags", required=True,
                     help="lag specs 'k1,k2' per component, ';'-separated, e.g. '2,2;1,1'")
    fit.add_argument("--out", "-o", required=True, help="model JSON output path")
    _add_fit_flags(fit)
    fit.set_defaults(func=cmd_fit)

    fc = commands.add_parser("forecast", help="forecast a panel from a fitted model")
    _add_io_flags(fc)
    fc.add_argument("--model", required=True, help="model JSON written by 'fit'")
    fc.add_argument("--horizon", type=int, default=1, help="steps ahead (default 1)")
    fc.add_argument("--max-order", type=int, default=10,
                    help="AR order cap for component forecasts (default 10)")
    fc.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="output format (default csv)")
    fc.add_argument("--out", "-o", required=True, help="forecast output path")
    fc.set_defaults(func=cmd_forecast)

    sim = commands.add_parser("simulate", help="run the Monte Carlo PMSE study")
    sim.add_argument("--dgp", required=True,
                     help=f"comma-separated DGP names from: {', '.join(DGP_KINDS)}")
    sim.add_argument("--grid", required=True, help="panel sizes 'TxM', comma-separated")
    sim.add_argument("--reps", type=int, default=100, help="replications per cell (default 100)")
    sim.add_argument("--methods", default="odpc,sw",
                     help="method families to run (default odpc,sw)")
    sim.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    sim.add_argument("--threads", type=int, default=_default_threads(),
                     help="worker threads (default $ODPC_THREADS or 1)")
    sim.add_argument("--max-order", type=int, default=10,
                     help="AR order cap for component forecasts (default 10)")
    sim.add_argument("--varma-odpc", default=None,
                     help="VARMA ODPC configs 'q,k1,k2' ';'-separated "
                          "(default 1,1,1;2,1,1;5,1,1)")
    sim.add_argument("--varma-sw", default=None,
                     help="VARMA SW factor counts, comma-separated (default 2,6,10)")
    sim.add_argument("--out", "-o", default=None,
                     help="report CSV path (a .txt table is written alongside)")
    sim.set_defaults(func=cmd_simulate)

    ev = commands.add_parser("evaluate", help="rolling-origin backtest on a panel CSV")
    _add_io_flags(ev)
    ev.add_argument("--lags", required=True, help="lag specs for the fitted model")
    ev.add_argument("--window", type=int, required=True, help="training window length")
    ev.add_argument("--horizons", default="1", help="comma-separated horizons (default 1)")
    ev.add_argument("--origins", type=int, default=10,
                    help="number of rolling origins (default 10)")
    ev.add_argument("--targets", default=None,
                    help="comma-separated target series names (default: all)")
    ev.add_argument("--target-mode", choices=("level_sum", "last_value"),
                    default="level_sum",
                    help="error target: h-step sum of values or the h-th value "
                         "(default level_sum)")
    ev.add_argument("--max-order", type=int, default=10,
                    help="AR order cap (default 10)")
    _add_fit_flags(ev)
    ev.add_argument("--out", "-o", required=True, help="long-format error CSV path")
    ev.add_argument("--summary", default=None, help="optional JSON summary path")
    ev.set_defaults(func=cmd_evaluate)

    sel = commands.add_parser("select-lags", help="stepwise lag/component selection")
    _add_io_flags(sel)
    sel.add_argument("--kmax", type=int, default=5, help="largest lag candidate (default 5)")
    sel.add_argument("--method", choices=("cv", "bic"), default="cv",
                     help="selection criterion (default cv)")
    sel.add_argument("--horizon", type=int, default=1,
                     help="forecast horizon for cv (default 1)")
    sel.add_argument("--folds", type=int, default=10,
                     help="rolling origins for cv (default 10)")
    sel.add_argument("--max-components", type=int, default=5,
                     help="cap on the number of components (default 5)")
    sel.add_argument("--max-order", type=int, default=10,
                     help="AR order cap for cv forecasts (default 10)")
    _add_fit_flags(sel)
    sel.add_argument("--out", "-o", default=None, help="optional JSON result path")
    sel.set_defaults(func=cmd_select_lags)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
