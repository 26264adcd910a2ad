"""Command-line surface: clean, select, compare, forecast, simulate.

Exit codes: 0 success, 1 model/selection failure, 2 input/format
failure.  All outputs are deterministic given identical inputs and
seed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import io
from .errors import InputError, ModelError
from .evaluation import (
    DEFAULT_CANDIDATES,
    DatasetBundle,
    SplitSpec,
    run_framework,
    select_best,
)
from .features import FeatureOptions, assemble_feature_matrix
from .gam import GamConfig
from .hybrid import fit_hybrid, forecast_hybrid, hybrid_to_bundle
from .linear import cv_lasso, select_variables
from .sarima import seasonal_order_grid, stepwise_order_search
from .synth import ScenarioSpec, generate
from .timeseries import aggregate_to_hourly, fill_gaps, log_transform

log = logging.getLogger("demandcast")

DEFAULT_SEED = 1729


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demandcast",
        description="Long-horizon hourly electric demand forecasting.",
    )
    parser.add_argument("--config", help="INI-style run configuration file")
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument(
        "--log-level",
        default="warning",
        choices=["debug", "info", "warning", "error"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_clean = sub.add_parser("clean", help="aggregate and gap-fill a demand CSV")
    p_clean.add_argument("--demand", help="demand CSV (overrides config)")
    p_clean.add_argument(
        "--log-scale", action="store_true", help="also write the log-transformed series"
    )

    p_select = sub.add_parser("select", help="variable selection by penalized regression")
    p_select.add_argument("--folds", type=int, default=None)
    p_select.add_argument(
        "--lambda-grid", default=None,
        help="comma-separated explicit penalty grid (overrides the log-spaced path)",
    )

    p_compare = sub.add_parser("compare", help="fit and rank candidate models")
    p_compare.add_argument(
        "--candidates",
        default=None,
        help="comma-separated candidate names (default: all families)",
    )

    p_forecast = sub.add_parser("forecast", help="fit the chosen model and forecast")
    p_forecast.add_argument("--model", default=None, help="candidate name to fit")

    sub.add_parser("simulate", help="generate a synthetic dataset bundle")
    return parser


def _load_config(args) -> dict[str, dict[str, str]]:
    if not args.config:
        return {}
    return io.parse_config(args.config)


def _cfg(config: dict, section: str, key: str, default=None):
    return config.get(section, {}).get(key, default)


def _require(config: dict, section: str, key: str) -> str:
    value = _cfg(config, section, key)
    if value is None:
        raise InputError(f"config is missing [{section}] {key}")
    return value


def _load_dataset(config: dict) -> tuple[DatasetBundle, dict]:
    demand_path = _require(config, "data", "demand")
    raw = io.read_demand_csv(demand_path)
    hourly = aggregate_to_hourly(raw)
    cleaned, report = fill_gaps(hourly)
    weather = io.read_weather_csv(_require(config, "data", "weather"))
    occupancy = io.read_occupancy_csv(_require(config, "data", "occupancy"))
    cal = io.parse_calendar(_require(config, "data", "calendar"))
    include_humidity = _cfg(config, "features", "include_humidity", "true")
    options = FeatureOptions(
        include_humidity=str(include_humidity).lower() in ("1", "true", "yes")
    )
    features = assemble_feature_matrix(cleaned, weather, occupancy, cal, options)
    return DatasetBundle(cleaned, features), report.to_dict()


def _split_from_config(config: dict, n: int) -> SplitSpec:
    train_hours = int(_cfg(config, "split", "train_hours", 8760))
    test_hours = _cfg(config, "split", "test_hours")
    hi = n if test_hours is None else train_hours + int(test_hours)
    label = _cfg(config, "split", "label", "")
    return SplitSpec((0, train_hours), (train_hours, hi), label)


def _cmd_clean(args, config: dict, out_dir: Path) -> int:
    demand_path = args.demand or _require(config, "data", "demand")
    raw = io.read_demand_csv(demand_path)
    hourly = aggregate_to_hourly(raw)
    cleaned, report = fill_gaps(hourly)
    io.write_hourly_csv(cleaned, out_dir / "cleaned_hourly.csv")
    io.write_json(report.to_dict(), out_dir / "cleaning_report.json")
    if args.log_scale:
        io.write_hourly_csv(log_transform(cleaned), out_dir / "cleaned_log.csv")
    log.info("wrote %d cleaned hours", len(cleaned))
    print(f"cleaned {len(cleaned)} hours -> {out_dir / 'cleaned_hourly.csv'}")
    return 0


def _cmd_select(args, config: dict, out_dir: Path) -> int:
    bundle, _ = _load_dataset(config)
    split = _split_from_config(config, len(bundle.demand))
    t0, t1 = split.train_range
    y_log = log_transform(bundle.demand).values
    folds = args.folds or int(_cfg(config, "lasso", "folds", 10))
    grid = None
    if args.lambda_grid:
        grid = np.array([float(v) for v in args.lambda_grid.split(",")])
    result = cv_lasso(
        bundle.features.rows(t0, t1), y_log[t0:t1], k=folds, grid=grid
    )
    retained = select_variables(result)
    payload = {
        "best_lambda": result.best_lambda,
        "retained": list(retained),
        "coefficients": result.fit.betas,
        "intercept": result.fit.alpha,
    }
    io.write_json(payload, out_dir / "selection.json")
    print(f"best lambda: {result.best_lambda:.6g}")
    print("retained variables: " + ", ".join(retained))
    for name, beta in result.fit.betas.items():
        print(f"  {name}: {beta:.6g}")
    return 0


def _compare_kwargs(config: dict) -> dict:
    kwargs = {}
    if _cfg(config, "model", "season_length") is not None:
        kwargs["season_length"] = int(config["model"]["season_length"])
    if _cfg(config, "model", "gam_basis_dim") is not None:
        kwargs["gam_basis_dim"] = int(config["model"]["gam_basis_dim"])
    if _cfg(config, "model", "max_p") is not None:
        kwargs["max_p"] = int(config["model"]["max_p"])
    if _cfg(config, "model", "max_q") is not None:
        kwargs["max_q"] = int(config["model"]["max_q"])
    if _cfg(config, "lasso", "folds") is not None:
        kwargs["lasso_folds"] = int(config["lasso"]["folds"])
    if _cfg(config, "metrics", "threshold_kw") is not None:
        kwargs["threshold"] = float(config["metrics"]["threshold_kw"])
    return kwargs


def _cmd_compare(args, config: dict, out_dir: Path, seed: int) -> int:
    bundle, _ = _load_dataset(config)
    split = _split_from_config(config, len(bundle.demand))
    if args.candidates:
        candidates = tuple(c.strip() for c in args.candidates.split(",") if c.strip())
    else:
        cfg_list = _cfg(config, "model", "candidates")
        candidates = (
            tuple(c.strip() for c in cfg_list.split(",")) if cfg_list else DEFAULT_CANDIDATES
        )
    table = run_framework(
        bundle, split, candidates=candidates, seed=seed, **_compare_kwargs(config)
    )
    table.to_csv(out_dir / "comparison.csv")
    (out_dir / "comparison.txt").write_text(table.to_text() + "\n")
    print(table.to_text())
    best = select_best(table)
    print(f"selected: {best[0]} [{best[1]}]")
    return 0


def _cmd_forecast(args, config: dict, out_dir: Path, seed: int) -> int:
    bundle, _ = _load_dataset(config)
    split = _split_from_config(config, len(bundle.demand))
    t0, t1 = split.train_range
    y_log = log_transform(bundle.demand).values

    model_name = args.model or _cfg(config, "model", "name", "gam1+sarima")
    gam_dim = int(_cfg(config, "model", "gam_basis_dim", 10))
    season = int(_cfg(config, "model", "season_length", 24))

    # Variable selection on the training range only.
    cv = cv_lasso(
        bundle.features.rows(t0, t1),
        y_log[t0:t1],
        k=int(_cfg(config, "lasso", "folds", 10)),
    )
    retained = select_variables(cv)
    X_sel = bundle.features.select(retained)
    X_train = X_sel.rows(t0, t1)
    y_train = y_log[t0:t1]

    if "+" not in model_name:
        raise InputError(
            f"forecast command expects a hybrid candidate, got {model_name!r}"
        )
    exog_name, ts_name = model_name.split("+", 1)
    exog_config = {
        "mlr": "mlr",
        "gam1": GamConfig.gam1(gam_dim),
        "gam2": GamConfig.gam2(gam_dim),
    }.get(exog_name)
    if exog_config is None or ts_name not in ("sarima", "arima"):
        raise InputError(f"unknown model {model_name!r}")

    from .linear import fit_ols
    from .gam import fit_gam

    stage1 = (
        fit_ols(X_train, y_train)
        if exog_config == "mlr"
        else fit_gam(X_train, y_train, exog_config)
    )
    order = stepwise_order_search(stage1.residuals)
    if ts_name == "sarima":
        order = seasonal_order_grid(stage1.residuals, order, m=season)
    model = fit_hybrid(X_train, y_train, exog_config, order)
    io.save_model_bundle(hybrid_to_bundle(model), out_dir / "model.json")

    # Future exogenous rows: explicit future files if configured,
    # otherwise the held-out remainder of the dataset.
    if _cfg(config, "data", "future_weather") is not None:
        weather = io.read_weather_csv(config["data"]["future_weather"])
        occupancy = io.read_occupancy_csv(config["data"]["future_occupancy"])
        cal = io.parse_calendar(
            _cfg(config, "data", "future_calendar")
            or _require(config, "data", "calendar")
        )
        stamps = sorted(weather)
        from .timeseries import HourlyTimeSeries

        shell = HourlyTimeSeries(
            start=stamps[0], values=np.ones(len(stamps)), log_scale=False
        )
        include_humidity = "humidity" in retained
        X_future_all = assemble_feature_matrix(
            shell, weather, occupancy, cal,
            FeatureOptions(include_humidity=include_humidity),
        )
        # The hour index must continue the training clock, not restart.
        offset = (stamps[0] - bundle.demand.start).total_seconds() / 3600.0
        X_future_all.data[:, X_future_all.columns.index("time_step")] += offset
        X_future = X_future_all.select(retained)
        actual = None
    else:
        s0, s1 = split.test_range
        X_future = X_sel.rows(s0, s1)
        actual = bundle.demand.slice(s0, s1)

    forecast = forecast_hybrid(model, X_future)
    stamps = forecast.timestamps()
    with open(out_dir / "forecast.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "forecast_kw"])
        for ts, v in zip(stamps, forecast.values):
            writer.writerow([ts.isoformat(sep=" "), f"{v:.6f}"])
    with open(out_dir / "plot_data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "actual_kw", "forecast_kw"])
        for i, (ts, v) in enumerate(zip(stamps, forecast.values)):
            a = f"{actual.values[i]:.6f}" if actual is not None else ""
            writer.writerow([ts.isoformat(sep=" "), a, f"{v:.6f}"])
    print(
        f"forecast horizon {len(forecast)} hours with {model_name} "
        f"[{order.label()}] -> {out_dir / 'forecast.csv'}"
    )
    return 0


def _scenario_from_config(config: dict, seed: int) -> ScenarioSpec:
    section = config.get("scenario", {})
    kwargs: dict = {"seed": seed}
    for key in ("years", "start_year"):
        if key in section:
            kwargs[key] = int(section[key])
    for key in (
        "base_load_kw",
        "annual_growth_pct",
        "cooling_slope",
        "balance_temp_c",
        "occupancy_coefficient",
        "base_fte",
        "residual_sigma",
    ):
        if key in section:
            kwargs[key] = float(section[key])
    return ScenarioSpec(**kwargs)


def _cmd_simulate(args, config: dict, out_dir: Path, seed: int) -> int:
    spec = _scenario_from_config(config, seed)
    bundle = generate(spec)
    stamps = bundle.demand.timestamps()
    io.write_hourly_csv(bundle.demand, out_dir / "demand.csv")
    temp = [bundle.weather[ts][0] for ts in stamps]
    rh = [bundle.weather[ts][1] for ts in stamps]
    io.write_weather_csv(out_dir / "weather.csv", stamps, temp, rh)
    io.write_occupancy_csv(
        out_dir / "occupancy.csv", stamps, [bundle.occupancy[ts] for ts in stamps]
    )
    io.write_calendar(out_dir / "calendar.txt", bundle.calendar)
    print(f"simulated {len(bundle.demand)} hours -> {out_dir}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        config = _load_config(args)
        if args.command == "clean":
            return _cmd_clean(args, config, out_dir)
        if args.command == "select":
            return _cmd_select(args, config, out_dir)
        if args.command == "compare":
            return _cmd_compare(args, config, out_dir, seed)
        if args.command == "forecast":
            return _cmd_forecast(args, config, out_dir, seed)
        if args.command == "simulate":
            return _cmd_simulate(args, config, out_dir, seed)
        raise InputError(f"unknown command {args.command!r}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
