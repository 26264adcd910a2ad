"""Two-stage hybrid forecaster: an exogenous-variable model (linear or
additive) fit on the log-demand series, plus a seasonal ARIMA model fit
on that model's residuals.

Both stages operate in log space; the two stage outputs add exactly and
a single exponential back-transform produces kW-scale forecasts.  Over
long horizons the residual correction decays toward the residual
process mean, so the forecast becomes exogenous-model-driven.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError
from .features import FeatureMatrix
from .gam import GamConfig, GamFit, SmoothTerm, basis_from_knots, fit_gam, predict_gam
from .linear import OlsFit, fit_ols
from .sarima import SarimaFit, SarimaOrder, fit_sarima, forecast_sarima
from .timeseries import HourlyTimeSeries

ExogModel = Union[OlsFit, GamFit]


@dataclass(frozen=True)
class HybridModel:
    """Exogenous stage plus a residual time-series stage, both in log
    space; the residual stage is trained on exactly the exogenous
    stage's residual vector."""

    exog_model: ExogModel
    residual_model: SarimaFit
    columns: tuple[str, ...]
    log_space: bool = True

    def predict_exog(self, X: FeatureMatrix) -> np.ndarray:
        if isinstance(self.exog_model, GamFit):
            return predict_gam(self.exog_model, X)
        return self.exog_model.predict(X)

    @property
    def n_params(self) -> float:
        exog = self.exog_model
        exog_count = exog.n_params if isinstance(exog, OlsFit) else exog.n_params
        return exog_count + self.residual_model.n_params


def fit_hybrid(
    X: FeatureMatrix,
    y_log: np.ndarray,
    exog_config: Union[str, GamConfig],
    residual_order: SarimaOrder,
) -> HybridModel:
    """Stage 1 fits the exogenous model on the log series; stage 2 fits
    the residual series r_t = y_t - yhat_t with the given order.

    ``exog_config`` is either the string "mlr" for a plain linear model
    or a GamConfig describing the smooth terms.
    """
    y_log = np.asarray(y_log, dtype=np.float64)
    if isinstance(exog_config, str):
        if exog_config != "mlr":
            raise InputError(f"unknown exogenous model kind {exog_config!r}")
        exog: ExogModel = fit_ols(X, y_log)
    else:
        exog = fit_gam(X, y_log, exog_config)
    residual_model = fit_sarima(exog.residuals, residual_order)
    return HybridModel(
        exog_model=exog, residual_model=residual_model, columns=X.columns
    )


def hybrid_training_rss(model: HybridModel) -> float:
    """Sum of squared one-step-ahead innovations of the residual stage:
    the in-sample RSS of the full hybrid over the conditioned rows."""
    eps = model.residual_model.residuals
    return float(eps @ eps)


def forecast_hybrid(
    model: HybridModel, X_future: FeatureMatrix, horizon: int | None = None
) -> HourlyTimeSeries:
    """kW-scale point forecasts over the future exogenous rows.

    The log-space forecast is the exact elementwise sum of the exogenous
    prediction and the residual-model forecast; the back-transform is
    applied exactly once.
    """
    if horizon is None:
        horizon = X_future.n_rows
    if horizon != X_future.n_rows:
        raise InputError(
            f"horizon {horizon} does not match {X_future.n_rows} future rows"
        )
    if X_future.columns != model.columns:
        raise InputError("future feature columns do not match the fitted model")
    exog_pred = model.predict_exog(X_future)
    correction = forecast_sarima(model.residual_model, horizon)
    forecast_log = exog_pred + correction
    return HourlyTimeSeries(
        start=X_future.start,
        values=np.exp(forecast_log),
        log_scale=False,
    )


def forecast_components(
    model: HybridModel, X_future: FeatureMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """(exogenous log prediction, residual log correction) pair whose sum
    is the log-space forecast; used for convergence diagnostics."""
    exog_pred = model.predict_exog(X_future)
    correction = forecast_sarima(model.residual_model, X_future.n_rows)
    return exog_pred, correction


def _ols_to_dict(fit: OlsFit) -> dict:
    return {"kind": "mlr", "alpha": fit.alpha, "betas": fit.betas}


def _gam_to_dict(fit: GamFit) -> dict:
    return {
        "kind": "gam",
        "alpha": fit.alpha,
        "linear_betas": fit.linear_betas,
        "smooths": [
            {
                "name": s.name,
                "knots": s.basis.knots,
                "transform": s.transform,
                "gamma": s.gamma,
                "lam": s.lam,
                "penalty_scale": s.penalty_scale,
                "edf": s.edf,
            }
            for s in fit.smooths
        ],
    }


def hybrid_to_bundle(model: HybridModel) -> dict:
    """Serializable payload: both stages plus the feature-column
    contract the prediction path enforces."""
    exog = model.exog_model
    exog_payload = (
        _ols_to_dict(exog) if isinstance(exog, OlsFit) else _gam_to_dict(exog)
    )
    return {
        "columns": list(model.columns),
        "log_space": model.log_space,
        "exog_model": exog_payload,
        "residual_model": model.residual_model.to_dict(),
    }


def _empty() -> np.ndarray:
    return np.empty(0)


def hybrid_from_bundle(payload: dict) -> HybridModel:
    exog_payload = payload["exog_model"]
    if exog_payload["kind"] == "mlr":
        exog: ExogModel = OlsFit(
            alpha=float(exog_payload["alpha"]),
            betas={k: float(v) for k, v in exog_payload["betas"].items()},
            fitted=_empty(),
            residuals=_empty(),
            rss=float("nan"),
            tss=float("nan"),
            r2=float("nan"),
            adj_r2=float("nan"),
        )
    elif exog_payload["kind"] == "gam":
        smooths = tuple(
            SmoothTerm(
                name=s["name"],
                basis=basis_from_knots(np.asarray(s["knots"], dtype=np.float64)),
                transform=np.asarray(s["transform"], dtype=np.float64),
                gamma=np.asarray(s["gamma"], dtype=np.float64),
                lam=float(s["lam"]),
                penalty_scale=float(s["penalty_scale"]),
                edf=float(s["edf"]),
            )
            for s in exog_payload["smooths"]
        )
        exog = GamFit(
            alpha=float(exog_payload["alpha"]),
            linear_betas={
                k: float(v) for k, v in exog_payload["linear_betas"].items()
            },
            smooths=smooths,
            fitted=_empty(),
            residuals=_empty(),
            rss=float("nan"),
            tss=float("nan"),
            r2=float("nan"),
            adj_r2=float("nan"),
            edf_total=float("nan"),
            gcv=float("nan"),
            gcv_fallback=False,
        )
    else:
        raise InputError(f"unknown exogenous model kind {exog_payload['kind']!r}")
    return HybridModel(
        exog_model=exog,
        residual_model=SarimaFit.from_dict(payload["residual_model"]),
        columns=tuple(payload["columns"]),
        log_space=bool(payload.get("log_space", True)),
    )
