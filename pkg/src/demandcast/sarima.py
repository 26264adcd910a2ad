"""Seasonal ARIMA: specification, conditional-sum-of-squares estimation,
simulation, forecasting, and automatic order selection.

The model is (1 - phi_1 B - ...)(1 - Phi_1 B^m - ...) (1-B)^d (1-B^m)^D y_t
= (1 + theta_1 B + ...)(1 + Theta_1 B^m + ...) eps_t.  Estimation
minimizes the conditional sum of squares of the innovations (first p'
differenced observations used as fixed starting values, pre-sample
errors zero) with a quasi-Newton optimizer over a stationarity- and
invertibility-preserving reparameterization.
"""

from __future__ import annotations

import warnings as _warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from ._kernels import arma_forecast, arma_simulate, css_innovations
from .errors import ConvergenceError, InputError, ModelError
from .timeseries import difference, undifference_forecast

MAX_ITER = 500
GRAD_TOL = 1e-8
PACF_BOUNDARY = 0.999
MIN_COEF = 0.01


@dataclass(frozen=True)
class SarimaOrder:
    """(p, d, q)(P, D, Q)m specification."""

    p: int = 0
    d: int = 0
    q: int = 0
    P: int = 0
    D: int = 0
    Q: int = 0
    m: int = 1

    def __post_init__(self):
        if min(self.p, self.d, self.q, self.P, self.D, self.Q) < 0:
            raise InputError("all order components must be non-negative")
        if self.P + self.D + self.Q > 0 and self.m < 2:
            raise InputError("seasonal terms require season length m >= 2")
        if self.p + self.q + self.P + self.Q > 12:
            raise InputError("order too large: p+q+P+Q must not exceed 12")

    @property
    def n_coeffs(self) -> int:
        return self.p + self.q + self.P + self.Q

    def label(self) -> str:
        base = f"({self.p},{self.d},{self.q})"
        if self.P + self.D + self.Q > 0:
            return base + f"({self.P},{self.D},{self.Q}){self.m}"
        return base


def expand_polynomials(
    order: SarimaOrder,
    phi: np.ndarray,
    Phi: np.ndarray,
    theta: np.ndarray,
    Theta: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Multiply the non-seasonal and seasonal lag polynomials into full
    AR and MA polynomials in powers of the backshift operator."""
    ar = np.zeros(order.p + 1)
    ar[0] = 1.0
    ar[1:] = -np.asarray(phi, dtype=np.float64)
    sar = np.zeros(order.P * order.m + 1)
    sar[0] = 1.0
    for i in range(order.P):
        sar[(i + 1) * order.m] = -Phi[i]
    ma = np.zeros(order.q + 1)
    ma[0] = 1.0
    ma[1:] = np.asarray(theta, dtype=np.float64)
    sma = np.zeros(order.Q * order.m + 1)
    sma[0] = 1.0
    for i in range(order.Q):
        sma[(i + 1) * order.m] = Theta[i]
    return np.convolve(ar, sar), np.convolve(ma, sma)


def _pacf_to_ar(pacf: np.ndarray) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations to AR
    coefficients; |pacf| < 1 guarantees a stationary polynomial."""
    phi = np.zeros(len(pacf))
    for k in range(len(pacf)):
        new = phi.copy()
        new[k] = pacf[k]
        for j in range(k):
            new[j] = phi[j] - pacf[k] * phi[k - 1 - j]
        phi = new
    return phi


def _ar_to_pacf(phi: np.ndarray) -> np.ndarray:
    """Inverse Durbin-Levinson; raises for non-stationary input."""
    phi = np.array(phi, dtype=np.float64)
    k = len(phi)
    pacf = np.zeros(k)
    for i in range(k - 1, -1, -1):
        a = phi[i]
        pacf[i] = a
        if abs(a) >= 1.0:
            raise ModelError("coefficients outside the stationarity region")
        if i > 0:
            phi = (phi[:i] + a * phi[i - 1 :: -1]) / (1.0 - a * a)
    return pacf


def _unconstrained_to_coeffs(u: np.ndarray) -> np.ndarray:
    return _pacf_to_ar(np.tanh(u))


def _coeffs_to_unconstrained(phi: np.ndarray, clip: float = 0.97) -> np.ndarray:
    try:
        pacf = _ar_to_pacf(phi)
    except ModelError:
        pacf = np.zeros(len(phi))
    return np.arctanh(np.clip(pacf, -clip, clip))


def _split_params(u: np.ndarray, order: SarimaOrder):
    p, q, P, Q = order.p, order.q, order.P, order.Q
    phi = _unconstrained_to_coeffs(u[:p])
    theta = -_unconstrained_to_coeffs(u[p : p + q])
    Phi = _unconstrained_to_coeffs(u[p + q : p + q + P])
    Theta = -_unconstrained_to_coeffs(u[p + q + P :])
    return phi, theta, Phi, Theta


@dataclass(frozen=True)
class SarimaFit:
    """CSS-estimated seasonal ARIMA with everything needed to forecast."""

    order: SarimaOrder
    phi: np.ndarray
    Phi: np.ndarray
    theta: np.ndarray
    Theta: np.ndarray
    sigma2: float
    residuals: np.ndarray
    loglik_css: float
    aicc: float
    training_mean: float
    css_history: np.ndarray
    warnings: tuple[str, ...]
    _training_values: np.ndarray = field(repr=False, default=None)

    @property
    def n_params(self) -> int:
        # Coefficients plus sigma^2, plus the mean when one is estimated.
        extra = 2 if self.order.d + self.order.D == 0 else 1
        return self.order.n_coeffs + extra

    def polynomials(self) -> tuple[np.ndarray, np.ndarray]:
        return expand_polynomials(
            self.order, self.phi, self.Phi, self.theta, self.Theta
        )

    def to_dict(self) -> dict:
        o = self.order
        return {
            "order": [o.p, o.d, o.q, o.P, o.D, o.Q, o.m],
            "phi": self.phi,
            "Phi": self.Phi,
            "theta": self.theta,
            "Theta": self.Theta,
            "sigma2": self.sigma2,
            "training_mean": self.training_mean,
            "aicc": self.aicc,
            "training_values": self._training_values,
        }

    @staticmethod
    def from_dict(payload: dict) -> "SarimaFit":
        order = SarimaOrder(*payload["order"])
        values = np.asarray(payload["training_values"], dtype=np.float64)
        fit = SarimaFit(
            order=order,
            phi=np.asarray(payload["phi"], dtype=np.float64),
            Phi=np.asarray(payload["Phi"], dtype=np.float64),
            theta=np.asarray(payload["theta"], dtype=np.float64),
            Theta=np.asarray(payload["Theta"], dtype=np.float64),
            sigma2=float(payload["sigma2"]),
            residuals=np.empty(0),
            loglik_css=float("nan"),
            aicc=float(payload["aicc"]),
            training_mean=float(payload["training_mean"]),
            css_history=np.empty(0),
            warnings=(),
            _training_values=values,
        )
        return fit


def _hannan_rissanen_init(w: np.ndarray, order: SarimaOrder) -> np.ndarray:
    """Deterministic starting point: long-AR residuals, then regress the
    series on its own lags and lagged residuals."""
    p, q, P, Q = order.p, order.q, order.P, order.Q
    u0 = np.zeros(order.n_coeffs)
    if p + q == 0:
        return u0
    n = len(w)
    k = min(max(20, 2 * (p + q)), n // 4)
    if n - k <= p + q + 1:
        return u0
    # Long autoregression for innovation estimates.
    cols = [w[k - j : n - j] for j in range(1, k + 1)]
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, w[k:], rcond=None)
    eps = np.zeros(n)
    eps[k:] = w[k:] - A @ coef
    lag0 = max(p, q)
    rows = n - k - lag0
    if rows <= p + q + 1:
        return u0
    t0 = k + lag0
    design = [w[t0 - j : n - j] for j in range(1, p + 1)]
    design += [eps[t0 - j : n - j] for j in range(1, q + 1)]
    B = np.column_stack(design) if design else np.empty((rows, 0))
    beta, *_ = np.linalg.lstsq(B, w[t0:], rcond=None)
    phi0 = beta[:p]
    theta0 = beta[p : p + q]
    u0[:p] = _coeffs_to_unconstrained(phi0)
    u0[p : p + q] = _coeffs_to_unconstrained(-theta0)
    return u0


def fit_sarima(values: np.ndarray, order: SarimaOrder) -> SarimaFit:
    """Estimate coefficients and innovation variance by minimizing the
    conditional sum of squares of the differenced series."""
    x = np.asarray(values, dtype=np.float64)
    need = 10 * order.n_coeffs + order.d + order.D * order.m
    if len(x) <= max(need, order.d + order.D * order.m + order.p + order.P * order.m + 1):
        raise InputError(
            f"series of length {len(x)} too short for order {order.label()}"
        )
    w = difference(x, order.d, order.D, order.m)
    mu = float(w.mean()) if order.d + order.D == 0 else 0.0
    wc = w - mu

    def objective(u: np.ndarray) -> float:
        phi, theta, Phi, Theta = _split_params(u, order)
        ar_poly, ma_poly = expand_polynomials(order, phi, Phi, theta, Theta)
        eps = css_innovations(wc, ar_poly, ma_poly)
        return float(eps @ eps)

    history: list[float] = []
    if order.n_coeffs == 0:
        u_hat = np.zeros(0)
        history.append(objective(u_hat))
        converged = True
    else:
        u0 = _hannan_rissanen_init(wc, order)
        history.append(objective(u0))

        def record(uk):
            history.append(objective(uk))

        res = scipy.optimize.minimize(
            objective,
            u0,
            method="L-BFGS-B",
            callback=record,
            options={"maxiter": MAX_ITER, "gtol": GRAD_TOL},
        )
        if not np.all(np.isfinite(res.x)):
            raise ConvergenceError(
                f"optimizer diverged for order {order.label()}: {res.message}"
            )
        u_hat = res.x
        converged = bool(res.success) or res.status == 1
        if not converged and not np.isfinite(res.fun):
            raise ConvergenceError(
                f"optimizer failed for order {order.label()}: {res.message}"
            )

    phi, theta, Phi, Theta = _split_params(u_hat, order)
    warns = []
    if order.n_coeffs and np.max(np.abs(np.tanh(u_hat))) > PACF_BOUNDARY:
        warns.append(
            "parameters projected onto the stationarity/invertibility boundary"
        )
    ar_poly, ma_poly = expand_polynomials(order, phi, Phi, theta, Theta)
    eps = np.asarray(css_innovations(wc, ar_poly, ma_poly))
    n_eff = len(eps)
    css = float(eps @ eps)
    sigma2 = css / n_eff
    if sigma2 <= 0:
        sigma2 = np.finfo(float).tiny
    # The likelihood is reported over all differenced observations (with
    # sigma^2 from the conditional residuals) so that information
    # criteria are comparable across orders that condition on different
    # numbers of starting values.
    n_w = len(w)
    loglik = -0.5 * n_w * (np.log(2.0 * np.pi * sigma2) + 1.0)
    k = order.n_coeffs + (2 if order.d + order.D == 0 else 1)
    aicc = -2.0 * loglik + 2.0 * k
    if n_w - k - 1 > 0:
        aicc += 2.0 * k * (k + 1) / (n_w - k - 1)
    else:
        aicc = np.inf
    return SarimaFit(
        order=order,
        phi=phi,
        Phi=Phi,
        theta=theta,
        Theta=Theta,
        sigma2=sigma2,
        residuals=eps,
        loglik_css=loglik,
        aicc=aicc,
        training_mean=mu,
        css_history=np.asarray(history),
        warnings=tuple(warns),
        _training_values=x,
    )


def forecast_sarima(fit: SarimaFit, horizon: int) -> np.ndarray:
    """Point forecasts by the conditional-expectation recursion (future
    innovations zero), inverse-differenced back to the original scale."""
    if horizon < 1:
        raise InputError("forecast horizon must be at least 1")
    if fit._training_values is None:
        raise ModelError("fit carries no training history to forecast from")
    order = fit.order
    x = fit._training_values
    w = difference(x, order.d, order.D, order.m)
    wc = w - fit.training_mean
    ar_poly, ma_poly = fit.polynomials()
    eps = np.asarray(css_innovations(wc, ar_poly, ma_poly))
    w_future = np.asarray(arma_forecast(wc, eps, ar_poly, ma_poly, horizon))
    w_future += fit.training_mean
    if order.d + order.D == 0:
        return w_future
    return undifference_forecast(x, w_future, order.d, order.D, order.m)


def simulate_sarima(
    order: SarimaOrder,
    phi=(),
    Phi=(),
    theta=(),
    Theta=(),
    n: int = 1000,
    seed: int = 0,
    sigma: float = 1.0,
) -> np.ndarray:
    """Draw a seed-deterministic realization of the process; a burn-in of
    10*(m+p+q) stationary samples is discarded."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64)) if len(np.atleast_1d(phi)) else np.zeros(0)
    Phi = np.atleast_1d(np.asarray(Phi, dtype=np.float64)) if len(np.atleast_1d(Phi)) else np.zeros(0)
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64)) if len(np.atleast_1d(theta)) else np.zeros(0)
    Theta = np.atleast_1d(np.asarray(Theta, dtype=np.float64)) if len(np.atleast_1d(Theta)) else np.zeros(0)
    if (
        len(phi) != order.p
        or len(Phi) != order.P
        or len(theta) != order.q
        or len(Theta) != order.Q
    ):
        raise InputError("parameter lengths do not match the order")
    ar_poly, ma_poly = expand_polynomials(order, phi, Phi, theta, Theta)
    for poly, name in ((ar_poly, "AR"), (ma_poly, "MA")):
        if len(poly) > 1:
            roots = np.roots(poly[::-1])
            if np.any(np.abs(roots) <= 1.0 + 1e-10):
                raise ModelError(f"{name} parameters are not stationary/invertible")
    burn = 10 * (order.m + order.p + order.q)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n + burn) * sigma
    z = np.asarray(arma_simulate(eps, ar_poly, ma_poly))[burn:]
    # Integrate for d/D by inverting the differencing with zero prefixes.
    for _ in range(order.D):
        out = np.zeros(len(z) + order.m)
        for i in range(len(z)):
            out[order.m + i] = z[i] + out[i]
        z = out[order.m :]
    for _ in range(order.d):
        z = np.cumsum(z)
    return z


def choose_d(values: np.ndarray, max_d: int = 2, threshold: float = 0.05) -> int:
    """Smallest differencing order at which another difference stops
    reducing the sample variance by more than the threshold fraction."""
    x = np.asarray(values, dtype=np.float64)
    d = 0
    cur = float(np.var(x))
    while d < max_d:
        nxt_series = np.diff(x)
        nxt = float(np.var(nxt_series))
        if cur > 0 and nxt < (1.0 - threshold) * cur:
            x = nxt_series
            cur = nxt
            d += 1
        else:
            break
    return d


def _try_fit(values: np.ndarray, order: SarimaOrder):
    try:
        return fit_sarima(values, order)
    except (InputError, ModelError, ConvergenceError, FloatingPointError):
        return None


def _is_admissible(fit: SarimaFit, root_gap: float = 0.05) -> bool:
    """Search-time guard against degenerate candidates: boundary
    parameters and near-cancelling AR/MA root pairs (a common artifact
    of over-specified ARMA orders) are rejected, as are fits whose
    seasonal coefficients are indistinguishable from zero (conditioning
    on extra pre-sample values can hand such models a spurious
    information-criterion edge over the nested non-seasonal fit)."""
    if fit.warnings:
        return False
    for coefs in (fit.Phi, fit.Theta):
        if len(coefs) and np.min(np.abs(coefs)) < MIN_COEF:
            return False
    ar_poly, ma_poly = fit.polynomials()
    if len(ar_poly) > 1 and len(ma_poly) > 1:
        ar_roots = np.roots(ar_poly[::-1])
        ma_roots = np.roots(ma_poly[::-1])
        for r in ar_roots:
            if np.min(np.abs(ma_roots - r)) < root_gap:
                return False
    return True


def stepwise_order_search(
    values: np.ndarray,
    max_p: int = 5,
    max_q: int = 5,
    max_d: int = 2,
) -> SarimaOrder:
    """Greedy neighborhood walk over non-seasonal (p, q) scored by AICc.

    Starts from {(0,d,0), (1,d,1), (2,d,2), (0,d,5)} and moves to the
    best-scoring neighbor (p or q changed by one) until no improvement.
    """
    x = np.asarray(values, dtype=np.float64)
    d = choose_d(x, max_d=max_d)
    starts = [(0, 0), (1, 1), (2, 2), (0, 5)]
    starts = [(p, q) for p, q in starts if p <= max_p and q <= max_q]
    scores: dict[tuple[int, int], float] = {}

    def score(pq: tuple[int, int]) -> float:
        if pq not in scores:
            fit = _try_fit(x, SarimaOrder(p=pq[0], d=d, q=pq[1]))
            ok = fit is not None and _is_admissible(fit)
            scores[pq] = fit.aicc if ok else np.inf
        return scores[pq]

    def score_many(cands: list[tuple[int, int]]) -> None:
        todo = [pq for pq in cands if pq not in scores]
        if not todo:
            return
        with ThreadPoolExecutor(max_workers=min(4, len(todo))) as pool:
            results = list(pool.map(score, todo))
        del results

    score_many(starts)
    best = min(starts, key=lambda pq: (score(pq), pq))
    if not np.isfinite(score(best)):
        raise ModelError("no candidate order could be fit")
    while True:
        p, q = best
        neighbors = [
            (p + dp, q + dq)
            for dp, dq in ((1, 0), (-1, 0), (0, 1), (0, -1))
            if 0 <= p + dp <= max_p and 0 <= q + dq <= max_q
        ]
        score_many(neighbors)
        cand = min(neighbors, key=lambda pq: (score(pq), pq))
        if score(cand) < score(best):
            best = cand
        else:
            break
    return SarimaOrder(p=best[0], d=d, q=best[1])


def seasonal_order_grid(
    values: np.ndarray, base: SarimaOrder, m: int = 24
) -> SarimaOrder:
    """Exhaustive AICc search over seasonal orders P, Q in {0, 1} and
    D in {0, 1}, holding the non-seasonal part fixed."""
    x = np.asarray(values, dtype=np.float64)
    candidates = []
    for P in (0, 1):
        for D in (0, 1):
            for Q in (0, 1):
                if P + D + Q == 0:
                    candidates.append(SarimaOrder(base.p, base.d, base.q))
                else:
                    candidates.append(
                        SarimaOrder(base.p, base.d, base.q, P, D, Q, m)
                    )
    best_order = None
    best_aicc = np.inf
    with ThreadPoolExecutor(max_workers=4) as pool:
        fits = list(pool.map(lambda o: _try_fit(x, o), candidates))
    for order, fit in zip(candidates, fits):
        if fit is None or not _is_admissible(fit):
            _warnings.warn(f"seasonal candidate {order.label()} failed to fit")
            continue
        if fit.aicc < best_aicc:
            best_aicc = fit.aicc
            best_order = order
    if best_order is None:
        raise ModelError("every seasonal candidate failed to fit")
    return best_order
