"""Multiple linear regression and l1-penalized regression with k-fold
cross-validated penalty selection for exogenous-variable screening."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._kernels import cd_lasso_gram
from .errors import ConvergenceError, InputError, ModelError, RankDeficiencyError
from .features import FeatureMatrix

MAX_SWEEPS = 10_000
SWEEP_TOL = 1e-9


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit with intercept."""

    alpha: float
    betas: dict[str, float]
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    tss: float
    r2: float
    adj_r2: float

    @property
    def n_params(self) -> int:
        return len(self.betas)

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        if set(X.columns) != set(self.betas):
            raise InputError("feature columns do not match the fitted model")
        beta = np.array([self.betas[c] for c in X.columns])
        return self.alpha + X.data @ beta


def _design(X: FeatureMatrix) -> np.ndarray:
    return np.column_stack([np.ones(X.n_rows), X.data])


def fit_ols(X: FeatureMatrix, y: np.ndarray) -> OlsFit:
    """Minimize the residual sum of squares over intercept and slopes."""
    y = np.asarray(y, dtype=np.float64)
    n, p = X.n_rows, len(X.columns)
    if len(y) != n:
        raise InputError("row count mismatch between X and y")
    if n <= p + 1:
        raise InputError("need more rows than coefficients")
    A = _design(X)
    q, r, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(A.shape) * np.finfo(float).eps
    deficient = diag < tol
    if deficient.any():
        names = ["intercept"] + list(X.columns)
        raise RankDeficiencyError([names[piv[i]] for i in np.nonzero(deficient)[0]])
    coef = scipy.linalg.solve_triangular(r, q.T @ y)[np.argsort(piv)]
    fitted = A @ coef
    residuals = y - fitted
    rss = float(residuals @ residuals)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)
    return OlsFit(
        alpha=float(coef[0]),
        betas=dict(zip(X.columns, coef[1:])),
        fitted=fitted,
        residuals=residuals,
        rss=rss,
        tss=tss,
        r2=r2,
        adj_r2=adj,
    )


@dataclass(frozen=True)
class LassoFit:
    """Penalized fit at a single penalty, on the original scale."""

    lam: float
    alpha: float
    betas: dict[str, float]
    sweeps: int
    converged: bool
    max_delta: float
    objective_history: np.ndarray


def _standardize(Xd: np.ndarray, y: np.ndarray):
    mu = Xd.mean(axis=0)
    sd = Xd.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    Xs = (Xd - mu) / sd
    ybar = y.mean()
    return Xs, y - ybar, mu, sd, ybar


def _cd_solve(Xs, yc, lam, w0=None, max_sweeps=MAX_SWEEPS, tol=SWEEP_TOL):
    n, p = Xs.shape
    gram = Xs.T @ Xs
    xty = Xs.T @ yc
    yty = float(yc @ yc)
    if w0 is None:
        w0 = np.zeros(p)
    return cd_lasso_gram(gram, xty, yty, n, lam, w0, max_sweeps, tol)


def lambda_max(X: FeatureMatrix, y: np.ndarray) -> float:
    """Smallest penalty at which every slope is exactly zero."""
    y = np.asarray(y, dtype=np.float64)
    Xs, yc, _, _, _ = _standardize(X.data, y)
    return float(np.max(np.abs(Xs.T @ yc)) / len(y))


def fit_lasso(X: FeatureMatrix, y: np.ndarray, lam: float) -> LassoFit:
    """Cyclic coordinate descent with soft-thresholding.

    Columns are centered and scaled to unit variance internally and the
    intercept is unpenalized; reported coefficients are on the original
    scale.  Minimizes (1/2n)*RSS + lam*sum|beta| in the scaled space.
    """
    if lam < 0:
        raise InputError("penalty must be non-negative")
    y = np.asarray(y, dtype=np.float64)
    Xs, yc, mu, sd, ybar = _standardize(X.data, y)
    w, sweeps, max_delta, objs = _cd_solve(Xs, yc, lam)
    converged = max_delta < SWEEP_TOL
    if not converged:
        raise ConvergenceError(
            f"coordinate descent did not converge in {MAX_SWEEPS} sweeps "
            f"(last max coefficient change {max_delta:.3e})"
        )
    beta = w / sd
    alpha = ybar - float(mu @ beta)
    return LassoFit(
        lam=lam,
        alpha=alpha,
        betas=dict(zip(X.columns, beta)),
        sweeps=sweeps,
        converged=converged,
        max_delta=max_delta,
        objective_history=objs,
    )


@dataclass(frozen=True)
class LassoCvResult:
    """Cross-validated penalty path and the refit at the best penalty."""

    lambda_grid: np.ndarray
    cv_mse: np.ndarray
    best_lambda: float
    fit: LassoFit
    retained: tuple[str, ...] = field(default=())

    @property
    def coefficients(self) -> dict[str, float]:
        return self.fit.betas


def _fold_blocks(n: int, k: int) -> list[np.ndarray]:
    # Contiguous time blocks, not shuffled, to avoid temporal leakage.
    return np.array_split(np.arange(n), k)


def cv_lasso(
    X: FeatureMatrix,
    y: np.ndarray,
    k: int = 10,
    n_lambdas: int = 100,
    lambda_min_ratio: float = 1e-4,
    grid: np.ndarray | None = None,
    rule: str = "one_se",
) -> LassoCvResult:
    """Grid search over a descending log-spaced penalty path, scored by
    mean held-out MSE over k contiguous folds; refit at the best penalty.

    ``rule`` picks the penalty from the CV curve: "one_se" (default)
    takes the largest penalty whose mean CV error is within one standard
    error of the minimum, which gives sparsity-consistent selection;
    "min" takes the argmin.  Ties on CV error resolve to the larger
    penalty (sparser model).
    """
    y = np.asarray(y, dtype=np.float64)
    n = X.n_rows
    if k < 2:
        raise InputError("need at least 2 folds")
    if n < 10 * k:
        raise InputError("need at least 10 rows per fold")
    if grid is None:
        lmax = lambda_max(X, y)
        grid = np.geomspace(lmax, lambda_min_ratio * lmax, n_lambdas)
    else:
        grid = np.sort(np.asarray(grid, dtype=np.float64))[::-1].copy()

    folds = _fold_blocks(n, k)
    sq_err = np.zeros((len(grid), k))
    for fi, test_idx in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        Xtr, ytr = X.data[mask], y[mask]
        if ytr.std() == 0:
            raise ModelError(f"fold {fi} has constant target values")
        Xs, yc, mu, sd, ybar = _standardize(Xtr, ytr)
        Xtest = (X.data[test_idx] - mu) / sd
        ytest = y[test_idx]
        w = np.zeros(Xs.shape[1])
        gram = Xs.T @ Xs
        xty = Xs.T @ yc
        yty = float(yc @ yc)
        for li, lam in enumerate(grid):
            w, _, max_delta, _ = cd_lasso_gram(
                gram, xty, yty, len(ytr), lam, w, MAX_SWEEPS, SWEEP_TOL
            )
            pred = ybar + Xtest @ w
            sq_err[li, fi] = float(np.mean((ytest - pred) ** 2))
    cv_mse = sq_err.mean(axis=1)
    min_idx = int(np.argmin(cv_mse))  # grid descends: first min = largest lam
    if rule == "one_se" and len(grid) > 1:
        se = float(np.std(sq_err[min_idx], ddof=1) / np.sqrt(k))
        within = np.nonzero(cv_mse <= cv_mse[min_idx] + se)[0]
        best_idx = int(within[0])  # largest penalty inside the band
    elif rule in ("min", "one_se"):
        best_idx = min_idx
    else:
        raise InputError(f"unknown selection rule {rule!r}")
    best_lambda = float(grid[best_idx])
    fit = fit_lasso(X, y, best_lambda)
    retained = tuple(
        var
        for var, cols in X.groups.items()
        if any(fit.betas[c] != 0.0 for c in cols)
    )
    return LassoCvResult(
        lambda_grid=grid,
        cv_mse=cv_mse,
        best_lambda=best_lambda,
        fit=fit,
        retained=retained,
    )


def select_variables(result: LassoCvResult) -> tuple[str, ...]:
    """Logical variables with any nonzero coefficient at the best penalty."""
    if not result.retained:
        raise ModelError(
            "every exogenous variable was shrunk to zero; the exogenous "
            "data carries no usable signal"
        )
    return result.retained
