"""Additive models with cubic-regression-spline smooths.

A smooth is a natural cubic spline parameterized by its values at knots
placed at quantiles of the regressor, with the exact integrated squared
second derivative as penalty.  Identifiability comes from a sum-to-zero
constraint on the smooth's fitted values over the training rows.
Smoothness is chosen per term by GCV (grid scan plus golden-section
refinement) unless fixed.  Beyond the boundary knots the spline
continues linearly with the boundary derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ModelError
from .features import FeatureMatrix
from .linear import OlsFit, fit_ols

LOG_LAMBDA_RANGE = (-8.0, 8.0)


@dataclass(frozen=True)
class SplineBasis:
    """Natural cubic spline basis on fixed knots.

    Coefficients are function values at the knots; ``second_derivs`` maps
    them to the spline's second derivatives at the knots (zero at the
    boundaries); ``penalty`` is the exact integral of the squared second
    derivative as a quadratic form in the coefficients.
    """

    knots: np.ndarray
    penalty: np.ndarray
    second_derivs: np.ndarray

    @property
    def basis_dim(self) -> int:
        return len(self.knots)

    def design(self, x: np.ndarray) -> np.ndarray:
        """Evaluation rows; linear continuation outside the knot range."""
        x = np.asarray(x, dtype=np.float64)
        k = self.knots
        K = len(k)
        F = self.second_derivs
        rows = np.zeros((len(x), K))
        inner = np.clip(x, k[0], k[-1])
        j = np.clip(np.searchsorted(k, inner, side="right") - 1, 0, K - 2)
        h = k[j + 1] - k[j]
        dl = inner - k[j]
        dr = k[j + 1] - inner
        am = dr / h
        ap = dl / h
        cm = (dr**3 / h - h * dr) / 6.0
        cp = (dl**3 / h - h * dl) / 6.0
        idx = np.arange(len(x))
        rows[idx, j] += am
        rows[idx, j + 1] += ap
        rows += cm[:, None] * F[j] + cp[:, None] * F[j + 1]
        # Linear extrapolation with the boundary derivative.
        low = x < k[0]
        if low.any():
            rows[low] += (x[low] - k[0])[:, None] * self._deriv_row(left=True)
        high = x > k[-1]
        if high.any():
            rows[high] += (x[high] - k[-1])[:, None] * self._deriv_row(left=False)
        return rows

    def _deriv_row(self, left: bool) -> np.ndarray:
        k, F = self.knots, self.second_derivs
        K = len(k)
        row = np.zeros(K)
        if left:
            h = k[1] - k[0]
            row[0] -= 1.0 / h
            row[1] += 1.0 / h
            row -= (h / 6.0) * F[1]
        else:
            h = k[-1] - k[-2]
            row[K - 2] -= 1.0 / h
            row[K - 1] += 1.0 / h
            row += (h / 6.0) * F[K - 2]
        return row


def _quantile_knots(x: np.ndarray, K: int) -> np.ndarray:
    uniq = np.unique(x)
    if len(uniq) < K:
        raise InputError(
            f"smooth needs at least {K} distinct regressor values, got {len(uniq)}"
        )
    knots = np.quantile(x, np.linspace(0.0, 1.0, K))
    if len(np.unique(knots)) < K:
        # Heavily tied data: fall back to evenly spaced distinct values.
        knots = uniq[np.linspace(0, len(uniq) - 1, K).round().astype(int)]
    return knots


def build_cr_basis(x: np.ndarray, K: int) -> SplineBasis:
    """Cubic regression spline basis with knots at K equally spaced
    quantiles of x and the exact second-derivative penalty."""
    if K < 4:
        raise InputError("basis dimension must be at least 4")
    knots = _quantile_knots(np.asarray(x, dtype=np.float64), K)
    return basis_from_knots(knots)


def basis_from_knots(knots: np.ndarray) -> SplineBasis:
    """Assemble the basis and penalty for a fixed strictly increasing
    knot sequence."""
    knots = np.asarray(knots, dtype=np.float64)
    K = len(knots)
    h = np.diff(knots)
    # D maps knot values to scaled second differences; B is the Gram
    # matrix of the second-derivative hat functions.
    D = np.zeros((K - 2, K))
    B = np.zeros((K - 2, K - 2))
    for i in range(K - 2):
        D[i, i] = 1.0 / h[i]
        D[i, i + 1] = -1.0 / h[i] - 1.0 / h[i + 1]
        D[i, i + 2] = 1.0 / h[i + 1]
        B[i, i] = (h[i] + h[i + 1]) / 3.0
        if i + 1 < K - 2:
            B[i, i + 1] = B[i + 1, i] = h[i + 1] / 6.0
    F_int = np.linalg.solve(B, D)
    F = np.vstack([np.zeros(K), F_int, np.zeros(K)])
    penalty = D.T @ F_int
    penalty = 0.5 * (penalty + penalty.T)
    return SplineBasis(knots=knots, penalty=penalty, second_derivs=F)


@dataclass(frozen=True)
class GamConfig:
    """Which regressors get spline smooths (name -> basis dimension) and
    their smoothing parameters (absent -> select by GCV)."""

    smooth_terms: dict[str, int] = field(default_factory=dict)
    smoothing: dict[str, float] = field(default_factory=dict)

    @staticmethod
    def gam1(basis_dim: int = 10) -> "GamConfig":
        return GamConfig(smooth_terms={"temperature": basis_dim})

    @staticmethod
    def gam2(basis_dim: int = 10) -> "GamConfig":
        return GamConfig(
            smooth_terms={"temperature": basis_dim, "occupancy": basis_dim}
        )


@dataclass(frozen=True)
class SmoothTerm:
    """Fitted smooth: basis, identifiability transform, coefficients."""

    name: str
    basis: SplineBasis
    transform: np.ndarray  # basis_dim x (basis_dim - 1), sum-to-zero map
    gamma: np.ndarray
    lam: float
    penalty_scale: float
    edf: float

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.basis.design(x) @ self.transform @ self.gamma


@dataclass(frozen=True)
class GamFit:
    alpha: float
    linear_betas: dict[str, float]
    smooths: tuple[SmoothTerm, ...]
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    tss: float
    r2: float
    adj_r2: float
    edf_total: float
    gcv: float
    gcv_fallback: bool

    @property
    def n_params(self) -> float:
        return len(self.linear_betas) + sum(s.edf for s in self.smooths)


def _assemble(X: FeatureMatrix, config: GamConfig):
    smooth_vars = set(config.smooth_terms)
    unknown = smooth_vars - set(X.groups)
    if unknown:
        raise InputError(f"smooth terms not in feature matrix: {sorted(unknown)}")
    linear_cols = [
        c
        for c in X.columns
        if not any(c in X.groups[v] for v in smooth_vars if v in X.groups)
    ]
    blocks = [np.ones((X.n_rows, 1))]
    if linear_cols:
        blocks.append(np.column_stack([X.column(c) for c in linear_cols]))
    slices: list[tuple[str, slice]] = []
    bases: dict[str, tuple[SplineBasis, np.ndarray]] = {}
    penalties: dict[str, tuple[slice, np.ndarray, float]] = {}
    offset = 1 + len(linear_cols)
    for name, K in config.smooth_terms.items():
        basis = build_cr_basis(X.column(name), K)
        C = basis.design(X.column(name))
        csum = C.sum(axis=0)
        q, _ = np.linalg.qr(csum[:, None], mode="complete")
        Z = q[:, 1:]
        CZ = C @ Z
        S = Z.T @ basis.penalty @ Z
        gram_tr = float(np.trace(CZ.T @ CZ))
        pen_tr = float(np.trace(S))
        scale = gram_tr / pen_tr if pen_tr > 0 else 1.0
        sl = slice(offset, offset + K - 1)
        blocks.append(CZ)
        slices.append((name, sl))
        bases[name] = (basis, Z)
        penalties[name] = (sl, S * scale, scale)
        offset += K - 1
    A = np.column_stack(blocks)
    return A, linear_cols, slices, bases, penalties


def _penalized_solve(AtA, Aty, penalties, lams):
    M = AtA.copy()
    for name, (sl, S, _) in penalties.items():
        M[sl, sl] += lams[name] * S
    try:
        cho = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ModelError("penalized system is singular (rank deficiency)") from None
    coef = np.linalg.solve(M, Aty)
    inv_ata = np.linalg.solve(M, AtA)  # hat-trace factor
    return coef, inv_ata, cho


def _gcv(A, y, AtA, Aty, penalties, lams):
    coef, inv_ata, _ = _penalized_solve(AtA, Aty, penalties, lams)
    fitted = A @ coef
    rss = float(np.sum((y - fitted) ** 2))
    edf = float(np.trace(inv_ata))
    n = len(y)
    if n - edf <= 0:
        return np.inf, coef, fitted, rss, edf
    return n * rss / (n - edf) ** 2, coef, fitted, rss, edf


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, lo, hi, tol=1e-3, max_iter=60):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


def fit_gam(X: FeatureMatrix, y: np.ndarray, config: GamConfig) -> GamFit:
    """Minimize RSS plus per-smooth second-derivative penalties."""
    y = np.asarray(y, dtype=np.float64)
    if len(y) != X.n_rows:
        raise InputError("row count mismatch between X and y")
    A, linear_cols, slices, bases, penalties = _assemble(X, config)
    n, p = A.shape
    if n < 10 * p:
        raise InputError(f"need at least {10 * p} rows for {p} coefficients")
    AtA = A.T @ A
    Aty = A.T @ y

    lams = {name: config.smoothing.get(name, 1.0) for name in config.smooth_terms}
    gcv_fallback = False
    free = [name for name in config.smooth_terms if name not in config.smoothing]
    if free:
        lo, hi = LOG_LAMBDA_RANGE
        grid = np.linspace(lo, hi, 17)
        for _cycle in range(2 if len(free) > 1 else 1):
            for name in free:

                def score(loglam, _name=name):
                    trial = dict(lams)
                    trial[_name] = float(np.exp(loglam))
                    return _gcv(A, y, AtA, Aty, penalties, trial)[0]

                vals = [score(g) for g in grid]
                bi = int(np.argmin(vals))
                if bi == 0 or bi == len(grid) - 1:
                    # Minimum not bracketed by the grid: keep the edge
                    # value from the scan and report the fallback.
                    gcv_fallback = True
                    lams[name] = float(np.exp(grid[bi]))
                else:
                    best = _golden_min(score, grid[bi - 1], grid[bi + 1])
                    lams[name] = float(np.exp(best))

    gcv, coef, fitted, rss, edf_total = _gcv(A, y, AtA, Aty, penalties, lams)
    _, inv_ata, _ = _penalized_solve(AtA, Aty, penalties, lams)
    residuals = y - fitted
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    e_reg = edf_total - 1.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - e_reg - 1)

    smooths = []
    hat_diag = np.diag(inv_ata)
    for name, sl in slices:
        basis, Z = bases[name]
        # Reported per-term freedom counts the constrained-out level, so
        # an infinitely penalized smooth reports 2 (a linear function).
        term_edf = float(hat_diag[sl].sum()) + 1.0
        smooths.append(
            SmoothTerm(
                name=name,
                basis=basis,
                transform=Z,
                gamma=coef[sl].copy(),
                lam=lams[name],
                penalty_scale=penalties[name][2],
                edf=term_edf,
            )
        )
    return GamFit(
        alpha=float(coef[0]),
        linear_betas=dict(zip(linear_cols, coef[1 : 1 + len(linear_cols)])),
        smooths=tuple(smooths),
        fitted=fitted,
        residuals=residuals,
        rss=rss,
        tss=tss,
        r2=r2,
        adj_r2=adj,
        edf_total=edf_total,
        gcv=gcv,
        gcv_fallback=gcv_fallback,
    )


def predict_gam(fit: GamFit, X: FeatureMatrix) -> np.ndarray:
    """Evaluate the additive model at new rows; smooths extrapolate
    linearly beyond their knot range."""
    missing = set(fit.linear_betas) - set(X.columns)
    missing |= {s.name for s in fit.smooths} - {
        c for cols in X.groups.values() for c in cols
    } - set(X.columns)
    for s in fit.smooths:
        if s.name not in X.columns:
            missing.add(s.name)
    if missing:
        raise InputError(f"prediction rows missing columns: {sorted(missing)}")
    out = np.full(X.n_rows, fit.alpha)
    for name, beta in fit.linear_betas.items():
        out += beta * X.column(name)
    for s in fit.smooths:
        out += s.evaluate(X.column(s.name))
    return out


def penalized_objective(fit: GamFit, X: FeatureMatrix, y: np.ndarray) -> float:
    """RSS plus the weighted penalty quadratic forms at the fit's
    coefficients (diagnostic; used by the invariant tests)."""
    resid = np.asarray(y, dtype=np.float64) - predict_gam(fit, X)
    obj = float(resid @ resid)
    for s in fit.smooths:
        S = s.transform.T @ s.basis.penalty @ s.transform * s.penalty_scale
        obj += s.lam * float(s.gamma @ S @ s.gamma)
    return obj
