"""Pure numpy/scipy fallbacks for the compiled kernels.

Each function mirrors the signature and exact semantics of its
counterpart in ``_fast``; the test suite cross-checks the two backends.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter


def css_innovations(w: np.ndarray, ar_poly: np.ndarray, ma_poly: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    ar_poly = np.asarray(ar_poly, dtype=np.float64)
    ma_poly = np.asarray(ma_poly, dtype=np.float64)
    p = len(ar_poly) - 1
    if len(w) - p <= 0:
        raise ValueError("series shorter than AR polynomial")
    # AR side conditions on the first p observed values; the "valid" part of
    # the convolution is exactly sum_k ar_poly[k] * w[t-k] for t >= p.
    c = np.convolve(w, ar_poly, mode="valid")
    # MA side: e satisfies ma_poly (*) e = c with zero initial errors.
    return lfilter([1.0], ma_poly, c)


def arma_simulate(eps: np.ndarray, ar_poly: np.ndarray, ma_poly: np.ndarray) -> np.ndarray:
    return lfilter(
        np.asarray(ma_poly, dtype=np.float64),
        np.asarray(ar_poly, dtype=np.float64),
        np.asarray(eps, dtype=np.float64),
    )


def arma_forecast(
    w_hist: np.ndarray,
    e_hist: np.ndarray,
    ar_poly: np.ndarray,
    ma_poly: np.ndarray,
    horizon: int,
) -> np.ndarray:
    w_hist = np.asarray(w_hist, dtype=np.float64)
    e_hist = np.asarray(e_hist, dtype=np.float64)
    ar_poly = np.asarray(ar_poly, dtype=np.float64)
    ma_poly = np.asarray(ma_poly, dtype=np.float64)
    p = len(ar_poly) - 1
    q = len(ma_poly) - 1
    nh = len(w_hist)
    nei = len(e_hist)
    ext = np.concatenate([w_hist, np.zeros(horizon)])
    for t in range(horizon):
        idx = nh + t
        acc = 0.0
        for k in range(1, p + 1):
            if idx - k >= 0:
                acc -= ar_poly[k] * ext[idx - k]
        for k in range(1, q + 1):
            if t - k < 0 and nei + t - k >= 0:
                acc += ma_poly[k] * e_hist[nei + t - k]
        ext[idx] = acc
    return ext[nh:]


def cd_lasso_gram(
    gram: np.ndarray,
    xty: np.ndarray,
    yty: float,
    n: int,
    lam: float,
    w0: np.ndarray,
    max_sweeps: int,
    tol: float,
):
    gram = np.asarray(gram, dtype=np.float64)
    xty = np.asarray(xty, dtype=np.float64)
    w = np.array(w0, dtype=np.float64, copy=True)
    pdim = len(xty)
    nlam = n * lam
    objs = []
    max_delta = 0.0
    for _sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(pdim):
            rho = xty[j] - gram[j] @ w + gram[j, j] * w[j]
            if rho > nlam:
                wj = (rho - nlam) / gram[j, j]
            elif rho < -nlam:
                wj = (rho + nlam) / gram[j, j]
            else:
                wj = 0.0
            if wj != w[j]:
                max_delta = max(max_delta, abs(wj - w[j]))
                w[j] = wj
        quad = yty - 2.0 * xty @ w + w @ gram @ w
        objs.append(0.5 * quad / n + lam * np.sum(np.abs(w)))
        if max_delta < tol:
            break
    return w, len(objs), max_delta, np.asarray(objs)
