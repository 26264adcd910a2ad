# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: ARMA recursions and lasso coordinate descent.

Semantics must match demandcast._kernels._slow exactly; the test suite
cross-checks the two backends on random inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def css_innovations(double[::1] w, double[::1] ar_poly, double[::1] ma_poly):
    """One-step innovation errors of an ARMA recursion, conditioning on the
    first ``len(ar_poly) - 1`` observed values and zero pre-sample errors.

    ``ar_poly`` and ``ma_poly`` are full lag polynomials starting with 1,
    with seasonal factors already expanded by polynomial multiplication.
    Returns an array of length ``len(w) - (len(ar_poly) - 1)``.
    """
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t p = ar_poly.shape[0] - 1
    cdef Py_ssize_t q = ma_poly.shape[0] - 1
    cdef Py_ssize_t ne = n - p
    if ne <= 0:
        raise ValueError("series shorter than AR polynomial")
    out = np.empty(ne, dtype=np.float64)
    cdef double[::1] e = out
    cdef Py_ssize_t t, k
    cdef double acc
    for t in range(ne):
        acc = 0.0
        for k in range(p + 1):
            acc += ar_poly[k] * w[t + p - k]
        for k in range(1, q + 1):
            if t - k >= 0:
                acc -= ma_poly[k] * e[t - k]
        e[t] = acc
    return out


def arma_simulate(double[::1] eps, double[::1] ar_poly, double[::1] ma_poly):
    """Drive the ARMA recursion with a given innovation sequence.

    Zero initial conditions; the caller discards burn-in.  Equivalent to
    ``scipy.signal.lfilter(ma_poly, ar_poly, eps)``.
    """
    cdef Py_ssize_t n = eps.shape[0]
    cdef Py_ssize_t p = ar_poly.shape[0] - 1
    cdef Py_ssize_t q = ma_poly.shape[0] - 1
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    cdef Py_ssize_t t, k
    cdef double acc
    for t in range(n):
        acc = 0.0
        for k in range(q + 1):
            if t - k >= 0:
                acc += ma_poly[k] * eps[t - k]
        for k in range(1, p + 1):
            if t - k >= 0:
                acc -= ar_poly[k] * y[t - k]
        y[t] = acc
    return out


def arma_forecast(double[::1] w_hist, double[::1] e_hist,
                  double[::1] ar_poly, double[::1] ma_poly,
                  Py_ssize_t horizon):
    """Iterated conditional-expectation forecast of the ARMA recursion.

    Future innovations are zero; past innovations beyond the recorded
    history are treated as zero.
    """
    cdef Py_ssize_t nh = w_hist.shape[0]
    cdef Py_ssize_t nei = e_hist.shape[0]
    cdef Py_ssize_t p = ar_poly.shape[0] - 1
    cdef Py_ssize_t q = ma_poly.shape[0] - 1
    ext = np.empty(nh + horizon, dtype=np.float64)
    cdef double[::1] w = ext
    cdef Py_ssize_t t, k, idx
    for t in range(nh):
        w[t] = w_hist[t]
    cdef double acc
    for t in range(horizon):
        acc = 0.0
        idx = nh + t
        for k in range(1, p + 1):
            if idx - k >= 0:
                acc -= ar_poly[k] * w[idx - k]
        for k in range(1, q + 1):
            # innovation index relative to the end of history
            if t - k < 0 and nei + t - k >= 0:
                acc += ma_poly[k] * e_hist[nei + t - k]
        w[idx] = acc
    return ext[nh:]


def cd_lasso_gram(double[:, ::1] gram, double[::1] xty, double yty,
                  Py_ssize_t n, double lam, double[::1] w0,
                  Py_ssize_t max_sweeps, double tol):
    """Cyclic coordinate descent with soft-thresholding on the Gram system.

    Minimizes (1/(2n))||y - Xw||^2 + lam * ||w||_1 given gram = X'X and
    xty = X'y.  Returns (w, sweeps_used, max_delta, objective_history).
    """
    cdef Py_ssize_t pdim = xty.shape[0]
    wout = np.array(w0, dtype=np.float64, copy=True)
    cdef double[::1] w = wout
    objs = []
    cdef Py_ssize_t sweep, j, k
    cdef double max_delta = 0.0
    cdef double rho, wj, obj, quad, l1
    cdef double nlam = n * lam
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(pdim):
            rho = xty[j]
            for k in range(pdim):
                rho -= gram[j, k] * w[k]
            rho += gram[j, j] * w[j]
            if rho > nlam:
                wj = (rho - nlam) / gram[j, j]
            elif rho < -nlam:
                wj = (rho + nlam) / gram[j, j]
            else:
                wj = 0.0
            if wj != w[j]:
                if abs(wj - w[j]) > max_delta:
                    max_delta = abs(wj - w[j])
                w[j] = wj
        quad = yty
        l1 = 0.0
        for j in range(pdim):
            quad -= 2.0 * xty[j] * w[j]
            l1 += abs(w[j])
            for k in range(pdim):
                quad += gram[j, k] * w[j] * w[k]
        obj = 0.5 * quad / n + lam * l1
        objs.append(obj)
        if max_delta < tol:
            break
    return wout, len(objs), max_delta, np.asarray(objs)
