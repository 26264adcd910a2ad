"""Additive-model tests: spline basis, penalty, fitting, prediction."""

from datetime import datetime

import numpy as np
import pytest

from demandcast.errors import InputError
from demandcast.features import FeatureMatrix
from demandcast.gam import (
    GamConfig,
    build_cr_basis,
    fit_gam,
    penalized_objective,
    predict_gam,
)
from demandcast.linear import fit_ols

START = datetime(2021, 1, 1)


def _fm(cols: dict) -> FeatureMatrix:
    names = tuple(cols)
    data = np.column_stack([cols[c] for c in names])
    return FeatureMatrix(START, names, data, {c: (c,) for c in names})


class TestBasis:
    def test_linear_functions_in_null_space(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(-5, 5, 500)
        basis = build_cr_basis(x, 10)
        # Coefficients representing f(x) = a + b x are the knot values.
        coeffs = 2.0 + 3.0 * basis.knots
        quad = coeffs @ basis.penalty @ coeffs
        assert abs(quad) < 1e-10

    def test_penalty_psd(self):
        rng = np.random.default_rng(1)
        basis = build_cr_basis(rng.uniform(0, 1, 300), 8)
        eigs = np.linalg.eigvalsh(basis.penalty)
        assert eigs.min() >= -1e-10
        # Null space dimension 2: constant and linear functions.
        assert np.sum(eigs < 1e-8 * eigs.max()) == 2

    def test_penalty_matches_quadrature(self):
        # A known cubic on fixed knots: compare the quadratic form with
        # numerical quadrature of the integrated squared second
        # derivative of the natural-spline interpolant.
        from scipy.interpolate import CubicSpline

        x = np.linspace(0, 1, 200)
        basis = build_cr_basis(x, 6)
        rng = np.random.default_rng(2)
        coeffs = rng.standard_normal(6)
        quad_form = coeffs @ basis.penalty @ coeffs
        spline = CubicSpline(basis.knots, coeffs, bc_type="natural")
        grid = np.linspace(basis.knots[0], basis.knots[-1], 200001)
        second = spline(grid, 2)
        oracle = np.trapezoid(second**2, grid)
        assert quad_form == pytest.approx(oracle, rel=1e-6)

    def test_reproduces_values_at_knots(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-2, 2, 400)
        basis = build_cr_basis(x, 7)
        rows = basis.design(basis.knots)
        np.testing.assert_allclose(rows, np.eye(7), atol=1e-10)

    def test_too_few_distinct_values(self):
        with pytest.raises(InputError):
            build_cr_basis(np.array([1.0, 2.0, 3.0] * 10), 10)


class TestFit:
    def test_empty_smooth_set_equals_ols(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-3, 3, 500)
        z = rng.standard_normal(500)
        y = 1.0 + 0.5 * x - 0.2 * z + 0.1 * rng.standard_normal(500)
        X = _fm({"temperature": x, "occupancy": z})
        gam = fit_gam(X, y, GamConfig())
        ols = fit_ols(X, y)
        assert gam.alpha == pytest.approx(ols.alpha, abs=1e-10)
        for c in X.columns:
            assert gam.linear_betas[c] == pytest.approx(ols.betas[c], abs=1e-10)

    def test_infinite_penalty_collapses_to_linear(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-3, 3, 2000)
        y = np.sin(x) + 0.1 * rng.standard_normal(2000)
        X = _fm({"temperature": x})
        fit = fit_gam(
            X, y, GamConfig(smooth_terms={"temperature": 10},
                            smoothing={"temperature": 1e12})
        )
        # Smooth evaluated on a grid must be linear in x.
        grid = np.linspace(-3, 3, 50)
        vals = fit.smooths[0].evaluate(grid)
        slope = np.diff(vals) / np.diff(grid)
        np.testing.assert_allclose(slope, slope[0], atol=1e-6)
        assert fit.smooths[0].edf == pytest.approx(2.0, abs=0.01)

    def test_sine_recovery(self):
        rng = np.random.default_rng(6)
        n = 2000
        x = rng.uniform(0, 1, n)
        y = np.sin(2 * np.pi * x) + 0.1 * rng.standard_normal(n)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        grid = np.linspace(0.02, 0.98, 200)
        Xg = _fm({"temperature": grid})
        pred = predict_gam(fit, Xg)
        truth = np.sin(2 * np.pi * grid)
        rmse = np.sqrt(np.mean((pred - truth) ** 2))
        assert rmse < 0.05

    def test_smooth_centered(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(-2, 2, 1000)
        y = np.cos(x) + 0.1 * rng.standard_normal(1000)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        contribution = fit.smooths[0].evaluate(x)
        assert abs(contribution.mean()) < 1e-8 * np.abs(y).max()

    def test_fitted_plus_residuals_identity(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(-2, 2, 800)
        y = x**2 + 0.2 * rng.standard_normal(800)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 8}))
        np.testing.assert_allclose(fit.fitted + fit.residuals, y, atol=1e-12)
        assert 2.0 <= fit.smooths[0].edf <= 8.0

    def test_penalized_objective_not_worse_than_linear_start(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-3, 3, 1500)
        y = np.sin(x) + 0.1 * rng.standard_normal(1500)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        obj = penalized_objective(fit, X, y)
        # Start point: the OLS line with zero spline-deviation penalty
        # contribution (penalty term is zero for a linear function).
        ols = fit_ols(X, y)
        assert obj <= ols.rss + 1e-9

    def test_gcv_minimum_consistent_with_grid(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(0, 1, 1200)
        y = np.sin(2 * np.pi * x) + 0.15 * rng.standard_normal(1200)
        X = _fm({"temperature": x})
        auto = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        grid_scores = []
        for loglam in np.linspace(-8, 8, 33):
            fixed = fit_gam(
                X, y, GamConfig(smooth_terms={"temperature": 10},
                                smoothing={"temperature": float(np.exp(loglam))})
            )
            grid_scores.append(fixed.gcv)
        assert auto.gcv <= min(grid_scores) + 1e-9

    def test_noise_columns_do_not_inflate_adj_r2(self):
        rng = np.random.default_rng(11)
        n = 1500
        x = rng.uniform(-2, 2, n)
        y = np.sin(x) + 0.1 * rng.standard_normal(n)
        base = fit_gam(
            _fm({"temperature": x}),
            y,
            GamConfig(smooth_terms={"temperature": 10}),
        )
        noisy = fit_gam(
            _fm({"temperature": x, "junk1": rng.standard_normal(n),
                 "junk2": rng.standard_normal(n)}),
            y,
            GamConfig(smooth_terms={"temperature": 10}),
        )
        assert noisy.adj_r2 <= base.adj_r2 + 0.01

    def test_needs_enough_rows(self):
        rng = np.random.default_rng(12)
        x = rng.uniform(0, 1, 50)
        with pytest.raises(InputError):
            fit_gam(
                _fm({"temperature": x}),
                rng.standard_normal(50),
                GamConfig(smooth_terms={"temperature": 10}),
            )


class TestPredict:
    def test_training_rows_reproduce_fitted(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(-1, 1, 900)
        y = np.tanh(2 * x) + 0.1 * rng.standard_normal(900)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        np.testing.assert_allclose(predict_gam(fit, X), fit.fitted, atol=1e-12)

    def test_linear_extrapolation_beyond_knots(self):
        rng = np.random.default_rng(14)
        x = rng.uniform(0, 1, 900)
        y = x**2 + 0.05 * rng.standard_normal(900)
        X = _fm({"temperature": x})
        fit = fit_gam(X, y, GamConfig(smooth_terms={"temperature": 10}))
        hi = fit.smooths[0].basis.knots[-1]
        outside = np.array([hi + 0.5, hi + 1.0, hi + 1.5, hi + 2.0])
        vals = predict_gam(fit, _fm({"temperature": outside}))
        slopes = np.diff(vals) / np.diff(outside)
        np.testing.assert_allclose(slopes, slopes[0], atol=1e-9)

    def test_missing_column_rejected(self):
        rng = np.random.default_rng(15)
        x = rng.uniform(0, 1, 600)
        fit = fit_gam(
            _fm({"temperature": x}),
            np.sin(x),
            GamConfig(smooth_terms={"temperature": 10}),
        )
        with pytest.raises(InputError):
            predict_gam(fit, _fm({"occupancy": x}))
