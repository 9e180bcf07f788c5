"""Poisson regression: finite-difference oracles and closed forms."""

import math

import numpy as np
import pytest
import scipy.stats as st

from countpred import (
    DesignError,
    DesignSpec,
    DiagnosticsError,
    DivergenceError,
    DomainError,
    GlmFit,
    SingularityError,
    build_design,
    design_row,
    expected_info,
    fit,
    loglik,
    observed_info,
    pmf_poisson,
    rate_and_variance,
    region_regression,
    region_smallest,
    residual_diagnostics,
    score,
)

rng = np.random.default_rng(61)


def make_case(n=40, order=2, days=True):
    w = np.linspace(0.0, 3.0, n)
    labels = [d % 7 for d in range(n)] if days else None
    X, spec = build_design(
        w, labels, DesignSpec(poly_order=order, include_day_factor=days,
                              standardize=True))
    theta_true = rng.normal(0.0, 0.3, X.shape[1])
    theta_true[0] = 1.5
    y = rng.poisson(np.exp(X @ theta_true))
    return X, y, spec


def test_score_matches_finite_differences():
    X, y, _ = make_case()
    theta = rng.normal(0.0, 0.2, X.shape[1])
    g = score(theta, X, y)
    h = 1e-6
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        fd = (loglik(theta + e, X, y) - loglik(theta - e, X, y)) / (2 * h)
        assert g[j] == pytest.approx(fd, rel=1e-5, abs=1e-4)


def test_info_matches_finite_differences_of_score():
    X, y, _ = make_case(n=25, order=1)
    theta = rng.normal(0.0, 0.2, X.shape[1])
    info = observed_info(theta, X, y)
    h = 1e-6
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        fd = -(score(theta + e, X, y) - score(theta - e, X, y)) / (2 * h)
        np.testing.assert_allclose(info[:, j], fd, rtol=1e-5, atol=1e-3)
    np.testing.assert_allclose(info, expected_info(theta, X), rtol=0, atol=0)
    np.testing.assert_allclose(info, info.T, atol=1e-9)


def test_score_zero_at_intercept_mle():
    y = np.array([3, 0, 7, 2, 5])
    X = np.ones((5, 1))
    g = score([math.log(y.mean())], X, y)
    assert abs(g[0]) <= 1e-10
    # score vanishes identically when y equals the fitted rates
    Xc, _, _ = make_case(n=12, order=1, days=False)
    theta = np.array([0.3, -0.2])
    y_exact = np.exp(Xc @ theta)
    np.testing.assert_allclose(score(theta, Xc, y_exact), 0.0, atol=1e-10)


def test_intercept_info_closed_form():
    X = np.ones((9, 1))
    theta = [1.1]
    assert observed_info(theta, X)[0, 0] == pytest.approx(9 * math.exp(1.1), rel=1e-12)


def test_intercept_fit_closed_form():
    X = np.ones((3, 1))
    y = [2, 4, 6]
    res = fit(X, y)
    assert res.theta[0] == pytest.approx(math.log(4.0), abs=1e-10)
    assert res.converged
    want_ll = sum(yi * math.log(4.0) - 4.0 - math.lgamma(yi + 1) for yi in y)
    assert res.loglik == pytest.approx(want_ll, abs=1e-10)
    assert res.aic == pytest.approx(-2.0 * want_ll + 2.0, abs=1e-9)
    np.testing.assert_allclose(res.fitted_rates, 4.0, atol=1e-9)


def test_saturated_fit_reproduces_data():
    X = np.array([[1.0, 0.0], [1.0, 1.0]])
    res = fit(X, [3, 7])
    np.testing.assert_allclose(res.fitted_rates, [3.0, 7.0], atol=1e-8)


def test_fitted_total_matches_observed_total():
    X, y, _ = make_case(n=60, order=3)
    res = fit(X, y)
    assert res.fitted_rates.sum() == pytest.approx(float(y.sum()), abs=1e-6)


def test_fit_invariant_to_standardization():
    n = 50
    w = np.linspace(0.0, 4.0, n)
    labels = [d % 7 for d in range(n)]
    y = rng.poisson(np.exp(1.0 + 0.4 * w))
    lam = {}
    for standardize in (False, True):
        spec0 = DesignSpec(poly_order=2, include_day_factor=True,
                           standardize=standardize)
        X, spec = build_design(w, labels, spec0)
        res = fit(X, y, design=spec)
        x0 = design_row(2.0, "Friday", spec)
        lam[standardize] = rate_and_variance(res, x0)
    assert lam[True][0] == pytest.approx(lam[False][0], rel=1e-8)
    assert lam[True][1] == pytest.approx(lam[False][1], rel=1e-8)


def test_build_design_layout():
    X, spec = build_design([1.0, 2.0, 3.0], None,
                           DesignSpec(poly_order=1, standardize=True))
    np.testing.assert_allclose(X, [[1.0, -1.0], [1.0, 0.0], [1.0, 1.0]])
    assert spec.column_means == (0.0, 2.0)
    assert spec.column_sds == (1.0, 1.0)
    np.testing.assert_allclose(design_row(2.0, None, spec), [1.0, 0.0])
    np.testing.assert_allclose(design_row(3.0, None, spec), X[2])


def test_build_design_day_factor():
    labels = ["Monday", "Tuesday", "Sunday"]
    X, spec = build_design([0.0, 1.0, 2.0], labels,
                           DesignSpec(poly_order=0, include_day_factor=True))
    assert X.shape == (3, 7)
    np.testing.assert_allclose(X[0], [1, 0, 0, 0, 0, 0, 0])   # Monday baseline
    np.testing.assert_allclose(X[1], [1, 1, 0, 0, 0, 0, 0])   # Tuesday dummy
    np.testing.assert_allclose(X[2], [1, 0, 0, 0, 0, 0, 1])   # Sunday dummy
    np.testing.assert_allclose(design_row(5.0, 6, spec), X[2])
    with pytest.raises(DesignError):
        build_design([0.0, 1.0], ["Monday", "Noday"],
                     DesignSpec(poly_order=0, include_day_factor=True))
    with pytest.raises(DesignError):
        build_design([2.0, 2.0, 2.0], None, DesignSpec(poly_order=1, standardize=True))
    with pytest.raises(DesignError):
        build_design([1.0, 2.0], None, DesignSpec(poly_order=-1))


def test_intercept_variance_factor():
    n = 10
    res = fit(np.ones((n, 1)), [5] * n)
    lam0, vhat = rate_and_variance(res, [1.0])
    assert lam0 == pytest.approx(5.0, rel=1e-10)
    assert vhat == pytest.approx(1.0 + 1.0 / n, rel=1e-12)


def test_region_regression_variants():
    res = fit(np.ones((10, 1)), [5] * 10)      # rate 5, factor 1.1
    normal = region_regression(res, [1.0], 0.05, "normal")
    assert (normal.realized_lo, normal.realized_hi) == (1, 9)
    sqrt_r = region_regression(res, [1.0], 0.05, "sqrt")
    assert (sqrt_r.realized_lo, sqrt_r.realized_hi) == (2, 10)
    plug = region_regression(res, [1.0], 0.05, "smallest-plugin", u=0.0)
    direct = region_smallest(pmf_poisson(5.0), 0.05, u=0.0)
    assert (plug.realized_lo, plug.realized_hi) == (direct.realized_lo, direct.realized_hi)
    with pytest.raises(DomainError):
        region_regression(res, [1.0], 0.05, "widest")
    with pytest.raises(DomainError):
        region_regression(res, [1.0], 1.0, "normal")


def diag_fit(residuals):
    n = len(residuals)
    return GlmFit(theta=np.zeros(1), info_observed=np.eye(1), loglik=0.0,
                  aic=0.0, fitted_rates=np.ones(n),
                  residuals=np.asarray(residuals, dtype=np.float64), design=None,
                  converged=True, iterations=1, X=np.ones((n, 1)),
                  y=np.ones(n, dtype=np.int64))


def test_diagnostics_balanced_table():
    res = diag_fit([-1.0, 1.0] * 18)
    d = residual_diagnostics(res)
    np.testing.assert_array_equal(d.table, np.full((6, 2), 3))
    assert d.statistic == pytest.approx(0.0, abs=1e-12)
    assert d.p_value == pytest.approx(1.0, abs=1e-12)
    assert d.df == 5


def test_diagnostics_bin_edges():
    res = diag_fit(rng.normal(size=76))
    d = residual_diagnostics(res)
    assert d.bin_edges == (13, 26, 38, 51, 64, 76)
    assert tuple(np.diff((0,) + d.bin_edges)) == (13, 13, 12, 13, 13, 12)
    assert d.table.sum() == 76


def test_diagnostics_against_scipy():
    res = diag_fit(rng.normal(size=76))
    d = residual_diagnostics(res)
    stat, p, df, _ = st.chi2_contingency(d.table, correction=False)
    assert d.statistic == pytest.approx(stat, rel=1e-10)
    assert d.p_value == pytest.approx(p, rel=1e-8)
    assert d.df == df


def test_diagnostics_errors():
    with pytest.raises(DomainError):
        residual_diagnostics(diag_fit(rng.normal(size=20)), n_bins=1)
    with pytest.raises(DiagnosticsError):
        residual_diagnostics(diag_fit([1.0, -1.0, 1.0]), n_bins=6)
    with pytest.raises(DiagnosticsError):
        residual_diagnostics(diag_fit([1.0] * 30))    # no nonpositive column


def test_fit_input_validation():
    with pytest.raises(DomainError):
        fit(np.ones((3, 1)), [1, -2, 3])
    with pytest.raises(DomainError):
        fit(np.ones((3, 1)), [1.5, 2.0, 3.0])
    with pytest.raises(DesignError):
        fit(np.ones(3), [1, 2, 3])
    with pytest.raises(DesignError):
        fit(np.ones((2, 3)), [1, 2])
    with pytest.raises(SingularityError):
        fit(np.column_stack([np.ones(5), np.ones(5)]), [1, 2, 3, 2, 1])
    with pytest.raises(DivergenceError):
        loglik([800.0], np.ones((2, 1)), [1, 2])
