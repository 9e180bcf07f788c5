"""End-to-end checks at the published tolerances.

One test per criterion; each prints a single summary line so a -v run
reads as a checklist.  The Monte Carlo criteria use fixed seeds, so
every run sees identical numbers.
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from countpred import (
    DailySeries,
    DesignSpec,
    OverdispersedFit,
    SimConfig,
    alpha_star,
    cumulative_forecast,
    estimate_xi,
    fit,
    fit_overdispersed,
    gen_frailty_counts,
    load_adjustments,
    loglik,
    observed_info,
    parse_ecdc_csv,
    pmf_gamma_predictive,
    pmf_poisson,
    pmf_umvue,
    reallocate_adjustments,
    region_overdispersed,
    region_regression,
    region_nonrandomized,
    region_smallest,
    residual_diagnostics,
    run_intercept_experiment,
    run_regression_experiment,
    score,
    exact_region_properties,
)
from countpred.forecast import _fit_for_cutoff
from countpred.simulate import result_to_csv

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "countpred" / "fixtures"
DESIGN = DesignSpec(poly_order=5, include_day_factor=True, standardize=True)


def _fixture_series() -> DailySeries:
    return parse_ecdc_csv(FIXTURES / "us_covid_deaths_ecdc.csv", country="US")


def test_criterion_1_exact_region_identities():
    for lam in (0.5, 1.0, 5.0, 17.0, 100.0):
        for alpha in (0.01, 0.05, 0.1):
            randomized = region_smallest(pmf_poisson(lam), alpha, u=0.0)
            cov_r, _ = exact_region_properties(randomized, lam)
            assert abs(cov_r - (1.0 - alpha)) <= 1e-10, (lam, alpha, cov_r)
            folded = region_nonrandomized(randomized)
            cov_n, _ = exact_region_properties(folded, lam)
            assert cov_n >= 1.0 - alpha - 1e-12, (lam, alpha, cov_n)
    print("criterion 1 PASS: randomized coverage exact, folded >= nominal "
          "on the 5x3 grid")


def _mc_band(target_pct: float, reps: int) -> float:
    p = target_pct / 100.0
    return 1.96 * math.sqrt(p * (1.0 - p) / reps) * 100.0 + 0.3


def test_criterion_2_intercept_monte_carlo():
    reps = 10000
    cells = {
        (1.0, 5): [("Gam0", 92.01, 2.41), ("Gam2", 84.29, 3.32)],
        (100.0, 100): [("Gam1", 94.87, 38.39)],
        (5.0, 50): [("Gam5", 94.82, 7.71)],
    }
    lines = []
    for (lam, n), checks in cells.items():
        config = SimConfig(scenario="intercept", n=n, replications=reps,
                           alpha=0.05, seed=20200315, lam=lam, workers=8)
        result = run_intercept_experiment(config)
        for name, cp_target, ml_target in checks:
            got = result.stats[name]
            band = _mc_band(cp_target, reps)
            assert abs(got.coverage_pct - cp_target) <= band, \
                (lam, n, name, got.coverage_pct, cp_target, band)
            assert abs(got.mean_length - ml_target) <= 0.02 * ml_target, \
                (lam, n, name, got.mean_length, ml_target)
            lines.append(f"{name}@(lam={lam:g},n={n}) CP {got.coverage_pct:.2f}"
                         f"~{cp_target} ML {got.mean_length:.2f}~{ml_target}")
    print("criterion 2 PASS: " + "; ".join(lines))


def test_criterion_3_regression_monte_carlo():
    reps = 10000

    def run(case, n):
        config = SimConfig(scenario="regression", n=n, replications=reps,
                           alpha=0.05, seed=20200315, case=case, workers=8)
        return run_regression_experiment(config)

    case1 = run(1, 200)
    cp1 = case1.stats["Gam1"].coverage_pct
    assert abs(cp1 - 94.92) <= 1.0, cp1

    case4 = run(4, 30)
    cp4_plug = case4.stats["Gam0"].coverage_pct
    cp4_norm = case4.stats["Gam1"].coverage_pct
    assert abs(cp4_plug - 91.32) <= 1.2, cp4_plug
    assert abs(cp4_norm - 94.96) <= 1.0, cp4_norm

    case3 = run(3, 30)
    ml = {name: case3.stats[name].mean_length for name in ("Gam0", "Gam1", "Gam2")}
    assert ml["Gam2"] >= ml["Gam1"] >= ml["Gam0"], ml
    print(f"criterion 3 PASS: case1 Gam1 {cp1:.2f}~94.92; case4 Gam0 "
          f"{cp4_plug:.2f}~91.32 Gam1 {cp4_norm:.2f}~94.96; case3 lengths "
          f"{ml['Gam2']:.2f}>={ml['Gam1']:.2f}>={ml['Gam0']:.2f}")


def test_criterion_4_fixture_pipeline():
    start = time.time()
    series = _fixture_series()
    _, od = _fit_for_cutoff(series, DESIGN, 137, True)
    base = od.base_fit
    diag = residual_diagnostics(base, 6)
    a_star = alpha_star(0.05, 17)

    assert abs(base.aic - 4889.52) <= 0.5, base.aic
    assert abs(od.xi - 16.89) <= 0.01, od.xi
    assert abs(diag.statistic - 4.4685) <= 0.01, diag.statistic
    assert abs(diag.p_value - 0.4841) <= 5e-4, diag.p_value
    assert abs(a_star - 0.003012) <= 1e-6, a_star

    _, od_again = _fit_for_cutoff(series, DESIGN, 137, True)
    assert np.array_equal(od.theta, od_again.theta)
    assert od.xi == od_again.xi
    elapsed = time.time() - start
    assert elapsed < 10.0, elapsed
    print(f"criterion 4 PASS: AIC {base.aic:.2f} xi {od.xi:.5f} chi2 "
          f"{diag.statistic:.4f} p {diag.p_value:.4f} a* {a_star:.7f} "
          f"in {elapsed:.1f}s, repeat fit identical")


def test_criterion_5_forecast_reproduction():
    series = _fixture_series()
    rows = {137: (96876, 86157, 118323),
            145: (101010, 96567, 106057),
            153: (104344, 104022, 104665)}
    lines = []
    for cutoff, (tp, tl, th) in rows.items():
        sub, fitted = _fit_for_cutoff(series, DESIGN, cutoff, True)
        fc = cumulative_forecast(fitted, sub, 154, 0.05)
        pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
        assert abs(pt - tp) <= 17, (cutoff, pt, tp)
        assert abs(lo - tl) <= 1 and abs(hi - th) <= 1, (cutoff, lo, hi)
        lines.append(f"c{cutoff} {pt} [{lo},{hi}]")

    sub, fitted = _fit_for_cutoff(series, DESIGN, 185, True)
    fc = cumulative_forecast(fitted, sub, 199, 0.05, allow_long_horizon=True)
    pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
    assert abs(pt - 143272) <= 15, pt
    assert abs(lo - 128062) <= 1 and abs(hi - 176957) <= 1, (lo, hi)
    lines.append(f"raw {pt} [{lo},{hi}]")

    adjustments = load_adjustments(FIXTURES / "adjustments_us.json")
    tagged = DailySeries(records=series.records, country=series.country,
                         adjustments=tuple(adjustments))
    realloc = reallocate_adjustments(tagged)
    sub2, fitted2 = _fit_for_cutoff(realloc, DESIGN, 185, True)
    fc2 = cumulative_forecast(fitted2, sub2, 199, 0.05, allow_long_horizon=True)
    pt2, (lo2, hi2) = fc2.point_cumulative, fc2.interval_cumulative
    for got, want in ((pt2, 146055), (lo2, 128121), (hi2, 185369)):
        assert abs(got - want) <= 0.005 * want, (got, want)
    lines.append(f"realloc {pt2} [{lo2},{hi2}]")
    print("criterion 5 PASS: " + "; ".join(lines))


def test_criterion_6_property_suites():
    rng = np.random.default_rng(606060)

    # score and Hessian agree with central differences on a random fit
    n, k = 40, 3
    X = np.column_stack([np.ones(n), rng.normal(0, 1, n), rng.uniform(0, 1, n)])
    theta0 = np.array([1.0, 0.4, -0.3])
    y = rng.poisson(np.exp(X @ theta0))
    theta = fit(X, y).theta
    g = score(theta, X, y)
    info = observed_info(theta, X)
    h = 1e-6
    for j in range(k):
        e = np.zeros(k)
        e[j] = h
        fd_g = (loglik(theta + e, X, y) - loglik(theta - e, X, y)) / (2 * h)
        scale = max(1.0, abs(fd_g))
        assert abs(g[j] - fd_g) / scale <= 1e-6, (j, g[j], fd_g)
        fd_h = (score(theta + e, X, y) - score(theta - e, X, y)) / (2 * h)
        scale_h = np.maximum(1.0, np.abs(fd_h))
        assert np.all(np.abs(-info[:, j] - fd_h) / scale_h <= 1e-5), j

    # averaging the estimator over the sufficient statistic recovers the pmf
    n_pool, lam = 4, 2.5
    mean_t = n_pool * lam
    weights = [math.exp(-mean_t + t * math.log(mean_t) - math.lgamma(t + 1))
               for t in range(400)]
    for k_val in (0, 1, 3, 7):
        avg = sum(w * pmf_umvue(n_pool, t).mass(k_val)
                  for t, w in enumerate(weights))
        truth = pmf_poisson(lam).mass(k_val)
        assert abs(avg - truth) <= 1e-8, (k_val, avg, truth)

    # predictive pmf normalizes over its stored support
    for n_, t_, kappa, beta in [(5, 12, 0.25, 0.005), (50, 200, 2.0, 1.0)]:
        pm = pmf_gamma_predictive(n_, t_, kappa, beta)
        total = float(np.exp(pm.log_mass).sum())
        assert 0.0 <= 1.0 - total <= 1e-9 or abs(total - 1.0) <= 1e-9, total

    # the frailty interval collapses onto the normal interval as xi -> inf
    base = fit(X, y)
    sandwich = base.X.shape[0] * np.linalg.inv(observed_info(base.theta, base.X))
    forced = OverdispersedFit(theta=base.theta, xi=1e12, sandwich=sandwich,
                              sigma_hat=None, omega_hat=None, base_fit=base)
    for x0 in (X[0], X[n // 2], X[-1]):
        wide = region_overdispersed(forced, x0, 0.05)
        norm = region_regression(base, x0, 0.05, "normal")
        assert (wide.realized_lo, wide.realized_hi) == \
            (norm.realized_lo, norm.realized_hi)

    # intercept designs reproduce the observed total exactly
    fitted_total = float(np.exp(base.X @ base.theta).sum())
    assert abs(fitted_total - float(y.sum())) <= 1e-6 * max(1.0, y.sum())

    # re-allocation shuffles history without changing any running total
    series = _fixture_series()
    adjustments = load_adjustments(FIXTURES / "adjustments_us.json")
    tagged = DailySeries(records=series.records, country=series.country,
                         adjustments=tuple(adjustments))
    realloc = reallocate_adjustments(tagged)
    assert realloc.total() == series.total()
    assert all(isinstance(r.count, int) and r.count >= 0 for r in realloc.records)
    by_day = {r.daynum: r.count for r in series.records}
    for day, amount in adjustments:
        assert realloc.cumulative_to(day - 1) >= \
            series.cumulative_to(day - 1), day
        assert by_day[day] - dict((r.daynum, r.count)
                                  for r in realloc.records)[day] <= amount

    # the simulation harness is worker-count invariant bit for bit
    outputs = set()
    for workers in (1, 4, 8):
        config = SimConfig(scenario="intercept", n=5, replications=600,
                           alpha=0.05, seed=99, lam=1.0, workers=workers)
        outputs.add(result_to_csv(run_intercept_experiment(config)))
    assert len(outputs) == 1
    print("criterion 6 PASS: derivatives, unbiasedness, normalization, "
          "xi->inf collapse, total preservation, re-allocation identity, "
          "worker invariance")


def test_criterion_7_overdispersion_recovery():
    rng = np.random.default_rng(20200315)
    n = 5000
    w = np.linspace(0.0, 2.0, n)
    X = np.column_stack([np.ones(n), w])
    rates = np.exp(3.0 + 0.5 * w)
    y = gen_frailty_counts(rates, 4.0, rng)
    xi_hat = estimate_xi(fit(X, y))
    assert 3.5 <= xi_hat <= 4.5, xi_hat

    reps = 2000
    n_cov = 100
    w_cov = np.linspace(0.0, 2.0, n_cov)
    X_cov = np.column_stack([np.ones(n_cov), w_cov])
    rates_cov = np.exp(3.0 + 0.5 * w_cov)
    x0 = X_cov[n_cov // 2]
    lam0 = float(np.exp(x0 @ np.array([3.0, 0.5])))
    hits6 = hits1 = 0
    for rep in range(reps):
        rep_rng = np.random.default_rng((20200315, rep))
        y_rep = gen_frailty_counts(rates_cov, 16.0, rep_rng)
        od = fit_overdispersed(fit(X_cov, y_rep))
        y_new = int(gen_frailty_counts(np.array([lam0]), 16.0, rep_rng)[0])
        r6 = region_overdispersed(od, x0, 0.05)
        r1 = region_regression(od.base_fit, x0, 0.05, "normal")
        hits6 += r6.realized_lo <= y_new <= r6.realized_hi
        hits1 += r1.realized_lo <= y_new <= r1.realized_hi
    cov6 = 100.0 * hits6 / reps
    cov1 = 100.0 * hits1 / reps
    assert cov6 >= 93.0, cov6
    assert cov6 - cov1 >= 2.0, (cov6, cov1)
    print(f"criterion 7 PASS: xi_hat {xi_hat:.3f} in [3.5,4.5]; coverage "
          f"Gam6 {cov6:.1f}% vs Gam1 {cov1:.1f}%")
