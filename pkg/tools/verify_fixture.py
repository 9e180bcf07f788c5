"""Cold verification of every deterministic benchmark on the bundled
fixture, through the public API only."""
import math
import time
from pathlib import Path

import numpy as np

from countpred import (
    DesignSpec, alpha_star, cumulative_forecast, estimate_xi,
    fit_overdispersed, load_adjustments, parse_ecdc_csv,
    reallocate_adjustments, residual_diagnostics, sensitivity_sweep,
)
from countpred.forecast import _fit_for_cutoff

FIX = Path("src/countpred/fixtures")
t0 = time.time()
series = parse_ecdc_csv(FIX / "us_covid_deaths_ecdc.csv", country="US")
design = DesignSpec(poly_order=5, include_day_factor=True, standardize=True)

sub, od = _fit_for_cutoff(series, design, 137, True)
base = od.base_fit
diag = residual_diagnostics(base, 6)
print(f"AIC  {base.aic:.4f}  (4889.52 +-0.5)  {'OK' if abs(base.aic-4889.52)<=0.5 else 'FAIL'}")
print(f"xi   {od.xi:.5f}  (16.89 +-0.01)  {'OK' if abs(od.xi-16.89)<=0.01 else 'FAIL'}")
print(f"chi2 {diag.statistic:.4f}  (4.4685 +-0.01)  {'OK' if abs(diag.statistic-4.4685)<=0.01 else 'FAIL'}")
print(f"p    {diag.p_value:.5f}  (0.4841 +-5e-4)  {'OK' if abs(diag.p_value-0.4841)<=5e-4 else 'FAIL'}")
a = alpha_star(0.05, 17)
print(f"a*   {a!r}  {'OK' if abs(a-0.0030127052790058784)<=1e-6 else 'FAIL'}")

ROWS = {137: (96876, 86157, 118323), 145: (101010, 96567, 106057),
        153: (104344, 104022, 104665)}
for c, (tp, tl, th) in ROWS.items():
    sub, fitted = _fit_for_cutoff(series, design, c, True)
    fc = cumulative_forecast(fitted, sub, 154, 0.05)
    pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
    ok = abs(pt - tp) <= 17 and abs(lo - tl) <= 1 and abs(hi - th) <= 1
    print(f"row {c}: {pt} [{lo},{hi}] vs {tp} [{tl},{th}]  {'OK' if ok else 'FAIL'}")

sub, fitted = _fit_for_cutoff(series, design, 185, True)
fc = cumulative_forecast(fitted, sub, 199, 0.05, allow_long_horizon=True)
pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
ok = abs(pt - 143272) <= 15 and abs(lo - 128062) <= 1 and abs(hi - 176957) <= 1
print(f"july raw: {pt} [{lo},{hi}]  {'OK' if ok else 'FAIL'}")

adj = load_adjustments(FIX / "adjustments_us.json")
from countpred import DailySeries
series_adj = DailySeries(records=series.records, country=series.country,
                         adjustments=tuple(adj))
re = reallocate_adjustments(series_adj)
sub2, fitted2 = _fit_for_cutoff(re, design, 185, True)
fc2 = cumulative_forecast(fitted2, sub2, 199, 0.05, allow_long_horizon=True)
pt, (lo, hi) = fc2.point_cumulative, fc2.interval_cumulative
ok = (abs(pt - 146055) <= 0.005 * 146055 and abs(lo - 128121) <= 0.005 * 128121
      and abs(hi - 185369) <= 0.005 * 185369)
print(f"july realloc: {pt} [{lo},{hi}]  {'OK' if ok else 'FAIL'}")
print(f"elapsed {time.time()-t0:.1f}s  (<10s for the fixture-pipeline subset)")
