import numpy as np
src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

merged = load_stage("stage_abcd")

def measure(counts):
    m = dict(counts)
    m[179] = ANCHORS[179]
    _, od, fc = forecast_at(m, 185, target=199)
    pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
    series = counts_to_series(m, 62, 185)
    series = DailySeries(records=series.records, country="US",
                         adjustments=ADJUSTMENTS)
    realloc = reallocate_adjustments(series)
    rc = dict(zip(realloc.daynums(), realloc.counts()))
    f2 = fit_window(rc, 62, 185)
    od2 = fit_overdispersed(f2)
    fc2 = cumulative_forecast(od2, realloc, 199, 0.05, allow_long_horizon=True)
    rpt, (rlo, rhi) = fc2.point_cumulative, fc2.interval_cumulative
    return np.array([pt, lo, hi, rpt, rlo, rhi], dtype=float), od.xi, od2.xi

base, xi_raw, xi_re = measure(merged)
print("base:", base, "xi", round(xi_raw, 3), "xi_realloc", round(xi_re, 3))
print("gaps raw:", base[:3] - np.array(JULY_RAW))
print("gaps realloc:", base[3:] - np.array(JULY_REALLOC))

dials = {
    "155to185+40": {155: -40, 185: 40},
    "160to180+40": {160: -40, 180: 40},
    "183swap184": {183: 40, 184: -40},
    "175to185+40": {175: -40, 185: 40},
    "pump168/169": {168: 40, 169: -40},
    "pump162/166": {162: 60, 166: -60},
    "182to178": {182: -40, 178: 40},
    "185to178": {185: -40, 178: 40},
}
for name, mv in dials.items():
    cand = dict(merged)
    for d, dl in mv.items():
        cand[d] += dl
    v, _, x2 = measure(cand)
    dv = v - base
    print(f"{name}: raw d=({dv[0]:+.0f},{dv[1]:+.0f},{dv[2]:+.0f}) "
          f"realloc d=({dv[3]:+.0f},{dv[4]:+.0f},{dv[5]:+.0f}) xi2={x2:.3f}",
          flush=True)
