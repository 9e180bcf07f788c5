"""Residual reallocation for the stage-A window.

Shrinks squared-residual mass on days with high forecast-variance
leverage and rebuilds it on low-leverage days, holding the dispersion
ratio, the deviance budget, and the window total.  The shrink family
r' = r / (1 + mu1 v + mu2 + mu3/rate) is solved analytically per
round; the outer loop measures the cumulative point and upper bound
and adjusts (mu1, late gain) by a finite-difference Newton step.
"""
import json, math
import numpy as np
from scipy.optimize import brentq

src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

WINDOW = list(range(62, 138))
PT_T, LO_T, HI_T = 10970.0, 249.5, 32425.5
XI_T, AIC_T = 16.89, 4889.52


def load_bounds():
    blob = json.loads((WORK / "coarse_a.json").read_text())
    params = np.array(blob["params"])
    curve = curve_values(params[:6], np.concatenate([[0.0], params[6:12]]))
    return bounds_from_curve(curve, FREE_A,
                             overrides={64: (12, 70), 70: (5, 90), 71: (5, 90)})


def model_state(counts):
    f, od, fc = forecast_at(counts, 137)
    lam = f.fitted_rates.astype(float)
    y = np.array([counts[d] for d in WINDOW], dtype=float)
    res = y - lam
    omega_inv = np.linalg.inv(od.omega_hat[:12, :12])
    vbar = np.zeros(len(WINDOW))
    lams_fc = []
    za = normal_quantile(1.0 - fc.alpha_star / 2.0)
    lo_sum = 0.0
    hi_sum = 0.0
    for d in range(138, 155):
        x0 = design_row(float(d), weekday_of_daynum(d), f.design)
        lam0 = math.exp(float(x0 @ f.theta))
        a = omega_inv @ x0
        vbar += (lam0 ** 2) * (f.X @ a) ** 2
        var = (lam0 * (1.0 + lam0) / od.xi + lam0
               + lam0 * lam0 * float(x0 @ od.sandwich[:12, :12] @ x0) / 76.0)
        s = math.sqrt(var)
        lams_fc.append(lam0)
        lo_sum += max(0.0, lam0 - za * s)
        hi_sum += lam0 + za * s
    vbar /= vbar.mean()
    return f, od, lam, res, vbar, np.array(lams_fc), lo_sum, hi_sum


def solve_mu23(res, lam, vbar, free_mask, mu1, d_target, dev_target):
    """Given mu1, find (mu2, mu3) hitting the residual-square and
    deviance-proxy totals over free days (anchors contribute as-is)."""
    fixed_d = float(np.sum(res[~free_mask] ** 2))
    fixed_dev = float(np.sum(res[~free_mask] ** 2 / lam[~free_mask]))
    r, lm, v = res[free_mask], lam[free_mask], vbar[free_mask]

    def shrunk(mu2, mu3):
        den = 1.0 + mu1 * v + mu2 + mu3 / lm
        den = np.clip(den, 0.25, 6.0)
        return r / den

    def dev_gap(mu3, mu2):
        rr = shrunk(mu2, mu3)
        return float(np.sum(rr ** 2 / lm)) + fixed_dev - dev_target

    def d_gap(mu2):
        lo, hi = -0.9, 8.0
        try:
            mu3 = brentq(dev_gap, -200.0, 4000.0, args=(mu2,), xtol=1e-10)
        except ValueError:
            mu3 = 0.0
        rr = shrunk(mu2, mu3)
        return float(np.sum(rr ** 2)) + fixed_d - d_target, mu3

    lo, hi = -0.8, 6.0
    glo, m3lo = d_gap(lo)
    ghi, m3hi = d_gap(hi)
    if glo * ghi > 0:
        mu2 = lo if abs(glo) < abs(ghi) else hi
        return shrunk(mu2, d_gap(mu2)[1]), False
    mu2 = brentq(lambda m: d_gap(m)[0], lo, hi, xtol=1e-10)
    gap, mu3 = d_gap(mu2)
    return shrunk(mu2, mu3), True


def rebuild(counts, bounds, mu1, gain, rounds=3):
    cur = dict(counts)
    for _ in range(rounds):
        f, od, lam, res, vbar, lams_fc, lo_r, hi_r = model_state(cur)
        n_big = float(np.sum(lam * (1.0 + lam)))
        d_target = n_big / XI_T
        dev_now = float(np.sum(res ** 2 / lam))
        dev_target = dev_now + (AIC_T - f.aic) / 2.0
        free_mask = np.array([d in FREE_A for d in WINDOW])
        ramp = np.clip((np.array(WINDOW, dtype=float) - 120.0) / 17.0, 0.0, 1.0)
        rr, ok = solve_mu23(res, lam, vbar, free_mask, mu1, d_target, dev_target)
        new = dict(cur)
        j = 0
        for i, d in enumerate(WINDOW):
            if not free_mask[i]:
                continue
            v = lam[i] * (1.0 + gain * ramp[i]) + rr[j]
            j += 1
            lo_b, hi_b = bounds[d]
            new[d] = int(min(hi_b, max(lo_b, round(v))))
        drift = sum(new[d] for d in WINDOW) - 85906
        pool = [d for d in FREE_A if 88 <= d <= 105]
        i = 0
        while drift != 0 and i < 300000:
            d = pool[i % len(pool)]
            adj = -1 if drift > 0 else 1
            lo_b, hi_b = bounds[d]
            if lo_b <= new[d] + adj <= hi_b:
                new[d] += adj
                drift += adj
            i += 1
        cur = new
    return cur


def measure(counts):
    _, od, lam, res, vbar, lams_fc, lo_r, hi_r = model_state(counts)
    return np.array([lams_fc.sum(), hi_r])


def outer(counts, bounds, mu1=1.0, gain=0.0, iters=6):
    for it in range(iters):
        cur = rebuild(counts, bounds, mu1, gain)
        m0 = measure(cur)
        gap = m0 - np.array([PT_T, HI_T])
        pen, info = eval_a(cur)
        print(f"outer {it}: mu1={mu1:.3f} gain={gain:.4f} pt={m0[0]:.1f} "
              f"hi={m0[1]:.1f} pen={pen:.1f}", flush=True)
        print("   ", info, flush=True)
        if abs(gap[0]) < 4 and abs(gap[1]) < 4:
            break
        J = np.zeros((2, 2))
        J[:, 0] = (measure(rebuild(counts, bounds, mu1 + 0.3, gain)) - m0) / 0.3
        J[:, 1] = (measure(rebuild(counts, bounds, mu1, gain + 0.002)) - m0) / 0.002
        try:
            step = np.linalg.solve(J, -gap)
        except np.linalg.LinAlgError:
            break
        mu1 = float(np.clip(mu1 + np.clip(step[0], -1.5, 1.5), 0.0, 12.0))
        gain = float(np.clip(gain + np.clip(step[1], -0.01, 0.01), -0.03, 0.06))
    return rebuild(counts, bounds, mu1, gain), mu1, gain


if __name__ == "__main__":
    counts = load_stage("stage_a_r2")
    bounds = load_bounds()
    out, mu1, gain = outer(counts, bounds)
    pen, info = eval_a(out)
    print("final:", round(pen, 1), info)
    save_stage("stage_a_alloc", out)
