import json, math
import numpy as np

src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

counts = load_stage("stage_a_r2")
blob = json.loads((WORK / "coarse_a.json").read_text())
params = np.array(blob["params"])
curve = curve_values(params[:6], np.concatenate([[0.0], params[6:12]]))
bounds = bounds_from_curve(curve, FREE_A,
                           overrides={64: (12, 70), 70: (5, 90), 71: (5, 90)})

f, od, fc = forecast_at(counts, 137)
lam = f.fitted_rates.astype(float)
WINDOW = list(range(62, 138))
y = np.array([counts[d] for d in WINDOW], dtype=float)
res = y - lam
omega_inv = np.linalg.inv(od.omega_hat[:12, :12])
vbar = np.zeros(len(WINDOW))
for d in range(138, 155):
    x0 = design_row(float(d), weekday_of_daynum(d), f.design)
    lam0 = math.exp(float(x0 @ f.theta))
    a = omega_inv @ x0
    vbar += (lam0 ** 2) * (f.X @ a) ** 2
M = float(np.sum(vbar * res * res))
D = float(np.sum(res * res))
print(f"M={M:.4g} D={D:.4g} xi={od.xi:.4f}")
print(" day  wd  free      y    lam     res    vbar  v*r2%   bounds")
order = np.argsort(-(vbar * res * res))
for i in order[:40]:
    d = WINDOW[i]
    b = bounds.get(d, ("-", "-"))
    print(f" {d:4d} {str(weekday_of_daynum(d))[:3]:>3} {str(d in FREE_A):>5} "
          f"{int(y[i]):6d} {lam[i]:7.0f} {res[i]:+7.0f} {vbar[i]:7.4f} "
          f"{100*vbar[i]*res[i]**2/M:5.1f}  {b}")
print("...low-leverage free days (v*r2% < 0.3), sorted by lam desc:")
rest = [i for i in order[40:] if WINDOW[i] in FREE_A]
rest += [i for i in order[:40] if False]
low = sorted([i for i in range(len(WINDOW)) if WINDOW[i] in FREE_A
              and 100*vbar[i]*res[i]**2/M < 0.3], key=lambda i: -lam[i])
for i in low[:36]:
    d = WINDOW[i]
    print(f" {d:4d} {str(weekday_of_daynum(d))[:3]:>3}  free {int(y[i]):6d} {lam[i]:7.0f} "
          f"{res[i]:+7.0f} {vbar[i]:7.4f} {100*vbar[i]*res[i]**2/M:5.2f}  {bounds[d]}")
