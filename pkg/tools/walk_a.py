"""Continuation walk for the stage-A window.

Takes small steps along the constraint manifold: measures a local
Jacobian of (point, hi, xi, aic, lo) with respect to a set of count
dials, then solves for the dial mix that advances the point total a
few units while pinning the other four statistics, applying integer
moves with sum-preserving compensation and refreshing the Jacobian
every step.
"""
import json
import numpy as np

src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

POOL = list(range(88, 100))
KEYS = ("point", "hi", "xi", "aic", "lo")
TARGET = np.array([96876.0, 118323.0, 16.89, 4889.52, 86157.0])
SCALE = np.array([1.0, 0.45, 0.004, 0.20, 0.45])


def load_bounds():
    blob = json.loads((WORK / "coarse_a.json").read_text())
    params = np.array(blob["params"])
    curve = curve_values(params[:6], np.concatenate([[0.0], params[6:12]]))
    return bounds_from_curve(curve, FREE_A,
                             overrides={64: (12, 70), 70: (5, 90), 71: (5, 90)})


def apply_moves(counts, bounds, moves):
    new = dict(counts)
    for d, dl in moves.items():
        lo_b, hi_b = bounds[d]
        new[d] = int(min(hi_b, max(lo_b, new[d] + dl)))
    drift = sum(new.values()) - sum(counts.values())
    i = 0
    while drift != 0 and i < 200000:
        d = POOL[i % len(POOL)]
        adj = -1 if drift > 0 else 1
        lo_b, hi_b = bounds[d]
        if lo_b <= new[d] + adj <= hi_b:
            new[d] += adj
            drift += adj
        i += 1
    return new


def ramp_shape(counts):
    f, od, fc = forecast_at(counts, 137)
    lam = f.fitted_rates
    out = {}
    for i, d in enumerate(range(62, 138)):
        if d in FREE_A and d >= 120:
            w = lam[i] * min(1.0, (d - 119) / 18.0)
            out[d] = w
    tot = sum(out.values())
    return {d: w / tot for d, w in out.items()}


def vec(info):
    return np.array([info[k] for k in KEYS], dtype=float)


DIALS = [
    {137: -30}, {136: -30}, {135: -30}, {134: -30},
    {113: 100}, {115: 100}, {101: -60}, {116: 60}, {103: 60},
    "ramp",
]


def dial_moves(counts, k, scale=1.0):
    d = DIALS[k]
    if d == "ramp":
        sh = ramp_shape(counts)
        return {dd: round(60.0 * scale * w * len(sh)) for dd, w in sh.items()}
    return {dd: round(dl * scale) for dd, dl in d.items()}


def jacobian(counts, bounds, b):
    cols = []
    for k in range(len(DIALS)):
        _, info = eval_a(apply_moves(counts, bounds, dial_moves(counts, k)))
        cols.append((vec(info) - b))
    return np.array(cols).T


if __name__ == "__main__":
    counts = load_stage("stage_a_r2")
    bounds = load_bounds()
    frac = {k: 0.0 for k in range(len(DIALS))}
    best = None
    for step in range(60):
        pen, info = eval_a(counts)
        b = vec(info)
        gap = TARGET - b
        box = (abs(gap[0]) <= 10 and abs(gap[1]) <= 0.5 and
               abs(gap[2]) <= 0.007 and abs(gap[3]) <= 0.35 and
               abs(gap[4]) <= 1.5)
        print(f"step {step}: pen={pen:.1f} pt={info['point']} hi={info['hi']} "
              f"lo={info['lo']} xi={info['xi']:.4f} aic={info['aic']:.2f} "
              f"miss={info['sign_miss']}", flush=True)
        if best is None or pen < best[0]:
            best = (pen, dict(counts))
        if box:
            break
        J = jacobian(counts, bounds, b)
        t = gap.copy()
        cap = 14.0
        if abs(t[0]) > cap:
            t = t * (cap / abs(t[0]))
        Jw = J / SCALE[:, None]
        tw = t / SCALE
        s, *_ = np.linalg.lstsq(Jw, tw, rcond=None)
        s = np.clip(s, -1.2, 1.2)
        moves = {}
        for k, sc in enumerate(s):
            mv = dial_moves(counts, k, scale=float(sc))
            for dd, dl in mv.items():
                moves[dd] = moves.get(dd, 0) + dl
        if all(v == 0 for v in moves.values()):
            print("no movement possible", flush=True)
            break
        counts = apply_moves(counts, bounds, moves)
    pen, info = eval_a(counts)
    if pen > best[0]:
        pen, counts = best[0], best[1]
        _, info = eval_a(counts)
    print("final:", round(pen, 2), info, flush=True)
    save_stage("stage_a_w", counts)
