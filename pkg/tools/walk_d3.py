"""July-window walk: pin the raw triple, climb the reallocated upper.

Phase 1 walks proportionally (whole gap vector shrunk together), phase 2
tightens the caps near the target, and a greedy pair polish grinds the
last few counts.  All eval is cold; pair moves preserve the budget.
"""
import numpy as np

src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

TARGET = np.array([143272.0, 176957.0, 146055.0, 128121.0, 185369.0])
BAND = np.array([12.0, 1.0, 600.0, 500.0, 800.0])
SCALE = np.array([3.0, 0.5, 200.0, 150.0, 250.0])
LO_B, HI_B = 120, 1800
FREE = [d for d in range(155, 186) if d != 179]

DIALS = [
    {175: -8, 185: 8}, {182: -8, 178: 8}, {168: 8, 169: -8},
    {160: -8, 180: 8}, {162: 12, 166: -12}, {155: -8, 185: 8},
    {183: 8, 184: -8}, {171: -8, 177: 8},
]


def measure(counts):
    _WARM.clear()
    m = dict(counts)
    m[179] = ANCHORS[179]
    _, od, fc = forecast_at(m, 185, target=199)
    pt, (lo, hi) = fc.point_cumulative, fc.interval_cumulative
    if lo != 128062:
        return None
    series = counts_to_series(m, 62, 185)
    series = DailySeries(records=series.records, country="US",
                         adjustments=ADJUSTMENTS)
    realloc = reallocate_adjustments(series)
    rc = dict(zip(realloc.daynums(), realloc.counts()))
    _WARM.clear()
    f2 = fit_window(rc, 62, 185)
    od2 = fit_overdispersed(f2)
    fc2 = cumulative_forecast(od2, realloc, 199, 0.05, allow_long_horizon=True)
    rpt, (rlo, rhi) = fc2.point_cumulative, fc2.interval_cumulative
    return np.array([pt, hi, rpt, rlo, rhi], dtype=float)


def score_of(v):
    return float(np.max(np.abs(v - TARGET) / BAND))


def pen_of(v):
    return float(np.sum(((v - TARGET) / BAND) ** 2))


def expand(s):
    moves = {}
    for k, sc in enumerate(s):
        for d, dl in DIALS[k].items():
            q = int(round(abs(dl * sc)))
            moves[d] = moves.get(d, 0) + (q if dl * sc >= 0 else -q)
    return moves


def apply_moves(counts, moves):
    new = dict(counts)
    for d, dl in moves.items():
        nv = new[d] + dl
        if not (LO_B <= nv <= HI_B):
            return None
        new[d] = nv
    return new


if __name__ == "__main__":
    counts = load_stage("stage_abcd")
    counts = {d: counts[d] for d in counts if d != 179}
    v = measure(counts)
    best = (dict(counts), score_of(v), v)
    J = None
    for step in range(36):
        gap = TARGET - v
        sc_now = score_of(v)
        if sc_now < best[1]:
            best = (dict(counts), sc_now, v)
        fine = abs(gap[4]) <= 500
        print(f"step {step} {'F' if fine else 'C'} score {sc_now:7.2f} gaps "
              f"pt{gap[0]:+.0f} hi{gap[1]:+.0f} rpt{gap[2]:+.0f} "
              f"rlo{gap[3]:+.0f} rhi{gap[4]:+.0f}", flush=True)
        if sc_now <= 1.0:
            break
        if J is None or (step % (1 if fine else 3)) == 0:
            cols = []
            for mv in DIALS:
                cand = apply_moves(counts, mv)
                vv = measure(cand) if cand else None
                cols.append((vv - v) if vv is not None else np.zeros(5))
            J = np.array(cols).T
        caps = np.array([25., 40., 250., 200., 140.]) if fine else \
            np.array([1e9, 1e9, 1e9, 1e9, 450.])
        shrink = min(1.0, float(np.min(caps / np.maximum(np.abs(gap), 1e-9))))
        t = gap * shrink
        s, *_ = np.linalg.lstsq(J / SCALE[:, None], t / SCALE, rcond=None)
        s = np.clip(s, -2.5 if fine else -6.0, 2.5 if fine else 6.0)
        nxt = apply_moves(counts, expand(s))
        vn = measure(nxt) if nxt is not None else None
        if vn is None:
            nxt = apply_moves(counts, expand(s / 2.0))
            vn = measure(nxt) if nxt is not None else None
        if vn is None:
            print("walk stalled", flush=True)
            break
        counts, v = nxt, vn

    counts, _, v = best
    print("polish from score", score_of(v), flush=True)
    rng = np.random.default_rng(424242)
    stall = 0
    for it in range(3000):
        if score_of(v) <= 0.95:
            print(f"polish done at iter {it}", flush=True)
            break
        d1, d2 = rng.choice(FREE, size=2, replace=False)
        q = int(rng.integers(1, 5))
        cand = apply_moves(counts, {int(d1): q, int(d2): -q})
        vc = measure(cand) if cand is not None else None
        if vc is not None and pen_of(vc) < pen_of(v):
            counts, v = cand, vc
            stall = 0
            g = v - TARGET
            print(f"  it {it} pen {pen_of(v):8.2f} score {score_of(v):6.2f} "
                  f"gaps {g.astype(int)}", flush=True)
        else:
            stall += 1
    g = v - TARGET
    print("final cold:", v, "gaps:", g, "score:", score_of(v), flush=True)
    out = dict(counts)
    out[179] = ANCHORS[179]
    save_stage("stage_abcd_w3", out)
