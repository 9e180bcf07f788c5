"""Two-phase walk plus greedy polish for the July window targets."""
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
    assert lo == 128062, lo
    return np.array([pt, hi, rpt, rlo, rhi], dtype=float)


def pen_of(v):
    return float(np.sum(((v - TARGET) / BAND) ** 2))


def ok_acc(v):
    g = np.abs(v - TARGET)
    return bool(np.all(g <= BAND))


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
    best = (dict(counts), np.inf)
    v = measure(counts)
    for step in range(40):
        gap = TARGET - v
        pen = pen_of(v)
        if pen < best[1]:
            best = (dict(counts), pen)
        fine = abs(gap[4]) <= 700
        print(f"step {step} {'F' if fine else 'C'} pen {pen:8.1f} gaps "
              f"pt{gap[0]:+.0f} hi{gap[1]:+.0f} rpt{gap[2]:+.0f} "
              f"rlo{gap[3]:+.0f} rhi{gap[4]:+.0f}", flush=True)
        if ok_acc(v):
            break
        refresh = (step % (1 if fine else 2)) == 0
        if refresh:
            cols = []
            for mv in DIALS:
                cand = apply_moves(counts, mv)
                cols.append((measure(cand) - v) if cand else np.zeros(5))
            J = np.array(cols).T
        caps = np.array([25., 50., 250., 200., 150.]) if fine else \
            np.array([60., 200., 500., 400., 450.])
        t = np.clip(gap, -caps, caps)
        s, *_ = np.linalg.lstsq(J / SCALE[:, None], t / SCALE, rcond=None)
        s = np.clip(s, -2.5 if fine else -6.0, 2.5 if fine else 6.0)
        moves = {}
        for k, sc in enumerate(s):
            for d, dl in DIALS[k].items():
                moves[d] = moves.get(d, 0) + int(round(dl * sc))
        nxt = apply_moves(counts, moves)
        if nxt is None:
            moves = {d: dl // 2 for d, dl in moves.items()}
            nxt = apply_moves(counts, moves)
        if nxt is None or all(val == 0 for val in moves.values()):
            print("walk stalled", flush=True)
            break
        counts = nxt
        v = measure(counts)

    counts, pen = best
    v = measure(counts)
    print("polish from pen", pen_of(v), flush=True)
    rng = np.random.default_rng(424242)
    for it in range(1500):
        if ok_acc(v):
            print(f"polish done at iter {it}", flush=True)
            break
        d1, d2 = rng.choice(FREE, size=2, replace=False)
        q = int(rng.integers(1, 7))
        cand = apply_moves(counts, {int(d1): q, int(d2): -q})
        if cand is None:
            continue
        vc = measure(cand)
        if pen_of(vc) < pen_of(v):
            counts, v = cand, vc
            if it % 10 == 0 or pen_of(v) < 6:
                g = v - TARGET
                print(f"  it {it} pen {pen_of(v):7.2f} gaps {g.astype(int)}",
                      flush=True)
    g = v - TARGET
    print("final cold:", v, "gaps:", g, "ok:", ok_acc(v), flush=True)
    out = dict(counts)
    out[179] = ANCHORS[179]
    save_stage("stage_abcd_w2", out)
