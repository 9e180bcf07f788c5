"""Continuation walk for the July window: raise the reallocated upper
bound while pinning the raw forecast triple and the reallocated point,
using sum-preserving pair dials over days 155..185."""
import numpy as np

src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

TARGET = np.array([143272.0, 176957.0, 146055.0, 128121.0, 185369.0])
SCALE = np.array([3.0, 0.5, 200.0, 150.0, 250.0])
LO_B, HI_B = 120, 1800

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


def apply_moves(counts, moves):
    new = dict(counts)
    for d, dl in moves.items():
        nv = new[d] + dl
        if not (LO_B <= nv <= HI_B):
            return None
        new[d] = nv
    return new


def ok_now(v):
    g = v - TARGET
    return (abs(g[0]) <= 10 and abs(g[1]) <= 1 and abs(g[2]) <= 600
            and abs(g[3]) <= 500 and abs(g[4]) <= 750)


if __name__ == "__main__":
    counts = load_stage("stage_abcd")
    counts = {d: counts[d] for d in counts if d != 179}
    base = measure(counts)
    print("cold base:", base, "gaps:", base - TARGET, flush=True)
    best = (None, np.inf)
    J = None
    for step in range(16):
        v = measure(counts) if step else base
        gap = TARGET - v
        badness = float(np.sum((gap / SCALE) ** 2))
        if badness < best[1]:
            best = (dict(counts), badness)
        print(f"step {step}: raw=({v[0]:.0f},{v[1]:.0f}) "
              f"re=({v[2]:.0f},{v[3]:.0f},{v[4]:.0f}) gaps "
              f"pt{gap[0]:+.0f} hi{gap[1]:+.0f} rpt{gap[2]:+.0f} "
              f"rlo{gap[3]:+.0f} rhi{gap[4]:+.0f}", flush=True)
        if ok_now(v):
            print("targets reached", flush=True)
            break
        if step % 3 == 0:
            cols = []
            for k, mv in enumerate(DIALS):
                cand = apply_moves(counts, mv)
                cols.append((measure(cand) - v) if cand else np.zeros(5))
            J = np.array(cols).T
        t = gap.copy()
        cap = 450.0
        if abs(t[4]) > cap:
            t = t * (cap / abs(t[4]))
        s, *_ = np.linalg.lstsq(J / SCALE[:, None], t / SCALE, rcond=None)
        s = np.clip(s, -6.0, 6.0)
        moves = {}
        for k, sc in enumerate(s):
            for d, dl in DIALS[k].items():
                moves[d] = moves.get(d, 0) + int(round(dl * sc))
        nxt = apply_moves(counts, moves)
        if nxt is None or all(val == 0 for val in moves.values()):
            print("step blocked; shrinking", flush=True)
            moves = {d: dl // 2 for d, dl in moves.items()}
            nxt = apply_moves(counts, moves)
            if nxt is None:
                break
        counts = nxt
    final = best[0] if best[0] is not None else counts
    v = measure(final)
    print("final cold:", v, "gaps:", v - TARGET, flush=True)
    out = dict(final)
    out[179] = ANCHORS[179]
    save_stage("stage_abcd_w", out)
