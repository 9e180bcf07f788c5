import math
import numpy as np
src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

merged = load_stage("stage_abc")
counts_ab = {d: merged[d] for d in range(62, 146)}
s145 = sum(counts_ab.values())

def extra(m, info):
    s149 = s145 + sum(m[d] for d in range(146, 150))
    s150 = s149 + m[150]
    pen = 0.0
    if not s149 < 100000:
        pen += 2000.0 + 10.0 * (s149 - 99999)
    if not s150 >= 100000:
        pen += 2000.0 + 10.0 * (100000 - s150)
    return pen

ev_row = make_eval_bc(counts_ab, [153], 153, extra)

def eval_c(counts):
    m = dict(counts)
    m[154] = merged[154]
    pen, info = ev_row(m)
    if info is None:
        return math.inf, None
    pt, lo, hi = info[153]
    tp, tl, th = ROW_TARGETS[153]
    pen = ((pt - tp) / 1.5) ** 2 + ((lo - tl) / 0.3) ** 2 + ((hi - th) / 0.3) ** 2
    pen += extra(m, info)
    return pen, info

ok = lambda info: ok_row(info, 153)
counts = {d: merged[d] for d in FREE_C}
rng = np.random.default_rng(52525)
bounds = {d: (420, 1650) for d in FREE_C}
pen, counts, info = anneal(counts, FREE_C, bounds, eval_c, ok, rng,
                           iters=25000, t0=6.0, pair=True, label="Cp")
print("warm:", info[153])
_WARM.clear()
pen2, cold = eval_c(counts)
print("cold:", cold[153], "target", ROW_TARGETS[153])
pt, lo, hi = cold[153]
tp, tl, th = ROW_TARGETS[153]
if abs(pt - tp) <= 12 and abs(lo - tl) <= 1 and abs(hi - th) <= 1:
    out = dict(merged)
    out.update(counts)
    s149 = sum(out[d] for d in range(62, 150))
    s150 = s149 + out[150]
    assert s149 < 100000 <= s150, (s149, s150)
    assert sum(out[d] for d in range(62, 155)) == S154
    save_stage("stage_abc", out)
    print("saved improved stage_abc; s149", s149, "s150", s150)
else:
    print("NOT saved")
