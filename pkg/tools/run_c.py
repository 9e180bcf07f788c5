import math
import numpy as np
src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

counts_ab = load_stage("stage_ab")
s145 = sum(counts_ab[d] for d in range(62, 146))
budget_c = S154 - s145
print("s145", s145, "budget 146..154", budget_c)

def extra(merged, info):
    s149 = s145 + sum(merged[d] for d in range(146, 150))
    s150 = s149 + merged[150]
    pen = 0.0
    if not s149 < 100000:
        pen += 2000.0 + 10.0 * (s149 - 99999)
    if not s150 >= 100000:
        pen += 2000.0 + 10.0 * (100000 - s150)
    y154 = merged[154]
    if not 430 <= y154 <= 1250:
        pen += 500.0 + 5.0 * min(abs(y154 - 430), abs(y154 - 1250))
    return pen

ev_all = make_eval_bc(counts_ab, list(range(146, 154)), 153, extra)

def eval_c(counts):
    merged = dict(counts)
    merged[154] = S154 - s145 - sum(counts[d] for d in FREE_C)
    if merged[154] < 0:
        return math.inf, None
    return ev_all(merged)

# geometric decline fitted to the budget, weekday-modulated
wmult = {"Sunday": 0.74, "Monday": 0.82, "Saturday": 0.92, "Friday": 1.04,
         "Tuesday": 1.10, "Thursday": 1.08, "Wednesday": 1.16}
raw = {d: math.exp(-0.03 * (d - 146)) * wmult[weekday_of_daynum(d)]
       for d in range(146, 155)}
scale = budget_c / sum(raw.values())
counts = {d: int(round(raw[d] * scale)) for d in FREE_C}
rng = np.random.default_rng(88003)
bounds = {d: (420, 1650) for d in FREE_C}
ok = lambda info: ok_row(info, 153)
pen, counts, info = anneal(counts, FREE_C, bounds, eval_c, ok, rng,
                           iters=40000, t0=8.0, pair=False, label="C")
if not ok(info):
    pen, counts, info = polish(counts, FREE_C, bounds, eval_c, ok, rng,
                               rounds=40000, pair=False, label="C")
counts = dict(counts)
counts[154] = S154 - s145 - sum(counts[d] for d in FREE_C)
print(f"stage C done: pen={pen:.2f} row153={info[153]} y154={counts[154]}")

merged = dict(counts_ab)
merged.update(counts)
save_stage("stage_abc", merged)
s149 = sum(merged[d] for d in range(62, 150))
s150 = s149 + merged[150]
print("milestones: s149", s149, "s150", s150,
      "s154", sum(merged[d] for d in range(62, 155)))
_WARM.clear()
ev_cold = make_eval_bc(counts_ab, [153], 153)
m = dict(counts)
_, cold = ev_cold(m)
print("cold row153:", cold[153], "target", ROW_TARGETS[153])
