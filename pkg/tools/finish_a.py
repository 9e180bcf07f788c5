"""Final stage-A polish: flip the remaining residual-sign cells with
low-temperature annealing, verifying the gate with cold fits."""
import runpy
import numpy as np

ns = runpy.run_path("tools/polish_a.py", run_name="probe")
globals().update({k: ns[k] for k in
                  ("load_stage", "save_stage", "load_bounds", "anneal2",
                   "ok_a", "_WARM")})
eval_a = ns["make_eval_a"](ord_w=300.0, top2_w=0.0)
anneal2.__globals__["eval_a"] = eval_a

counts = load_stage("stage_a_w2")
bounds = load_bounds()
rng = np.random.default_rng(515151)
for lap in range(10):
    _, counts, _ = anneal2(counts, bounds, rng, iters=15000, t0=22.0,
                           label=f"S{lap}")
    _WARM.clear()
    pen, info = eval_a(counts)
    print(f"lap {lap} cold: pen={pen:.2f} pt={info['point']} "
          f"lo={info['lo']} hi={info['hi']} xi={info['xi']:.4f} "
          f"aic={info['aic']:.2f} miss={info['sign_miss']}", flush=True)
    if ok_a(info):
        print("cold gate PASSED", flush=True)
        save_stage("stage_a_final", counts)
        break
else:
    save_stage("stage_a_final_best", counts)
