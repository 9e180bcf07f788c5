import numpy as np
src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

counts_a = load_stage("stage_a_final")
assert sum(counts_a[d] for d in range(62, 138)) == S137, "stage A sum drifted"
rng = np.random.default_rng(77002)
counts_b, info = run_stage_b(counts_a, rng)
merged = dict(counts_a)
merged.update(counts_b)
save_stage("stage_ab", merged)
_WARM.clear()
eval_b = make_eval_bc(counts_a, [145], 145)
pen, cinfo = eval_b(counts_b)
print("cold row145:", cinfo[145], "target", ROW_TARGETS[145])
