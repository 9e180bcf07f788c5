import numpy as np
src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])

counts_abc = load_stage("stage_abc")
rng = np.random.default_rng(99004)
counts_d, info = run_stage_d(counts_abc, rng)
merged = dict(counts_abc)
merged.update(counts_d)
save_stage("stage_abcd", merged)
assert sum(merged[d] for d in range(62, 186)) == S185
print("S185 ok:", S185)
