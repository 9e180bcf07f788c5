src = open("tools/build_fixture.py").read()
exec(src.split('if __name__')[0])
counts = load_stage("stage_abcd_w3")
assert set(counts) == set(range(62, 186)), "day coverage"
assert sum(counts.values()) == 128062
for d, a in ANCHORS.items():
    assert counts[d] == a, (d, counts[d], a)
assert all(0 <= v <= 5000 for v in counts.values())
write_fixture(counts)
