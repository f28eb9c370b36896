import numpy as np
import pytest

from coflowsched import (ArrivalConfig, ConfigError, Fabric, ParseError,
                         SyntheticConfig, gen_arrivals, gen_synthetic,
                         instance_from_json, instance_to_json, isolation_cct,
                         parse_trace, sample_trace)


def test_seeded_determinism():
    cfg = SyntheticConfig(machines=10, coflows=60, rng_seed=7)
    fab = Fabric.uniform(10)
    a = instance_to_json(gen_synthetic(cfg, fab))
    b = instance_to_json(gen_synthetic(cfg, fab))
    assert a == b


def test_deadline_bounds():
    cfg = SyntheticConfig(machines=6, coflows=40, rng_seed=3, alpha_range=(2, 4))
    inst = gen_synthetic(cfg, Fabric.uniform(6))
    for c in inst.coflows:
        cct0 = isolation_cct(inst, c.coflow_id)
        assert cct0 - 1e-9 <= c.deadline - c.release_time <= 4 * cct0 + 1e-9


def test_alpha_two_bounds():
    cfg = SyntheticConfig(machines=5, coflows=30, rng_seed=11, alpha_range=(2, 2))
    inst = gen_synthetic(cfg, Fabric.uniform(5))
    for c in inst.coflows:
        cct0 = isolation_cct(inst, c.coflow_id)
        assert c.deadline <= 2 * cct0 + 1e-9


def test_no_class2_means_unit_weights():
    cfg = SyntheticConfig(machines=5, coflows=30, rng_seed=5, class2_prob=0.0)
    inst = gen_synthetic(cfg, Fabric.uniform(5))
    assert all(c.weight == 1.0 and c.class_id == 1 for c in inst.coflows)


def test_class_mix():
    cfg = SyntheticConfig(machines=5, coflows=400, rng_seed=5, class2_prob=0.4,
                          class2_weight=10)
    inst = gen_synthetic(cfg, Fabric.uniform(5))
    share = sum(1 for c in inst.coflows if c.class_id == 2) / 400
    assert 0.3 < share < 0.5
    assert all(c.weight == 10.0 for c in inst.coflows if c.class_id == 2)


def test_config_validation():
    with pytest.raises(ConfigError):
        SyntheticConfig(machines=5, coflows=10, rng_seed=1, type2_prob=1.5)
    with pytest.raises(ConfigError):
        SyntheticConfig(machines=5, coflows=10, rng_seed=1, alpha_range=(0.5, 2))
    with pytest.raises(ConfigError):
        SyntheticConfig(machines=5, coflows=10, rng_seed=None)
    with pytest.raises(ConfigError):
        gen_synthetic(SyntheticConfig(machines=5, coflows=10, rng_seed=1),
                      Fabric.uniform(4))


def test_json_round_trip():
    cfg = SyntheticConfig(machines=4, coflows=12, rng_seed=9, class2_prob=0.3)
    inst = gen_synthetic(cfg, Fabric.uniform(4))
    again = instance_from_json(instance_to_json(inst))
    assert instance_to_json(again) == instance_to_json(inst)


def test_arrivals_mean_gap():
    cfg = SyntheticConfig(machines=10, coflows=4000, rng_seed=21)
    arr = gen_arrivals(cfg, ArrivalConfig(lam=8.0, total_coflows=4000))
    times = [t for t, _ in arr]
    gaps = np.diff([0.0] + times)
    assert abs(gaps.mean() - 1 / 8) / (1 / 8) < 0.05
    assert len(arr) == 4000


def test_arrivals_absolute_deadlines():
    cfg = SyntheticConfig(machines=6, coflows=200, rng_seed=2, alpha_range=(2, 4))
    arr = gen_arrivals(cfg, ArrivalConfig(lam=4.0, total_coflows=200))
    fab = Fabric.uniform(6)
    for rel, c in arr:
        assert c.release_time == rel
        cct0 = max(c.port_volume[p] / fab.capacity(p) for p in c.port_volume)
        assert rel + cct0 - 1e-9 <= c.deadline <= rel + 4 * cct0 + 1e-9


def test_batch_arrivals():
    cfg = SyntheticConfig(machines=6, coflows=300, rng_seed=4)
    arr = gen_arrivals(cfg, ArrivalConfig(lam=8.0, total_coflows=300,
                                          batch_size_range=(5, 15)))
    sizes = {}
    for t, _ in arr:
        sizes[t] = sizes.get(t, 0) + 1
    full_batches = list(sizes.values())[:-1]  # last may be truncated
    assert all(5 <= s <= 15 for s in full_batches)
    assert len(arr) == 300


def test_zero_rate_rejected():
    with pytest.raises(ConfigError):
        ArrivalConfig(lam=0.0, total_coflows=10)


TRACE = """3 2
1 0 2 1 3 2 4:100 7:50
2 500 1 2 1 5:30
"""


def test_parse_trace(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text(TRACE)
    trace = parse_trace(str(path))
    assert trace.num_machines == 3
    rec = trace.records[0]
    assert rec.coflow_id == 1 and rec.arrival_ms == 0
    assert rec.mappers == [1, 3]
    assert rec.reducers == [(4, 100.0), (7, 50.0)]
    assert rec.flow_count == 4


def test_parse_trace_count_mismatch(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text("3 5\n1 0 1 1 1 2:10\n")
    with pytest.raises(ParseError):
        parse_trace(str(path))


def test_parse_trace_malformed_line(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text("3 1\n1 0 2 1 3 2 4:100\n")  # announces 2 reducers, has 1
    with pytest.raises(ParseError, match="line 2"):
        parse_trace(str(path))


def test_parse_large_trace(tmp_path):
    lines = ["150 526"]
    for i in range(1, 527):
        lines.append(f"{i} {i * 10} 1 {1 + i % 150} 1 {1 + (i * 7) % 150}:{i % 90 + 1}")
    path = tmp_path / "fb.txt"
    path.write_text("\n".join(lines) + "\n")
    assert len(parse_trace(str(path)).records) == 526


def test_sample_trace(tmp_path):
    lines = ["150 40"]
    for i in range(1, 41):
        nm = 1 + i % 3
        mappers = " ".join(str(1 + (i + j) % 150) for j in range(nm))
        lines.append(f"{i} 0 {nm} {mappers} 2 {1 + i % 150}:{10 + i} {1 + (i + 5) % 150}:{5 + i}")
    path = tmp_path / "fb.txt"
    path.write_text("\n".join(lines) + "\n")
    trace = parse_trace(str(path))
    inst = sample_trace(trace, machines=6, coflows=10, seed=13)
    assert len(inst.coflows) == 10
    for c in inst.coflows:
        assert len(c.flows) <= 6
    again = sample_trace(trace, machines=6, coflows=10, seed=13)
    assert instance_to_json(inst) == instance_to_json(again)
    with pytest.raises(ConfigError):
        sample_trace(trace, machines=2, coflows=40, seed=1)
