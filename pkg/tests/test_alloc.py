import csv

import pytest

from coflowsched import (SchedulerConfig, actual_cct, build_sigma,
                         greedy_allocate, isolation_cct)
from coflowsched.alloc import write_event_log
from audit import audit_timeline
from conftest import mk_instance, rand_instance

EPS = 0.1


def test_motivating_optimal_order(motivating):
    tl = greedy_allocate(motivating, [2, 3, 4, 5, 1])
    for k in (2, 3, 4, 5):
        assert actual_cct(tl, k) == pytest.approx(1 + EPS)
    assert actual_cct(tl, 1) == pytest.approx(2 + EPS)


def test_motivating_wide_first(motivating):
    tl = greedy_allocate(motivating, [1, 2, 3, 4, 5])
    assert actual_cct(tl, 1) == pytest.approx(1.0)
    for k in (2, 3, 4, 5):
        assert actual_cct(tl, k) == pytest.approx(2 + EPS)
    on_time = sum(1 for k in (1, 2, 3, 4, 5)
                  if actual_cct(tl, k) <= motivating.coflow(k).deadline + 1e-9)
    assert on_time == 1


def test_single_flow_rate():
    inst = mk_instance(2, [(1, 10.0, 1, 1, [(1, 3, 3.0)])], capacity=2.0)
    tl = greedy_allocate(inst, [1])
    assert actual_cct(tl, 1) == pytest.approx(1.5)


def test_rejected_not_transmitted(motivating):
    tl = greedy_allocate(motivating, [2, 3])
    assert set(tl.coflow_cct) == {2, 3}
    with pytest.raises(KeyError):
        actual_cct(tl, 1)


def test_unknown_sigma_member(motivating):
    with pytest.raises(KeyError):
        greedy_allocate(motivating, [42])


def test_cct_is_max_of_flows():
    inst = mk_instance(2, [(1, 10.0, 1, 1, [(1, 3, 2.0), (2, 4, 5.0)])])
    tl = greedy_allocate(inst, [1])
    assert actual_cct(tl, 1) == pytest.approx(5.0)
    done = sorted(o.completion_time for o in tl.outcomes.values())
    assert done == pytest.approx([2.0, 5.0])


def test_start_time_offset():
    inst = mk_instance(2, [(1, 99.0, 1, 1, [(1, 3, 2.0)])])
    tl = greedy_allocate(inst, [1], start_time=5.0)
    assert actual_cct(tl, 1) == pytest.approx(7.0)


def test_isolation_lower_bound(rng):
    for _ in range(30):
        inst = rand_instance(rng)
        sigma = inst.coflow_ids
        tl = greedy_allocate(inst, sigma)
        for k in sigma:
            assert actual_cct(tl, k) >= isolation_cct(inst, k) - 1e-9


def test_audits_random_instances(rng):
    for _ in range(60):
        inst = rand_instance(rng)
        order = build_sigma(inst, SchedulerConfig(variant="wdcoflow"))
        tl = greedy_allocate(inst, order.sigma)
        audit_timeline(inst, order.sigma, tl)


def test_audits_full_admission(rng):
    for _ in range(30):
        inst = rand_instance(rng)
        sigma = inst.coflow_ids
        tl = greedy_allocate(inst, sigma)
        audit_timeline(inst, sigma, tl)


def test_flow_order_switch():
    # two flows of one coflow share the ingress port; volume order serves the
    # big one first, id order serves flow 0 first
    inst = mk_instance(2, [(1, 99.0, 1, 1, [(1, 3, 1.0), (1, 4, 3.0)])])
    by_volume = greedy_allocate(inst, [1])
    assert by_volume.outcomes[(1, 1)].completion_time == pytest.approx(3.0)
    assert by_volume.outcomes[(1, 0)].completion_time == pytest.approx(4.0)
    by_id = greedy_allocate(inst, [1], flow_order="id")
    assert by_id.outcomes[(1, 0)].completion_time == pytest.approx(1.0)
    assert by_id.outcomes[(1, 1)].completion_time == pytest.approx(4.0)
    with pytest.raises(ValueError):
        greedy_allocate(inst, [1], flow_order="fifo")


def test_event_log(tmp_path, motivating):
    tl = greedy_allocate(motivating, [2, 3, 4, 5, 1])
    path = tmp_path / "events.csv"
    write_event_log(tl, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time", "flow_id", "coflow_id", "event", "rate"]
    events = {r[3] for r in rows[1:]}
    assert {"start", "finish"} <= events
    finishes = [r for r in rows[1:] if r[3] == "finish"]
    assert len(finishes) == sum(len(c.flows) for c in motivating.coflows)
