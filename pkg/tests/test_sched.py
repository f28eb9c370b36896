import logging
import time

import pytest

from coflowsched import (ConfigError, Fabric, SchedulerConfig, SyntheticConfig,
                         build_sigma, cs_mha, dcoflow_variant_candidates,
                         dp_filter, edd_order, edd_trap_instance, eval_cct,
                         gen_synthetic, isolation_cct, psi_index,
                         reject_coflow, remove_late_coflows,
                         schedulability_index)
from coflowsched.model import Instance
from conftest import mk_instance, rand_instance

log = logging.getLogger(__name__)

ROUND_VARIANTS = ("dcoflow_v1", "dcoflow_v2", "wdcoflow", "wdcoflow_dp")
ALL_VARIANTS = ROUND_VARIANTS + ("cs_mha", "edd")


@pytest.mark.parametrize("variant", ROUND_VARIANTS)
def test_motivating_accepts_singletons(motivating, variant):
    order = build_sigma(motivating, SchedulerConfig(variant=variant))
    assert order.accepted == {2, 3, 4, 5}
    assert 1 in order.pre_rejected


def test_motivating_wdcoflow_order(motivating):
    order = build_sigma(motivating, SchedulerConfig(variant="wdcoflow"))
    assert order.sigma == [5, 4, 3, 2]
    assert order.pre_rejected == [1, 0, 0, 0, 0]


@pytest.mark.parametrize("machines", [4, 8, 16])
def test_generalized_counts(machines):
    inst = edd_trap_instance(machines, eps=0.1, singles=machines - 1)
    order = build_sigma(inst, SchedulerConfig(variant="wdcoflow"))
    assert len(order.accepted) == machines - 1
    assert cs_mha(inst).accepted == {1}


def test_single_coflow_accepted():
    inst = mk_instance(2, [(1, 2.0, 1, 1, [(1, 3, 1.0)])])
    for variant in ALL_VARIANTS:
        order = build_sigma(inst, SchedulerConfig(variant=variant))
        assert order.sigma == [1]


def test_empty_instance():
    inst = Instance(Fabric.uniform(2), [])
    for variant in ALL_VARIANTS:
        assert build_sigma(inst, SchedulerConfig(variant=variant)).sigma == []


def test_reject_coflow_motivating(motivating):
    S = [1, 2, 3, 4, 5]
    assert reject_coflow(motivating, S, [1, 2]) == 1
    weights = {1: 100.0, 2: 1.0}
    assert reject_coflow(motivating, S, [1, 2], weights) == 2
    assert reject_coflow(motivating, S, [2]) == 2
    with pytest.raises(ValueError):
        reject_coflow(motivating, S, [])


def test_variant_candidates_motivating(motivating):
    scores = dcoflow_variant_candidates(motivating, [1, 2, 3, 4, 5], 1, "dcoflow_v1")
    assert max(scores, key=scores.get) == 1
    assert set(scores) == {1, 2}


def test_variant_v2_gamma_one_single_bottleneck():
    # unique bottleneck port 1; gamma=1 restricts the sum to that port alone
    inst = mk_instance(2, [(1, 1.0, 1, 1, [(1, 3, 2.0)]),
                           (2, 1.5, 1, 1, [(1, 4, 1.0)]),
                           (3, 9.0, 1, 1, [(2, 4, 0.5)])])
    scores = dcoflow_variant_candidates(inst, [1, 2, 3], 1, "dcoflow_v2", gamma=1.0)
    S = [1, 2, 3]
    for k in scores:
        assert scores[k] == pytest.approx(psi_index(inst, 1, k, S))


def test_v1_vs_wdcoflow_agreement(rng):
    # the weighted rule with unit weights usually matches v1; log disagreements
    agree = total = 0
    for _ in range(100):
        inst = rand_instance(rng)
        S = inst.coflow_ids
        lstar = [p for p in inst.fabric.ports
                 if schedulability_index(inst, p, S) < 0]
        if not lstar:
            continue
        bott = max(inst.fabric.ports,
                   key=lambda p: sum(inst.coflow(k).port_volume.get(p, 0) for k in S))
        users = [k for k in S if bott in inst.coflow(k).port_volume]
        if not users:
            continue
        scores = dcoflow_variant_candidates(inst, S, bott, "dcoflow_v1")
        v1_pick = max(scores, key=lambda k: (scores[k], -k))
        w_pick = reject_coflow(inst, S, users)
        total += 1
        agree += v1_pick == w_pick
    log.info("v1 vs weighted-rule agreement: %d/%d", agree, total)
    assert total > 0


def test_dp_filter_motivating(motivating):
    # both bottleneck users are interchangeable in a max-weight on-time set,
    # so both are rejection candidates
    assert dp_filter(motivating, [1, 2], 1) == {1, 2}


def test_dp_filter_essential_shielded():
    # the heavy job fits alone before its deadline and beats both small ones,
    # so every optimum keeps it
    inst = mk_instance(1, [(1, 4.0, 5, 1, [(1, 2, 4.0)]),
                           (2, 4.5, 1, 1, [(1, 2, 1.0)]),
                           (3, 4.5, 1, 1, [(1, 2, 1.0)])])
    assert dp_filter(inst, [1, 2, 3], 1) == {2, 3}


def test_dp_filter_weight_scale_error(motivating):
    with pytest.raises(ConfigError):
        dp_filter(motivating, [1, 2], 1, weights={1: 0.5, 2: 1.0})


def test_eval_cct(motivating):
    assert eval_cct(motivating, [3], 3) == pytest.approx(isolation_cct(motivating, 3))
    assert eval_cct(motivating, [2, 3, 4, 5, 1], 1) == pytest.approx(2.1)
    with pytest.raises(ValueError):
        eval_cct(motivating, [2, 3], 1)


def test_remove_late_noop(motivating):
    order = remove_late_coflows(motivating, [5, 4, 3, 2], [0, 0, 0, 0])
    assert order.sigma == [5, 4, 3, 2]


def test_remove_late_drops_trapped_wide(motivating):
    order = remove_late_coflows(motivating, [5, 4, 3, 2, 1], [1])
    assert order.sigma == [5, 4, 3, 2]


def test_remove_late_reaccepts_after_blocker_removed():
    # both jobs pre-rejected on one pair of ports: dropping the first frees
    # enough room for the second
    inst = mk_instance(1, [(1, 1.0, 1, 1, [(1, 2, 2.0)]),
                           (2, 1.0, 1, 1, [(1, 2, 1.0)])])
    order = remove_late_coflows(inst, [1, 2], [1, 2])
    assert order.sigma == [2]


def test_cs_mha_motivating(motivating):
    order = cs_mha(motivating)
    assert order.sigma == [1]
    assert order.accepted == {1}


def test_cs_mha_disjoint_all_admitted():
    inst = mk_instance(3, [(1, 2.0, 1, 1, [(1, 4, 1.0)]),
                           (2, 2.0, 1, 1, [(2, 5, 1.0)]),
                           (3, 2.0, 1, 1, [(3, 6, 1.0)])])
    assert cs_mha(inst).accepted == {1, 2, 3}


def test_edd_motivating(motivating):
    order = edd_order(motivating)
    assert order.sigma == [1]


def test_edd_equal_deadlines_id_order():
    inst = mk_instance(3, [(2, 5.0, 1, 1, [(1, 4, 1.0)]),
                           (1, 5.0, 1, 1, [(2, 5, 1.0)]),
                           (3, 5.0, 1, 1, [(3, 6, 1.0)])])
    assert edd_order(inst).sigma == [1, 2, 3]


@pytest.mark.parametrize("variant", ALL_VARIANTS)
def test_phase2_guarantee(rng, variant):
    for _ in range(40):
        inst = rand_instance(rng)
        order = build_sigma(inst, SchedulerConfig(variant=variant))
        for i, k in enumerate(order.sigma):
            slack = inst.coflow(k).deadline - inst.coflow(k).release_time
            assert eval_cct(inst, order.sigma[:i + 1], k) <= slack + 1e-9


@pytest.mark.parametrize("variant", ROUND_VARIANTS)
def test_round_count(rng, variant):
    inst = rand_instance(rng)
    order = build_sigma(inst, SchedulerConfig(variant=variant))
    assert len(order.pre_rejected) == len(inst.coflows)


def test_determinism(rng):
    inst = rand_instance(rng)
    for variant in ALL_VARIANTS:
        a = build_sigma(inst, SchedulerConfig(variant=variant))
        b = build_sigma(inst, SchedulerConfig(variant=variant))
        assert a.sigma == b.sigma and a.pre_rejected == b.pre_rejected


def test_config_validation():
    with pytest.raises(ConfigError):
        SchedulerConfig(variant="nope")
    with pytest.raises(ConfigError):
        SchedulerConfig(variant="dcoflow_v2", gamma=0.0)


def test_sigma_json(motivating):
    order = build_sigma(motivating, SchedulerConfig(variant="wdcoflow"))
    doc = order.to_json()
    assert '"order": [5, 4, 3, 2]' in doc
    assert '"prerejected": [1]' in doc


def test_wdcoflow_scales_subquadratically():
    fab = Fabric.uniform(50)
    times = {}
    for n in (500, 2000):
        cfg = SyntheticConfig(machines=50, coflows=n, rng_seed=1)
        inst = gen_synthetic(cfg, fab)
        t0 = time.perf_counter()
        build_sigma(inst, SchedulerConfig(variant="wdcoflow"))
        times[n] = time.perf_counter() - t0
    # quadratic growth would give 16x; leave generous headroom for noise
    assert times[2000] <= 40 * max(times[500], 1e-3)
