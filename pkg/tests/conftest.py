"""Shared builders for the test suite."""

import numpy as np
import pytest

from coflowsched import (Coflow, Fabric, Flow, Instance, SyntheticConfig,
                         edd_trap_instance, gen_synthetic)


def mk_instance(machines, coflows, capacity=1.0):
    """Build an instance from (id, deadline, weight, class, [(src, dst, vol)]) tuples."""
    out = []
    for cid, deadline, weight, class_id, flows in coflows:
        out.append(Coflow(cid,
                          [Flow(i, src, dst, vol) for i, (src, dst, vol) in enumerate(flows)],
                          deadline=deadline, weight=weight, class_id=class_id))
    return Instance(Fabric.uniform(machines, capacity), out)


def rand_instance(rng, machines=(2, 4), coflows=(4, 10), alpha=(1.5, 4.0),
                  class2_prob=0.0, class2_weight=2.0):
    m = int(rng.integers(machines[0], machines[1] + 1))
    n = int(rng.integers(coflows[0], coflows[1] + 1))
    cfg = SyntheticConfig(machines=m, coflows=n,
                          rng_seed=int(rng.integers(1, 2**63 - 1)),
                          alpha_range=alpha, class2_prob=class2_prob,
                          class2_weight=class2_weight)
    return gen_synthetic(cfg, Fabric.uniform(m))


@pytest.fixture
def motivating():
    """Four machines, one wide tight-deadline coflow, four loose singletons."""
    return edd_trap_instance(4, eps=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
