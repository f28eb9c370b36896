"""Offline batch runner, online event loop, and metric rollups.

The online loop re-solves the batch problem at every update instant (each
arrival, or periodically) over the live coflows: scheduled-but-unfinished
ones, previously rejected ones whose deadline has not expired, and new
arrivals. Schedulers see remaining volumes and remaining slack; rate
allocation restarts from the remaining volumes, so coflows are effectively
preemptible. A coflow still unfinished at its deadline is dropped at that
instant and scores zero.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .alloc import FluidNetwork, greedy_allocate
from .errors import ConfigError
from .model import TOL, Coflow, Fabric, Instance
from .sched import BatchView, SchedulerConfig, SigmaOrder, build_sigma

CSV_HEADER = ["instance_id", "scheduler", "seed", "M", "N", "lambda", "f",
              "CAR", "WCAR", "car_class1", "car_class2", "pred_error",
              "accepted", "runtime_ms"]


@dataclass
class RunMetrics:
    """Acceptance rollup of one experiment run."""

    n: int
    accepted: int                 # coflows that met their deadline
    car: float
    wcar: float
    class_car: dict[int, float]   # per class id, absent when the class is empty
    predicted: int                # admitted by the scheduler
    realized: int                 # admitted and on time after allocation
    prediction_error: float
    rows: list[dict]
    runtime_ms: float = 0.0


def _aggregate(per_coflow: list[dict], predicted: int, realized: int,
               runtime_ms: float) -> RunMetrics:
    n = len(per_coflow)
    z_sum = sum(r["z"] for r in per_coflow)
    w_sum = sum(r["weight"] for r in per_coflow)
    wz_sum = sum(r["weight"] * r["z"] for r in per_coflow)
    car = z_sum / n if n else 1.0
    wcar = wz_sum / w_sum if w_sum > 0 else 1.0
    class_car = {}
    for cls in sorted({r["class_id"] for r in per_coflow}):
        members = [r for r in per_coflow if r["class_id"] == cls]
        class_car[cls] = sum(r["z"] for r in members) / len(members)
    err = (predicted - realized) / predicted if predicted else 0.0
    return RunMetrics(n=n, accepted=z_sum, car=car, wcar=wcar,
                      class_car=class_car, predicted=predicted,
                      realized=realized, prediction_error=err,
                      rows=per_coflow, runtime_ms=runtime_ms)


def compute_metrics(instance: Instance, order: SigmaOrder, timeline) -> RunMetrics:
    """Score an offline run: z=1 iff admitted and the realized completion time
    meets the absolute deadline."""
    rows = []
    realized = 0
    for c in instance.coflows:
        admitted = c.coflow_id in order.accepted
        cct = timeline.coflow_cct.get(c.coflow_id) if admitted else None
        z = 1 if (cct is not None and cct <= c.deadline + TOL) else 0
        realized += z
        rows.append({"id": c.coflow_id, "class_id": c.class_id,
                     "weight": c.weight, "deadline": c.deadline,
                     "admitted": admitted, "cct": cct, "z": z})
    return _aggregate(rows, predicted=len(order.sigma), realized=realized,
                      runtime_ms=0.0)


def run_offline(instance: Instance, cfg: SchedulerConfig) -> RunMetrics:
    """Schedule one zero-release batch and allocate rates for the admitted set."""
    if any(c.release_time != 0.0 for c in instance.coflows):
        raise ConfigError("offline runs need all release times at zero")
    start = time.perf_counter()
    order = build_sigma(instance, cfg)
    timeline = greedy_allocate(instance, order.sigma, 0.0, record_epochs=False)
    metrics = compute_metrics(instance, order, timeline)
    metrics.runtime_ms = (time.perf_counter() - start) * 1e3
    return metrics


@dataclass
class OnlineConfig:
    scheduler: SchedulerConfig
    frequency: float | None = None   # updates per time unit; None = on arrival
    horizon: float | None = None     # drop arrivals released after this time

    def __post_init__(self):
        if self.frequency is not None and not self.frequency > 0:
            raise ConfigError("update frequency must be positive (or None)")


def _snapshot_view(net: FluidNetwork, live: dict[int, Coflow], now: float,
                   num_ports: int) -> BatchView:
    ids = sorted(live)
    caps = np.asarray(net.fabric.capacities)
    P = np.zeros((len(ids), num_ports))
    T = np.empty(len(ids))
    w = np.empty(len(ids))
    for r, k in enumerate(ids):
        c = live[k]
        remaining = net.remaining_of(k)
        for f in c.flows:
            rem = remaining[f.flow_id]
            if rem > 1e-12:
                P[r, f.ingress_port - 1] += rem
                P[r, f.egress_port - 1] += rem
        T[r] = c.deadline - now
        w[r] = c.weight
    P /= caps
    return BatchView(np.asarray(ids, dtype=np.int64), P, T, w)


def run_online(fabric: Fabric, arrivals, cfg: OnlineConfig) -> RunMetrics:
    """Simulate an arrival stream under periodic or per-arrival re-scheduling.

    `arrivals` is a release-time-sorted list of (release_time, Coflow) pairs
    with absolute deadlines.
    """
    start = time.perf_counter()
    stream = [(rel, c) for rel, c in arrivals
              if cfg.horizon is None or rel <= cfg.horizon]
    for (r1, _), (r2, _) in zip(stream, stream[1:]):
        if r1 > r2 + 1e-12:
            raise ValueError("arrival stream must be sorted by release time")
    period = None if cfg.frequency is None else 1.0 / cfg.frequency
    num_ports = 2 * fabric.num_machines
    net = FluidNetwork(fabric, record_epochs=False)
    live: dict[int, Coflow] = {}
    meta: dict[int, Coflow] = {}
    finish: dict[int, float] = {}
    last_admitted: dict[int, bool] = {}
    expiry: list[tuple[float, int]] = []
    i = 0
    t = 0.0
    next_tick = period if period else math.inf

    def update(now: float) -> None:
        if not live:
            net.set_priorities([])
            return
        view = _snapshot_view(net, live, now, num_ports)
        order = build_sigma(view, cfg.scheduler)
        for k in live:
            last_admitted[k] = k in order.accepted
        net.set_priorities(order.sigma)

    while i < len(stream) or live:
        if period is not None and not live:
            # ticks over an empty system are no-ops; skip to the first one
            # that could matter
            next_tick = (math.floor(t / period + 1e-9) + 1) * period
        t_arr = stream[i][0] if i < len(stream) else math.inf
        while expiry and expiry[0][1] not in live:
            heapq.heappop(expiry)
        t_exp = expiry[0][0] if expiry else math.inf
        t_tick = next_tick if (period is not None and live) else math.inf
        t_next = min(t_arr, t_exp, t_tick)
        for done_t, k in net.advance(t, until=t_next):
            finish[k] = done_t
            live.pop(k, None)
            net.remove_coflow(k)
        t = t_next
        while expiry and expiry[0][0] <= t + 1e-12:
            _, k = heapq.heappop(expiry)
            if k in live:  # unfinished at its deadline: drop it, ports free up
                live.pop(k)
                net.remove_coflow(k)
        arrived = False
        while i < len(stream) and stream[i][0] <= t + 1e-12:
            _, c = stream[i]
            live[c.coflow_id] = c
            meta[c.coflow_id] = c
            last_admitted[c.coflow_id] = False
            net.add_coflow(c)
            heapq.heappush(expiry, (c.deadline, c.coflow_id))
            arrived = True
            i += 1
        if period is None:
            if arrived:
                update(t)
        elif live and t >= next_tick - 1e-12:
            next_tick += period
            update(t)

    rows = []
    for k in sorted(meta):
        c = meta[k]
        z = 1 if k in finish else 0
        rows.append({"id": k, "class_id": c.class_id, "weight": c.weight,
                     "deadline": c.deadline, "admitted": last_admitted.get(k, False),
                     "cct": finish.get(k), "z": z})
    predicted = sum(1 for k in meta if last_admitted.get(k, False))
    metrics = _aggregate(rows, predicted=predicted, realized=len(finish),
                         runtime_ms=(time.perf_counter() - start) * 1e3)
    return metrics


def metrics_to_row(metrics: RunMetrics, instance_id: str, scheduler: str,
                   seed, machines: int, lam=None, freq=None) -> list[str]:
    """Format one RunMetrics as a CSV row (locale-free, '.' decimals)."""

    def num(x):
        if x is None:
            return ""
        if isinstance(x, float) and math.isinf(x):
            return "inf"
        return repr(float(x)) if isinstance(x, float) else str(x)

    return [instance_id, scheduler, str(seed), str(machines), str(metrics.n),
            num(lam), num(freq),
            num(metrics.car), num(metrics.wcar),
            num(metrics.class_car.get(1)), num(metrics.class_car.get(2)),
            num(metrics.prediction_error), str(metrics.accepted),
            str(int(round(metrics.runtime_ms)))]
