"""Priority-preserving greedy fluid rate allocation.

Given a priority order over coflows, ports are handed out whole: at every
event the allocator walks flows by priority and grants a flow the full rate
min(B_in, B_out) iff both of its ports are still unclaimed; blocked flows are
walked past, so lower-priority flows may use ports the blocked ones cannot
(work conservation). Completion times are exact under the resulting
piecewise-constant rates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .model import Fabric, FlowOutcome, Instance

_EPS = 1e-12  # residual volume below this counts as finished


@dataclass
class Epoch:
    """One constant-rate interval; grants map flow keys to rates."""

    start: float
    end: float
    grants: dict[tuple[int, int], float]


@dataclass
class AllocationTimeline:
    """Realized schedule: per-flow outcomes, per-coflow completion times, and
    (optionally) the epoch-by-epoch rate assignment for auditing."""

    outcomes: dict[tuple[int, int], FlowOutcome]
    coflow_cct: dict[int, float]
    makespan: float
    epochs: list[Epoch] = field(default_factory=list)


class _LiveFlow:
    __slots__ = ("key", "coflow_id", "src", "dst", "volume", "remaining", "done_at")

    def __init__(self, key, coflow_id, src, dst, volume, remaining):
        self.key = key
        self.coflow_id = coflow_id
        self.src = src
        self.dst = dst
        self.volume = volume
        self.remaining = remaining
        self.done_at = None


class FluidNetwork:
    """Event-driven fluid simulator over one fabric.

    Flows are registered per coflow; only coflows with a priority rank
    transmit. `advance` moves simulated time forward, returning the coflows
    that finished. The same engine backs the one-shot offline allocation and
    the online loop (where priorities change between calls).
    """

    def __init__(self, fabric: Fabric, record_epochs: bool = False,
                 flow_order: str = "volume"):
        if flow_order not in ("volume", "id"):
            raise ValueError("flow_order must be 'volume' or 'id'")
        self.fabric = fabric
        self.flows: dict[tuple[int, int], _LiveFlow] = {}
        self.by_coflow: dict[int, list[_LiveFlow]] = {}
        self.rank: dict[int, int] = {}
        self.record_epochs = record_epochs
        self.flow_order = flow_order
        self.epochs: list[Epoch] = []
        self.finished_at: dict[int, float] = {}

    def add_coflow(self, coflow, remaining=None) -> None:
        flows = []
        for f in coflow.flows:
            key = (coflow.coflow_id, f.flow_id)
            rem = f.volume if remaining is None else remaining[f.flow_id]
            lf = _LiveFlow(key, coflow.coflow_id, f.ingress_port, f.egress_port,
                           f.volume, rem)
            self.flows[key] = lf
            flows.append(lf)
        self.by_coflow[coflow.coflow_id] = flows

    def remove_coflow(self, coflow_id: int) -> None:
        for lf in self.by_coflow.pop(coflow_id, []):
            self.flows.pop(lf.key, None)
        self.rank.pop(coflow_id, None)

    def set_priorities(self, sigma) -> None:
        """Only coflows present in `sigma` transmit, in that order."""
        self.rank = {k: i for i, k in enumerate(sigma)}

    def remaining_of(self, coflow_id: int) -> dict[int, float]:
        return {lf.key[1]: lf.remaining for lf in self.by_coflow.get(coflow_id, [])}

    def unfinished(self, coflow_id: int) -> bool:
        return any(lf.remaining > _EPS for lf in self.by_coflow.get(coflow_id, []))

    def _active_flows(self) -> list[_LiveFlow]:
        active = [lf for lf in self.flows.values()
                  if lf.remaining > _EPS and lf.coflow_id in self.rank]
        if self.flow_order == "volume":
            key = lambda lf: (self.rank[lf.coflow_id], -lf.remaining, lf.key)
        else:
            key = lambda lf: (self.rank[lf.coflow_id], lf.key)
        active.sort(key=key)
        return active

    def _grants(self, active) -> list[tuple[_LiveFlow, float]]:
        claimed = set()
        grants = []
        for lf in active:
            if lf.src in claimed or lf.dst in claimed:
                continue
            rate = min(self.fabric.capacity(lf.src), self.fabric.capacity(lf.dst))
            claimed.add(lf.src)
            claimed.add(lf.dst)
            grants.append((lf, rate))
        return grants

    def advance(self, now: float, until: float | None = None) -> list[tuple[float, int]]:
        """Advance from `now` to `until` (or until drained), returning
        (time, coflow_id) completion events in order."""
        finished: list[tuple[float, int]] = []
        t = now
        while True:
            active = self._active_flows()
            if not active:
                break
            grants = self._grants(active)
            dt = min(lf.remaining / rate for lf, rate in grants)
            horizon = None if until is None else until - t
            if horizon is not None and dt > horizon + _EPS:
                dt = horizon
                closing = False
            else:
                closing = True
            if self.record_epochs and dt > _EPS:
                self.epochs.append(Epoch(t, t + dt, {lf.key: r for lf, r in grants}))
            for lf, rate in grants:
                lf.remaining -= rate * dt
            t += dt
            if not closing:
                break
            done_coflows = []
            for lf, _ in grants:
                if lf.remaining <= _EPS:
                    lf.remaining = 0.0
                    lf.done_at = t
                    if not self.unfinished(lf.coflow_id):
                        done_coflows.append(lf.coflow_id)
            for k in done_coflows:
                self.finished_at[k] = t
                finished.append((t, k))
            if until is not None and t >= until - _EPS:
                break
        return finished


def greedy_allocate(instance: Instance, sigma, start_time: float = 0.0,
                    record_epochs: bool = True,
                    flow_order: str = "volume") -> AllocationTimeline:
    """Transmit the coflows of `sigma` (and only those) to completion.

    Returns exact completion times; coflows outside `sigma` are not
    transmitted at all. Within a coflow, flows are served largest remaining
    volume first (`flow_order="id"` switches to flow-id order).
    """
    net = FluidNetwork(instance.fabric, record_epochs=record_epochs,
                       flow_order=flow_order)
    for k in sigma:
        net.add_coflow(instance.coflow(k))  # raises on unknown ids
    net.set_priorities(list(sigma))
    net.advance(start_time, until=None)
    outcomes = {}
    for key, lf in net.flows.items():
        outcomes[key] = FlowOutcome(flow_id=key[1], coflow_id=key[0],
                                    volume=lf.volume, release_time=start_time,
                                    completion_time=lf.done_at)
    ccts = dict(net.finished_at)
    makespan = max(ccts.values(), default=start_time)
    return AllocationTimeline(outcomes, ccts, makespan, net.epochs)


def actual_cct(timeline: AllocationTimeline, coflow_id: int) -> float:
    """Absolute completion time of a scheduled coflow."""
    try:
        return timeline.coflow_cct[coflow_id]
    except KeyError:
        raise KeyError(f"coflow {coflow_id} was not scheduled") from None


def write_event_log(timeline: AllocationTimeline, path: str) -> None:
    """Dump the epoch grants as CSV rows: time,flow_id,coflow_id,event,rate."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["time", "flow_id", "coflow_id", "event", "rate"])
        running: dict[tuple[int, int], float] = {}
        for ep in timeline.epochs:
            for key in list(running):
                if key not in ep.grants:
                    out.writerow([repr(ep.start), key[1], key[0], "stop", repr(0.0)])
                    del running[key]
            for key, rate in ep.grants.items():
                if running.get(key) != rate:
                    out.writerow([repr(ep.start), key[1], key[0], "start", repr(rate)])
                    running[key] = rate
        for key, outcome in sorted(timeline.outcomes.items()):
            if outcome.finished:
                out.writerow([repr(outcome.completion_time), key[1], key[0],
                              "finish", repr(0.0)])
