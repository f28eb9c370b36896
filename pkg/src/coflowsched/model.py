"""Big-Switch fabric model: ports, flows, coflows and schedulability arithmetic.

The fabric is a single non-blocking switch with M ingress ports (ids 1..M)
and M egress ports (ids M+1..2M); congestion happens only at those ports.
Every operation in this module is a pure function of its inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

TOL = 1e-9  # absolute tolerance for time/volume comparisons


@dataclass(frozen=True)
class Fabric:
    """Switch fabric with per-port capacities (volume per unit time)."""

    num_machines: int
    capacities: tuple[float, ...]  # indexed by port id - 1, length 2M

    @classmethod
    def uniform(cls, num_machines: int, capacity: float = 1.0) -> "Fabric":
        return cls(num_machines, (float(capacity),) * (2 * num_machines))

    def __post_init__(self):
        if self.num_machines < 1:
            raise ValueError("fabric needs at least one machine")
        if len(self.capacities) != 2 * self.num_machines:
            raise ValueError("need exactly one capacity per port (2M ports)")
        if any(b <= 0 for b in self.capacities):
            raise ValueError("port capacities must be strictly positive")

    @property
    def ports(self) -> range:
        return range(1, 2 * self.num_machines + 1)

    @property
    def ingress_ports(self) -> range:
        return range(1, self.num_machines + 1)

    @property
    def egress_ports(self) -> range:
        return range(self.num_machines + 1, 2 * self.num_machines + 1)

    def capacity(self, port: int) -> float:
        if not 1 <= port <= 2 * self.num_machines:
            raise KeyError(f"unknown port id {port}")
        return self.capacities[port - 1]


@dataclass
class Flow:
    """One shuffle connection: a volume moving from an ingress to an egress port."""

    flow_id: int
    ingress_port: int
    egress_port: int
    volume: float
    remaining_volume: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.remaining_volume is None:
            self.remaining_volume = self.volume
        if self.volume <= 0:
            raise ValueError(f"flow {self.flow_id}: volume must be positive")
        if not -TOL <= self.remaining_volume <= self.volume + TOL:
            raise ValueError(f"flow {self.flow_id}: remaining volume out of range")


@dataclass
class Coflow:
    """A set of parallel flows that completes when its last flow finishes.

    Flows sharing the same (ingress, egress) pair are merged on ingestion:
    all per-port quantities depend only on per-port volume sums.
    """

    coflow_id: int
    flows: list[Flow]
    deadline: float
    weight: float = 1.0
    release_time: float = 0.0
    class_id: int = 1
    port_volume: dict[int, float] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.flows:
            raise ValueError(f"coflow {self.coflow_id}: needs at least one flow")
        if self.deadline <= self.release_time:
            raise ValueError(f"coflow {self.coflow_id}: deadline must exceed release time")
        if self.weight < 0:
            raise ValueError(f"coflow {self.coflow_id}: weight must be nonnegative")
        merged: dict[tuple[int, int], Flow] = {}
        for f in self.flows:
            key = (f.ingress_port, f.egress_port)
            if key in merged:
                kept = merged[key]
                kept.volume += f.volume
                kept.remaining_volume += f.remaining_volume
                kept.flow_id = min(kept.flow_id, f.flow_id)
            else:
                merged[key] = Flow(f.flow_id, f.ingress_port, f.egress_port,
                                   f.volume, f.remaining_volume)
        self.flows = sorted(merged.values(), key=lambda f: f.flow_id)
        vols: dict[int, float] = {}
        for f in self.flows:
            vols[f.ingress_port] = vols.get(f.ingress_port, 0.0) + f.volume
            vols[f.egress_port] = vols.get(f.egress_port, 0.0) + f.volume
        self.port_volume = vols

    @property
    def ports(self) -> list[int]:
        return sorted(self.port_volume)


@dataclass
class Instance:
    """A fabric plus a batch of coflows to schedule."""

    fabric: Fabric
    coflows: list[Coflow]
    _by_id: dict[int, Coflow] = field(init=False, repr=False)

    def __post_init__(self):
        m = self.fabric.num_machines
        self._by_id = {}
        for c in self.coflows:
            if c.coflow_id in self._by_id:
                raise ValueError(f"duplicate coflow id {c.coflow_id}")
            self._by_id[c.coflow_id] = c
            for f in c.flows:
                if not 1 <= f.ingress_port <= m:
                    raise ValueError(
                        f"coflow {c.coflow_id}: {f.ingress_port} is not an ingress port")
                if not m + 1 <= f.egress_port <= 2 * m:
                    raise ValueError(
                        f"coflow {c.coflow_id}: {f.egress_port} is not an egress port")

    def __len__(self) -> int:
        return len(self.coflows)

    @property
    def coflow_ids(self) -> list[int]:
        return [c.coflow_id for c in self.coflows]

    def coflow(self, coflow_id: int) -> Coflow:
        try:
            return self._by_id[coflow_id]
        except KeyError:
            raise KeyError(f"unknown coflow id {coflow_id}") from None


@dataclass
class FlowOutcome:
    """Realized transfer of one flow; completion_time is None while unfinished."""

    flow_id: int
    coflow_id: int
    volume: float
    release_time: float = 0.0
    completion_time: float | None = None

    @property
    def finished(self) -> bool:
        return self.completion_time is not None

    @property
    def average_rate(self) -> float | None:
        if self.completion_time is None:
            return None
        lifetime = self.completion_time - self.release_time
        return self.volume / lifetime if lifetime > 0 else float("inf")


def processing_time(instance: Instance, port: int, coflow_id: int) -> float:
    """Time for coflow `coflow_id` to push all its traffic through `port` at full rate.

    Zero when the coflow does not use the port.
    """
    cap = instance.fabric.capacity(port)
    return instance.coflow(coflow_id).port_volume.get(port, 0.0) / cap


def port_load(instance: Instance, port: int, coflow_ids) -> float:
    """Total processing time on `port` over the given coflow set."""
    return sum(processing_time(instance, port, k) for k in coflow_ids)


def bottleneck_port(instance: Instance, coflow_ids) -> int:
    """Port with the largest load over the set; ties break to the smallest port id."""
    ids = list(coflow_ids)
    if not ids:
        raise ValueError("bottleneck_port needs a nonempty coflow set")
    best_port, best_load = None, -1.0
    for port in instance.fabric.ports:
        load = port_load(instance, port, ids)
        if load > best_load + TOL:
            best_port, best_load = port, load
    return best_port


def isolation_cct(instance: Instance, coflow_id: int) -> float:
    """Completion time of the coflow alone on the fabric (its bottleneck transfer)."""
    c = instance.coflow(coflow_id)
    return max(c.port_volume[p] / instance.fabric.capacity(p) for p in c.port_volume)


def f_parallel(instance: Instance, port: int, coflow_ids) -> float:
    """Half the sum of squared per-coflow loads plus half the squared total load.

    This is the right-hand side of the per-port parallel inequality
    sum_k p[port,k] * c_k >= f(port, S), valid for any feasible schedule.
    """
    p = [processing_time(instance, port, k) for k in coflow_ids]
    return 0.5 * sum(x * x for x in p) + 0.5 * sum(p) ** 2


def schedulability_index(instance: Instance, port: int, coflow_ids) -> float:
    """Deadline slack of the parallel inequality on `port` for the set.

    Negative means at least one coflow using the port must be late, no matter
    how the set is ordered. In online use, deadlines must already be expressed
    as remaining slack.
    """
    ids = list(coflow_ids)
    s = sum(processing_time(instance, port, k) * instance.coflow(k).deadline
            for k in ids)
    return s - f_parallel(instance, port, ids)


def psi_index(instance: Instance, port: int, coflow_id: int, coflow_ids) -> float:
    """Lateness pressure of one coflow on a port: p * (total load - deadline).

    Positive when the coflow would overshoot its deadline if scheduled last on
    the port. Removing the coflow raises the schedulability index by exactly
    this amount: I(S \\ {j}) = I(S) + psi(j, S).
    """
    ids = set(coflow_ids)
    if coflow_id not in ids:
        raise ValueError(f"coflow {coflow_id} is not part of the set")
    p = processing_time(instance, port, coflow_id)
    total = port_load(instance, port, ids)
    return p * (total - instance.coflow(coflow_id).deadline)


def used_ports(instance: Instance, coflow_ids) -> list[int]:
    """Ports carrying at least one flow of the given coflows."""
    ports = set()
    for k in coflow_ids:
        ports.update(instance.coflow(k).port_volume)
    return sorted(ports)


def all_flows(instance: Instance):
    """Iterate (coflow, flow) pairs across the instance."""
    return itertools.chain.from_iterable(
        ((c, f) for f in c.flows) for c in instance.coflows)
