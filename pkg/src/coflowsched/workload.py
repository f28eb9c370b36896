"""Workload generation and ingestion.

Synthetic batches mix narrow (single-flow) and wide coflows, deadlines are
drawn relative to each coflow's isolation completion time, and weights follow
a two-class scheme. External shuffle traces use the whitespace-delimited
format described in `parse_trace`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError
from .model import Coflow, Fabric, Flow, Instance


@dataclass
class SyntheticConfig:
    """Parameters of the synthetic coflow generator.

    `type2_prob` is the probability that a coflow is wide (many flows) rather
    than a single flow; wide coflows span between ceil(2M/3) and M distinct
    ingress ports. Deadlines are drawn uniformly in [cct0, alpha * cct0] with
    alpha itself uniform over `alpha_range`. Flow volumes are uniform on
    `volume_range` (normalized units).
    """

    machines: int
    coflows: int
    rng_seed: int
    alpha_range: tuple[float, float] = (2.0, 4.0)
    type2_prob: float = 0.4
    class2_prob: float = 0.0
    class2_weight: float = 2.0
    volume_range: tuple[float, float] = (0.1, 1.0)
    distinct_ingress: bool = True

    def __post_init__(self):
        if self.rng_seed is None:
            raise ConfigError("rng_seed is mandatory for reproducibility")
        for name, p in (("type2_prob", self.type2_prob), ("class2_prob", self.class2_prob)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.alpha_range[0] < 1.0 or self.alpha_range[1] < self.alpha_range[0]:
            raise ConfigError(f"invalid alpha_range {self.alpha_range}")
        if self.machines < 1 or self.coflows < 0:
            raise ConfigError("machines must be >= 1 and coflows >= 0")


@dataclass
class ArrivalConfig:
    """Poisson arrival stream; batches of U{lo..hi} coflows when batching is on."""

    lam: float
    total_coflows: int
    batch_size_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError(f"arrival rate must be positive, got {self.lam}")
        if self.total_coflows < 1:
            raise ConfigError("total_coflows must be >= 1")
        if self.batch_size_range is not None:
            lo, hi = self.batch_size_range
            if lo < 1 or hi < lo:
                raise ConfigError(f"invalid batch_size_range {self.batch_size_range}")


@dataclass
class TraceRecord:
    coflow_id: int
    arrival_ms: int
    mappers: list[int]
    reducers: list[tuple[int, float]]  # (machine, megabytes)

    @property
    def flow_count(self) -> int:
        return len(self.mappers) * len(self.reducers)


@dataclass
class TraceFile:
    path: str
    num_machines: int
    records: list[TraceRecord] = field(default_factory=list)


def _draw_deadline(rng: np.random.Generator, cct0: float,
                   alpha_range: tuple[float, float]) -> float:
    alpha = rng.uniform(alpha_range[0], alpha_range[1])
    return rng.uniform(cct0, alpha * cct0)


def _cct0(flows, fabric: Fabric) -> float:
    """Isolation completion time of a flow list: worst per-port load at full rate."""
    vols: dict[int, float] = {}
    for f in flows:
        vols[f.ingress_port] = vols.get(f.ingress_port, 0.0) + f.volume
        vols[f.egress_port] = vols.get(f.egress_port, 0.0) + f.volume
    return max(v / fabric.capacity(p) for p, v in vols.items())


def _draw_class(rng: np.random.Generator, cfg: SyntheticConfig) -> tuple[int, float]:
    if rng.random() < cfg.class2_prob:
        return 2, float(cfg.class2_weight)
    return 1, 1.0


def _synth_coflow(rng: np.random.Generator, cfg: SyntheticConfig, fabric: Fabric,
                  coflow_id: int, release: float) -> Coflow:
    m = cfg.machines
    if rng.random() < cfg.type2_prob:
        width = int(rng.integers(math.ceil(2 * m / 3), m + 1))
        if cfg.distinct_ingress:
            ingresses = rng.choice(m, size=width, replace=False) + 1
        else:
            ingresses = rng.integers(1, m + 1, size=width)
        flows = []
        for i, src in enumerate(ingresses):
            dst = m + int(rng.integers(1, m + 1))
            vol = rng.uniform(*cfg.volume_range)
            flows.append(Flow(i, int(src), dst, vol))
    else:
        src = int(rng.integers(1, m + 1))
        dst = m + int(rng.integers(1, m + 1))
        flows = [Flow(0, src, dst, rng.uniform(*cfg.volume_range))]
    class_id, weight = _draw_class(rng, cfg)
    deadline = release + _draw_deadline(rng, _cct0(flows, fabric), cfg.alpha_range)
    return Coflow(coflow_id, flows, deadline=deadline, weight=weight,
                  release_time=release, class_id=class_id)


def gen_synthetic(cfg: SyntheticConfig, fabric: Fabric) -> Instance:
    """Generate an offline batch (all release times zero) from a seeded config."""
    if fabric.num_machines != cfg.machines:
        raise ConfigError("fabric size does not match the generator config")
    rng = np.random.default_rng(cfg.rng_seed)
    coflows = [_synth_coflow(rng, cfg, fabric, k, 0.0) for k in range(1, cfg.coflows + 1)]
    return Instance(fabric, coflows)


def gen_arrivals(cfg: SyntheticConfig, arrival: ArrivalConfig) -> list[tuple[float, Coflow]]:
    """Generate a Poisson arrival stream of coflows with absolute deadlines.

    With batching enabled, batches arrive at rate lam/10 (keeping the coflow
    rate comparable to single arrivals) and each batch holds U{lo..hi} coflows
    released at the same instant.
    """
    fabric = Fabric.uniform(cfg.machines)
    rng = np.random.default_rng(cfg.rng_seed)
    out: list[tuple[float, Coflow]] = []
    t = 0.0
    next_id = 1
    if arrival.batch_size_range is None:
        while next_id <= arrival.total_coflows:
            t += rng.exponential(1.0 / arrival.lam)
            out.append((t, _synth_coflow(rng, cfg, fabric, next_id, t)))
            next_id += 1
    else:
        lo, hi = arrival.batch_size_range
        batch_rate = arrival.lam / 10.0
        while next_id <= arrival.total_coflows:
            t += rng.exponential(1.0 / batch_rate)
            size = int(rng.integers(lo, hi + 1))
            for _ in range(size):
                if next_id > arrival.total_coflows:
                    break
                out.append((t, _synth_coflow(rng, cfg, fabric, next_id, t)))
                next_id += 1
    return out


def parse_trace(path: str) -> TraceFile:
    """Parse a shuffle trace.

    Expected layout (whitespace-delimited, UTF-8, LF newlines):
        <num_machines> <num_coflows>
        <id> <arrival_ms> <num_mappers> <mapper...> <num_reducers> <reducer:MB ...>
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty trace file", line=1)
    head = lines[0].split()
    if len(head) != 2:
        raise ParseError("header must be '<num_machines> <num_coflows>'", line=1)
    try:
        num_machines, num_coflows = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("non-integer header fields", line=1) from None
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        tok = raw.split()
        try:
            cid, arrival = int(tok[0]), int(tok[1])
            nm = int(tok[2])
            mappers = [int(x) for x in tok[3:3 + nm]]
            if len(mappers) != nm:
                raise IndexError
            nr = int(tok[3 + nm])
            red_tok = tok[4 + nm:4 + nm + nr]
            if len(red_tok) != nr or tok[4 + nm + nr:]:
                raise IndexError
            reducers = []
            for rt in red_tok:
                loc, mb = rt.split(":")
                reducers.append((int(loc), float(mb)))
        except (ValueError, IndexError):
            raise ParseError(f"malformed coflow record: {raw!r}", line=lineno) from None
        records.append(TraceRecord(cid, arrival, mappers, reducers))
    if len(records) != num_coflows:
        raise ParseError(
            f"header announces {num_coflows} coflows but body has {len(records)}",
            line=len(lines))
    return TraceFile(path, num_machines, records)


def sample_trace(trace: TraceFile, machines: int, coflows: int, seed: int,
                 class2_prob: float = 0.0, class2_weight: float = 2.0,
                 alpha_range: tuple[float, float] = (2.0, 4.0)) -> Instance:
    """Sample an offline batch from a trace.

    Only coflows with at most `machines` flows (mappers x reducers) are
    eligible. Machine locations are folded into 1..machines; each reducer's
    megabytes are split evenly across the coflow's mappers.
    """
    eligible = [r for r in trace.records if r.flow_count <= machines]
    if len(eligible) < coflows:
        raise ConfigError(
            f"trace has {len(eligible)} coflows with <= {machines} flows, "
            f"need {coflows}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(eligible), size=coflows, replace=False)
    fabric = Fabric.uniform(machines)
    cfg = SyntheticConfig(machines, coflows, rng_seed=seed,
                          alpha_range=alpha_range, class2_prob=class2_prob,
                          class2_weight=class2_weight)
    out = []
    for new_id, idx in enumerate(sorted(int(i) for i in picks), start=1):
        rec = eligible[idx]
        flows = []
        fid = 0
        for mapper in rec.mappers:
            src = (mapper - 1) % machines + 1
            for rloc, mb in rec.reducers:
                dst = machines + (rloc - 1) % machines + 1
                flows.append(Flow(fid, src, dst, mb / len(rec.mappers)))
                fid += 1
        class_id, weight = _draw_class(rng, cfg)
        deadline = _draw_deadline(rng, _cct0(flows, fabric), alpha_range)
        out.append(Coflow(new_id, flows, deadline=deadline, weight=weight,
                          class_id=class_id))
    return Instance(fabric, out)


def edd_trap_instance(machines: int, eps: float = 0.1,
                      singles: int | None = None) -> Instance:
    """Adversarial batch: one wide, tight-deadline coflow plus loose singletons.

    Coflow 1 sends one unit from every ingress port i to egress i and must
    finish by time 1. Each singleton j sends (1+eps) units over the otherwise
    idle pair (ingress j, egress j) with deadline 2. Deadline-first schedulers
    put coflow 1 first everywhere and lose every singleton; putting it last
    keeps all singletons and only sacrifices coflow 1.
    """
    m = machines
    if singles is None:
        singles = m
    if not 1 <= singles <= m:
        raise ConfigError(f"singles must lie in 1..{m}")
    wide = Coflow(1, [Flow(i, i, m + i, 1.0) for i in range(1, m + 1)], deadline=1.0)
    coflows = [wide]
    for j in range(1, singles + 1):
        coflows.append(Coflow(1 + j, [Flow(0, j, m + j, 1.0 + eps)], deadline=2.0))
    return Instance(Fabric.uniform(m), coflows)


# --- instance (de)serialization ------------------------------------------------
# Canonical JSON schema:
#   {"fabric": {"machines": M, "capacity": B},
#    "coflows": [{"id", "deadline", "weight", "class", "release",
#                 "flows": [{"src", "dst", "volume"}]}]}

def instance_to_json(instance: Instance) -> str:
    caps = set(instance.fabric.capacities)
    if len(caps) != 1:
        raise ConfigError("instance serialization supports uniform capacities only")
    doc = {
        "fabric": {"machines": instance.fabric.num_machines, "capacity": caps.pop()},
        "coflows": [
            {
                "id": c.coflow_id,
                "deadline": c.deadline,
                "weight": c.weight,
                "class": c.class_id,
                "release": c.release_time,
                "flows": [
                    {"src": f.ingress_port, "dst": f.egress_port, "volume": f.volume}
                    for f in c.flows
                ],
            }
            for c in instance.coflows
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def instance_from_json(text: str) -> Instance:
    doc = json.loads(text)
    try:
        fabric = Fabric.uniform(int(doc["fabric"]["machines"]),
                                float(doc["fabric"].get("capacity", 1.0)))
        coflows = []
        for c in doc["coflows"]:
            flows = [Flow(i, int(f["src"]), int(f["dst"]), float(f["volume"]))
                     for i, f in enumerate(c["flows"])]
            coflows.append(Coflow(int(c["id"]), flows, deadline=float(c["deadline"]),
                                  weight=float(c.get("weight", 1.0)),
                                  release_time=float(c.get("release", 0.0)),
                                  class_id=int(c.get("class", 1))))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"instance document missing field: {exc}") from None
    return Instance(fabric, coflows)


def save_instance(instance: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(instance_to_json(instance) + "\n")


def load_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_json(fh.read())
