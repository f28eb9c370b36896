"""Priority-order schedulers with deadline admission control.

All schedulers emit a `SigmaOrder`: a strict priority permutation over the
admitted coflows. The round-based family (dcoflow_v1, dcoflow_v2, wdcoflow,
wdcoflow_dp) builds the order from the last position backwards, each round
either admitting the coflow that can safely finish last on the bottleneck
port or pre-rejecting one chosen by a per-port lateness index; a second phase
re-admits pre-rejected coflows whose estimated completion still fits. The
cs_mha and edd baselines are included for comparison.

Estimated completion times treat ports as independent (cumulative load of
higher-priority coflows on each port), which is what makes admission fast;
the realized times after rate allocation can differ.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .model import TOL, Instance, bottleneck_port, processing_time
from .singlemachine import Job, dp_max_weight, moore_hodgson

VARIANTS = ("dcoflow_v1", "dcoflow_v2", "wdcoflow", "wdcoflow_dp", "cs_mha", "edd")


@dataclass
class SchedulerConfig:
    variant: str = "wdcoflow"
    gamma: float = 0.9        # congestion cutoff for dcoflow_v2 port selection
    weight_scale: int = 1     # multiplier turning real weights into DP integers

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"unknown scheduler '{self.variant}', valid: {', '.join(VARIANTS)}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")


@dataclass
class SigmaOrder:
    """Admission decision plus priority order (index 0 = highest priority).

    `pre_rejected` lists, per construction round, the id pre-rejected in that
    round (0 when the round admitted a coflow). The baselines fill it with
    their first-pass rejections instead of round entries.
    """

    sigma: list[int]
    pre_rejected: list[int]
    accepted: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not self.accepted:
            self.accepted = set(self.sigma)

    def to_json(self) -> str:
        return json.dumps({
            "order": list(self.sigma),
            "accepted": sorted(self.accepted),
            "prerejected": [k for k in self.pre_rejected if k],
        })


class BatchView:
    """Dense matrix view of a batch: one row per coflow (ascending id), one
    column per port, entries are processing times."""

    __slots__ = ("ids", "P", "T", "w")

    def __init__(self, ids, P, T, w):
        self.ids = ids
        self.P = P
        self.T = T
        self.w = w

    @classmethod
    def from_instance(cls, instance: Instance) -> "BatchView":
        coflows = sorted(instance.coflows, key=lambda c: c.coflow_id)
        caps = np.asarray(instance.fabric.capacities)
        n, L = len(coflows), 2 * instance.fabric.num_machines
        P = np.zeros((n, L))
        T = np.empty(n)
        w = np.empty(n)
        for r, c in enumerate(coflows):
            for port, vol in c.port_volume.items():
                P[r, port - 1] = vol
            T[r] = c.deadline - c.release_time
            w[r] = c.weight
        P /= caps
        ids = np.array([c.coflow_id for c in coflows], dtype=np.int64)
        return cls(ids, P, T, w)


def build_sigma(instance_or_view, cfg: SchedulerConfig) -> SigmaOrder:
    """Run the configured scheduler on a batch.

    Batch semantics: every coflow is available now and deadlines are remaining
    slack (equal to the absolute deadline in the offline case). Accepts either
    an `Instance` or a prebuilt `BatchView`.
    """
    if cfg.variant == "cs_mha":
        return cs_mha(instance_or_view)
    if cfg.variant == "edd":
        return edd_order(instance_or_view)
    view = _as_view(instance_or_view)
    return _solve_rounds(view, cfg)


def _as_view(instance_or_view) -> BatchView:
    if isinstance(instance_or_view, BatchView):
        return instance_or_view
    return BatchView.from_instance(instance_or_view)


def _solve_rounds(view: BatchView, cfg: SchedulerConfig) -> SigmaOrder:
    n = len(view.ids)
    if n == 0:
        return SigmaOrder([], [])
    P, T, w = view.P, view.T, view.w
    alive = np.ones(n, dtype=bool)
    t_vec = P.sum(axis=0)                    # per-port load over the live set
    a_vec = (P * T[:, None]).sum(axis=0)     # per-port sum of p * deadline
    sq_vec = (P * P).sum(axis=0)             # per-port sum of p^2
    row_total = P.sum(axis=1)                # per-coflow total processing time
    order = np.empty(n, dtype=np.int64)      # row index per priority position
    pre_rounds: list[int] = []
    pre_rows: set[int] = set()
    for rnd in range(n):
        lb = int(np.argmax(t_vec))           # ties: smallest port id
        users = alive & (P[:, lb] > 0.0)
        kprime = int(np.argmax(np.where(users, T, -np.inf)))
        if t_vec[lb] <= T[kprime] + TOL:
            pick, rejected = kprime, False
        else:
            pick = _reject_pick(P, T, w, row_total, users, t_vec, a_vec, sq_vec,
                                lb, cfg)
            rejected = True
        order[n - 1 - rnd] = pick
        pre_rounds.append(int(view.ids[pick]) if rejected else 0)
        if rejected:
            pre_rows.add(pick)
        alive[pick] = False
        t_vec -= P[pick]
        a_vec -= P[pick] * T[pick]
        sq_vec -= P[pick] * P[pick]
    survivors = _prune_late(P, T, [int(r) for r in order], pre_rows)
    sigma = [int(view.ids[r]) for r in survivors]
    return SigmaOrder(sigma, pre_rounds)


def _reject_pick(P, T, w, row_total, users, t_vec, a_vec, sq_vec, lb, cfg) -> int:
    """Choose the row to pre-reject among the bottleneck users."""
    user_idx = np.flatnonzero(users)
    if cfg.variant == "wdcoflow_dp":
        cand_idx = _dp_filter_rows(P[:, lb], T, w, user_idx, cfg.weight_scale)
    else:
        cand_idx = user_idx
    if cfg.variant in ("wdcoflow", "wdcoflow_dp"):
        I_vec = a_vec - 0.5 * (sq_vec + t_vec * t_vec)
        ports = np.flatnonzero(I_vec < -TOL)
        if ports.size == 0:
            # rejection was triggered by the bottleneck-deadline test alone
            ports = np.array([lb])
        sub = P[np.ix_(cand_idx, ports)]
        score = (sub @ t_vec[ports] - T[cand_idx] * sub.sum(axis=1)) / w[cand_idx]
    elif cfg.variant == "dcoflow_v1":
        psi = P[cand_idx] * (t_vec[None, :] - T[cand_idx, None])
        score = np.where(psi > 0.0, psi, 0.0).sum(axis=1)
    else:  # dcoflow_v2
        ports = np.flatnonzero(t_vec >= cfg.gamma * t_vec[lb] - TOL)
        sub = P[np.ix_(cand_idx, ports)]
        score = sub @ t_vec[ports] - T[cand_idx] * sub.sum(axis=1)
    tied = np.flatnonzero(score == score.max())
    if tied.size > 1:  # larger total processing time, then smaller id
        total_p = row_total[cand_idx[tied]]
        tied = tied[total_p == total_p.max()]
    return int(cand_idx[tied[0]])


def _scaled_int_weights(w: np.ndarray, scale: int) -> np.ndarray:
    scaled = w * scale
    rounded = np.rint(scaled)
    if np.any(np.abs(scaled - rounded) > 1e-9) or np.any(rounded < 1):
        raise ConfigError(
            f"weights {w.tolist()} are not positive integers after scaling by {scale}")
    return rounded.astype(np.int64)


def _dp_filter_rows(p_col, T, w, user_idx, weight_scale) -> np.ndarray:
    """Rows of bottleneck users that some max-weight on-time subset excludes.

    A user is essential when dropping it strictly lowers the optimum of the
    single-port weighted-late-jobs problem; essential users are shielded from
    rejection. Falls back to all users if everyone is essential.
    """
    w_int = _scaled_int_weights(w[user_idx], weight_scale)
    edd = sorted(range(len(user_idx)),
                 key=lambda i: (T[user_idx[i]], p_col[user_idx[i]], int(user_idx[i])))
    p_s = np.asarray([p_col[user_idx[i]] for i in edd])
    T_s = np.asarray([T[user_idx[i]] for i in edd])
    w_s = np.asarray([w_int[i] for i in edd])
    opt_all = dp_max_weight(p_s, T_s, w_s)
    keep = np.ones(len(edd), dtype=bool)
    rejectable = []
    for i in range(len(edd)):
        keep[i] = False
        if dp_max_weight(p_s[keep], T_s[keep], w_s[keep]) == opt_all:
            rejectable.append(user_idx[edd[i]])
        keep[i] = True
    if not rejectable:
        return user_idx
    return np.array(sorted(int(r) for r in rejectable))


def _prune_late(P, T, order_rows, pre_set) -> list[int]:
    """Single pass keeping pre-rejected rows only if their estimated completion
    against surviving higher-priority rows still meets the deadline."""
    cum = np.zeros(P.shape[1])
    survivors = []
    for r in order_rows:
        row = P[r]
        if r in pre_set:
            used = row > 0.0
            est = float((cum[used] + row[used]).max())
            if est > T[r] + TOL:
                continue
        survivors.append(r)
        cum += row
    return survivors


def dp_filter(instance: Instance, bottleneck_users, ell_b: int,
              weights=None, weight_scale: int = 1) -> set[int]:
    """Candidate rejection set on a bottleneck port: the non-essential users."""
    users = sorted(bottleneck_users)
    if not users:
        raise ValueError("dp_filter needs a nonempty user set")
    p = {k: processing_time(instance, ell_b, k) for k in users}
    if any(p[k] <= 0 for k in users):
        raise ValueError("every candidate must use the bottleneck port")
    w = weights or {k: instance.coflow(k).weight for k in users}
    view_idx = np.arange(len(users))
    p_col = np.array([p[k] for k in users])
    T = np.array([instance.coflow(k).deadline - instance.coflow(k).release_time
                  for k in users])
    w_arr = np.array([w[k] for k in users])
    rows = _dp_filter_rows(p_col, T, w_arr, view_idx, weight_scale)
    return {users[r] for r in rows}


def reject_coflow(instance: Instance, coflow_set, candidates, weights=None) -> int:
    """Pick the coflow to reject: the candidate with the largest weight-scaled
    lateness pressure summed over the ports that cannot be scheduled on time.

    Falls back to the bottleneck port when no port is provably infeasible.
    Ties: larger total processing time, then smaller id.
    """
    S = sorted(coflow_set)
    R = sorted(candidates)
    if not R:
        raise ValueError("reject_coflow needs a nonempty candidate set")
    if not set(R) <= set(S):
        raise ValueError("candidates must be a subset of the coflow set")
    w = weights or {k: instance.coflow(k).weight for k in R}
    loads = {port: sum(processing_time(instance, port, k) for k in S)
             for port in instance.fabric.ports}
    f = {port: 0.5 * sum(processing_time(instance, port, k) ** 2 for k in S)
         + 0.5 * loads[port] ** 2 for port in loads}
    index = {port: sum(processing_time(instance, port, k)
                       * (instance.coflow(k).deadline - instance.coflow(k).release_time)
                       for k in S) - f[port] for port in loads}
    lstar = [port for port in sorted(loads) if index[port] < -TOL]
    if not lstar:
        lstar = [bottleneck_port(instance, S)]

    def psi_sum(j):
        slack = instance.coflow(j).deadline - instance.coflow(j).release_time
        return sum(processing_time(instance, port, j) * (loads[port] - slack)
                   for port in lstar)

    def total_p(j):
        return sum(processing_time(instance, port, j) for port in instance.fabric.ports)

    return max(R, key=lambda j: (psi_sum(j) / w[j], total_p(j), -j))


def dcoflow_variant_candidates(instance: Instance, coflow_set, ell_b: int,
                               variant: str, gamma: float = 0.9) -> dict[int, float]:
    """Unweighted per-candidate rejection scores for the two index variants.

    v1 sums the lateness pressure over every port where it is positive; v2
    sums it over ports loaded to at least `gamma` times the bottleneck.
    The coflow to reject is the argmax (ties as in `reject_coflow`).
    """
    if variant not in ("dcoflow_v1", "dcoflow_v2"):
        raise ConfigError(f"variant must be dcoflow_v1 or dcoflow_v2, got {variant}")
    S = sorted(coflow_set)
    loads = {port: sum(processing_time(instance, port, k) for k in S)
             for port in instance.fabric.ports}
    users = [k for k in S if processing_time(instance, ell_b, k) > 0]
    scores = {}
    for k in users:
        slack = instance.coflow(k).deadline - instance.coflow(k).release_time
        if variant == "dcoflow_v1":
            scores[k] = sum(
                p * (loads[port] - slack)
                for port in loads
                if (p := processing_time(instance, port, k)) * (loads[port] - slack) > 0)
        else:
            cutoff = gamma * loads[ell_b]
            scores[k] = sum(
                processing_time(instance, port, k) * (loads[port] - slack)
                for port in loads if loads[port] >= cutoff - TOL)
    return scores


def eval_cct(instance: Instance, sigma_prefix, coflow_id) -> float:
    """Estimated completion of the prefix's last coflow, ports taken as
    independent: its worst port-cumulative load over the prefix."""
    prefix = list(sigma_prefix)
    if not prefix or prefix[-1] != coflow_id:
        raise ValueError("coflow must be the last element of the prefix")
    c = instance.coflow(coflow_id)
    return max(sum(processing_time(instance, port, j) for j in prefix)
               for port in c.port_volume)


def remove_late_coflows(instance: Instance, sigma, sigma_star) -> SigmaOrder:
    """Post-processing pass: walk the order and keep each pre-rejected coflow
    only if its estimated completion over the surviving prefix meets its
    deadline; everything else stays."""
    pre_ids = {k for k in sigma_star if k}
    view = BatchView.from_instance(instance)
    row_of = {int(k): r for r, k in enumerate(view.ids)}
    order_rows = [row_of[k] for k in sigma]
    survivors = _prune_late(view.P, view.T, order_rows, {row_of[k] for k in pre_ids})
    final = [int(view.ids[r]) for r in survivors]
    return SigmaOrder(final, list(sigma_star))


def cs_mha(instance_or_view) -> SigmaOrder:
    """Per-port max-on-time admission baseline.

    A coflow is admitted only if every port it uses admits it under the
    per-port Moore-Hodgson schedule; admitted coflows are ordered by deadline.
    A second pass retries the rejected ones in ascending order of required
    bandwidth at their own busiest port: a candidate is appended behind all
    admitted traffic when it can still catch its deadline from there.
    """
    view = _as_view(instance_or_view)
    n = len(view.ids)
    if n == 0:
        return SigmaOrder([], [])
    admitted = np.ones(n, dtype=bool)
    for port in range(view.P.shape[1]):
        col = view.P[:, port]
        users = np.flatnonzero(col > 0.0)
        if users.size == 0:
            continue
        jobs = [Job(int(r), float(col[r]), float(view.T[r])) for r in users]
        port_ok = set(moore_hodgson(jobs))
        for r in users:
            if int(r) not in port_ok:
                admitted[r] = False
    current = [int(r) for r in
               sorted(np.flatnonzero(admitted), key=lambda r: (view.T[r], r))]
    rejected = [r for r in range(n) if not admitted[r]]
    cum = view.P[current].sum(axis=0) if current else np.zeros(view.P.shape[1])

    def demand(r):  # required bandwidth at the coflow's own busiest port
        return float(view.P[r].max() / view.T[r])

    for r in sorted(rejected, key=lambda r: (demand(r), r)):
        row = view.P[r]
        used = row > 0.0
        if float((cum[used] + row[used]).max()) <= view.T[r] + TOL:
            current.append(r)
            cum += row
    sigma = [int(view.ids[r]) for r in current]
    pre = [int(view.ids[r]) for r in rejected]
    return SigmaOrder(sigma, pre)


def edd_order(instance_or_view) -> SigmaOrder:
    """Deadline-ascending order with estimated-completion pruning; the sanity
    baseline every admission-control variant should beat."""
    view = _as_view(instance_or_view)
    n = len(view.ids)
    order_rows = sorted(range(n), key=lambda r: (view.T[r], r))
    survivors = _prune_late(view.P, view.T, order_rows, set(range(n)))
    kept = set(survivors)
    dropped = [int(view.ids[r]) for r in order_rows if r not in kept]
    return SigmaOrder([int(view.ids[r]) for r in survivors], dropped)
