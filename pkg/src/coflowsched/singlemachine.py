"""Minimizing the (weighted) number of late jobs on one machine.

This is the per-port kernel behind the admission filters: Moore-Hodgson for
unit weights, a pseudo-polynomial dynamic program for integer weights, and a
subset-enumeration oracle for cross-checking both.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import TOL


@dataclass(frozen=True)
class Job:
    job_id: int
    processing_time: float
    deadline: float
    weight: int = 1

    def __post_init__(self):
        if self.processing_time <= 0:
            raise ValueError(f"job {self.job_id}: processing time must be positive")
        if self.deadline <= 0:
            raise ValueError(f"job {self.job_id}: deadline must be positive")


@dataclass
class DpTable:
    """Stage-by-stage DP state: P[j][w] = least total processing of any on-time
    subset of the first j EDD jobs with total weight w (inf if none exists)."""

    jobs: list[Job]  # EDD order
    P: np.ndarray    # shape (n+1, W+1)
    take: np.ndarray  # bool, take[j][w]: stage-j value at w came from taking job j


def edd_sorted(jobs) -> list[Job]:
    """Earliest due date; ties by shorter processing time, then smaller id."""
    return sorted(jobs, key=lambda j: (j.deadline, j.processing_time, j.job_id))


def moore_hodgson(jobs) -> list[int]:
    """Classic max-on-time-count scan; returns accepted job ids in EDD order.

    Walk jobs by deadline keeping a tentative schedule; whenever the running
    total overshoots the current deadline, drop the longest job kept so far
    (ties: smaller id).
    """
    accepted: list[Job] = []
    total = 0.0
    for job in edd_sorted(jobs):
        accepted.append(job)
        total += job.processing_time
        if total > job.deadline + TOL:
            worst = max(accepted, key=lambda j: (j.processing_time, -j.job_id))
            accepted.remove(worst)
            total -= worst.processing_time
    return [j.job_id for j in accepted]


def _check_integer_weights(jobs) -> list[int]:
    weights = []
    for j in jobs:
        w = float(j.weight)
        if w < 1 or not w.is_integer():
            raise ValueError(
                f"job {j.job_id}: the dynamic program needs integer weights >= 1, "
                f"got {j.weight}")
        weights.append(int(w))
    return weights


def dp_table(jobs) -> DpTable:
    """Run the weighted-late-jobs dynamic program, keeping the full table."""
    order = edd_sorted(jobs)
    weights = _check_integer_weights(order)
    W = sum(weights)
    n = len(order)
    P = np.full((n + 1, W + 1), np.inf)
    P[0][0] = 0.0
    take = np.zeros((n + 1, W + 1), dtype=bool)
    for j, job in enumerate(order, start=1):
        w_j, p_j = weights[j - 1], job.processing_time
        row = P[j - 1].copy()
        cand = np.full(W + 1, np.inf)
        cand[w_j:] = P[j - 1][:W + 1 - w_j] + p_j
        cand[cand > job.deadline + TOL] = np.inf
        better = cand < row  # strict: ties prefer "not taken"
        row[better] = cand[better]
        P[j] = row
        take[j] = better
    return DpTable(order, P, take)


def dp_weighted_late(jobs) -> tuple[int, set[int]]:
    """Max total weight of an on-time-feasible subset, with one witness set.

    Jobs are renumbered into EDD order internally; weights must be integers.
    Runs in O(n * sum(weights)).
    """
    if not jobs:
        return 0, set()
    table = dp_table(jobs)
    finite = np.flatnonzero(np.isfinite(table.P[-1]))
    best_w = int(finite[-1])
    chosen: set[int] = set()
    w = best_w
    weights = [int(j.weight) for j in table.jobs]
    for j in range(len(table.jobs), 0, -1):
        if table.take[j][w]:
            chosen.add(table.jobs[j - 1].job_id)
            w -= weights[j - 1]
    return best_w, chosen


def dp_max_weight(p: np.ndarray, T: np.ndarray, w: np.ndarray) -> int:
    """Value-only variant of the dynamic program on parallel arrays.

    Inputs must already be EDD-sorted; weights are positive integers.
    """
    W = int(w.sum())
    P = np.full(W + 1, np.inf)
    P[0] = 0.0
    for j in range(len(p)):
        w_j = int(w[j])
        cand = P[:W + 1 - w_j] + p[j]
        np.minimum(P[w_j:], np.where(cand <= T[j] + TOL, cand, np.inf), out=P[w_j:])
    finite = np.flatnonzero(np.isfinite(P))
    return int(finite[-1])


def brute_force_late(jobs) -> tuple[int, set[int]]:
    """Enumerate all subsets; a subset is feasible iff its EDD sequence meets
    every deadline. Ties: lexicographically smallest id set. Oracle only."""
    jobs = list(jobs)
    if len(jobs) > 20:
        raise ValueError(f"brute force limited to 20 jobs, got {len(jobs)}")
    order = edd_sorted(jobs)
    best = (0, ())  # (weight, sorted ids); compare weight desc then ids asc
    for mask in itertools.product((False, True), repeat=len(order)):
        subset = [j for j, picked in zip(order, mask) if picked]
        total = 0.0
        ok = True
        for j in subset:
            total += j.processing_time
            if total > j.deadline + TOL:
                ok = False
                break
        if not ok:
            continue
        weight = sum(int(j.weight) for j in subset)
        ids = tuple(sorted(j.job_id for j in subset))
        if weight > best[0] or (weight == best[0] and ids < best[1]):
            best = (weight, ids)
    return best[0], set(best[1])
