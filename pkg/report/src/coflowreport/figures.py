"""Figure and table builders.

Every figure gets a companion `<name>_data.csv` holding the exact numbers
plotted, so the rendering is reproducible and the values auditable.
"""

from __future__ import annotations

import csv
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .frame import METRICS, ResultsFrame, SchemaError  # noqa: E402

log = logging.getLogger("coflowreport")

PERCENTILES = (1, 10, 50, 90, 99)


def _data_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + "_data.csv"


def _fmt(x) -> str:
    return repr(float(x))


def plot_bars(csv_path: str, group_by, metric: str, out: str,
              kind: str = "bar") -> str:
    """Grouped chart of per-group scheduler means; returns the image path.

    `group_by` names the columns defining the x-axis groups (for instance
    ["M", "N"] gives one group per fabric/batch size; ["lambda"] gives an
    arrival-rate sweep). Heights are the plain means of the selected metric
    over matching rows. `kind="line"` draws one line per scheduler instead of
    grouped bars, which suits rate and frequency sweeps.
    """
    if metric not in METRICS:
        raise SchemaError(f"unknown metric {metric!r}, choose from {METRICS}")
    if kind not in ("bar", "line"):
        raise ValueError(f"kind must be 'bar' or 'line', got {kind!r}")
    frame = ResultsFrame.read(csv_path)
    group_by = list(group_by)
    cells: dict[tuple, dict[str, list[float]]] = {}
    for row in frame.rows:
        if row[metric] is None:
            continue
        key = tuple(row[g] for g in group_by)
        cells.setdefault(key, {}).setdefault(row["scheduler"], []).append(row[metric])
    if not cells:
        raise ValueError(f"no rows with a {metric} value in {csv_path}")
    groups = sorted(cells)
    schedulers = sorted({s for by_sched in cells.values() for s in by_sched})

    def label(key):
        return "[" + ",".join(f"{v:g}" if isinstance(v, float) else str(v)
                              for v in key) + "]"

    data_rows = []
    means: dict[tuple, dict[str, float]] = {}
    for key in groups:
        means[key] = {}
        for sched in schedulers:
            vals = cells[key].get(sched)
            if vals is None:
                continue
            means[key][sched] = sum(vals) / len(vals)
            data_rows.append([label(key), sched, _fmt(means[key][sched]),
                              str(len(vals))])
    data_path = _data_path(out)
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["group", "scheduler", "value", "runs"])
        w.writerows(data_rows)

    fig, ax = plt.subplots(figsize=(1.8 + 1.2 * len(groups), 3.2))
    x = np.arange(len(groups))
    if kind == "bar":
        width = 0.8 / len(schedulers)
        for i, sched in enumerate(schedulers):
            heights = [means[key].get(sched, np.nan) for key in groups]
            ax.bar(x + (i - (len(schedulers) - 1) / 2) * width, heights,
                   width=width, label=sched)
    else:
        for sched in schedulers:
            heights = [means[key].get(sched, np.nan) for key in groups]
            ax.plot(x, heights, marker="o", label=sched)
    ax.set_xticks(x)
    ax.set_xticklabels([label(k) for k in groups])
    ax.set_ylabel(metric)
    ax.set_xlabel(",".join(group_by))
    ax.set_ylim(0, None)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    log.info("wrote %s and %s", out, data_path)
    return out


def percentile_gains(csv_path: str, baseline: str, out: str) -> str:
    """Percentiles of per-instance relative gains against a baseline scheduler.

    The gain on one instance is WCAR / WCAR(baseline) - 1; instances whose
    baseline WCAR is zero are dropped (their count is reported). Percentiles
    use linear interpolation between closest ranks. Returns the table path.
    """
    frame = ResultsFrame.read(csv_path)
    if baseline not in frame.schedulers():
        raise ValueError(f"baseline scheduler {baseline!r} not present in {csv_path}")
    base = {(r["instance_id"], r["seed"]): r["WCAR"]
            for r in frame.rows if r["scheduler"] == baseline}
    excluded = sum(1 for v in base.values() if v == 0.0)
    if excluded:
        log.info("excluding %d instances with zero baseline WCAR", excluded)
    table = []
    for sched in frame.schedulers():
        gains = []
        for r in frame.rows:
            if r["scheduler"] != sched:
                continue
            ref = base.get((r["instance_id"], r["seed"]))
            if ref is None or ref == 0.0:
                continue
            gains.append(r["WCAR"] / ref - 1.0)
        if not gains:
            continue
        pcts = np.percentile(gains, PERCENTILES)
        table.append([sched] + [_fmt(p) for p in pcts]
                     + [str(len(gains)), str(excluded)])
    if not table:
        raise ValueError(f"no instances comparable against {baseline!r}")
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scheduler"] + [f"p{p}" for p in PERCENTILES]
                   + ["instances", "excluded"])
        w.writerows(table)
    log.info("wrote %s", out)
    return out
