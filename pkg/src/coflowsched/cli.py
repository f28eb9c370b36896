"""Experiment driver.

Subcommands: `gen` (emit an instance JSON), `run-offline`, `run-online`,
`oracle` (exhaustive optimum for tiny instances), `export-ilp`. Workloads
come from a config file (JSON) and/or flags, with flags winning; every run
appends rows to the results CSV. All randomness flows from explicit seeds.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import exact, workload
from .errors import ConfigError, ParseError, SizeLimitError
from .model import Fabric
from .sched import VARIANTS, SchedulerConfig
from .sim import CSV_HEADER, OnlineConfig, metrics_to_row, run_offline, run_online

log = logging.getLogger("coflowsched")


def _parse_args(argv):
    top = argparse.ArgumentParser(prog="coflowsched", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, online=False):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output path (results CSV / JSON / LP)")
        p.add_argument("--scheduler", help="comma-separated scheduler names")
        p.add_argument("--seed", help="comma-separated integer seeds")
        p.add_argument("--jobs", type=int, help="worker threads for multi-seed runs")
        p.add_argument("--instance", help="path to an instance JSON")
        p.add_argument("--machines", type=int)
        p.add_argument("--coflows", type=int)
        p.add_argument("--trace", help="path to a shuffle trace to sample from")
        p.add_argument("--alpha", type=float, nargs=2, metavar=("LO", "HI"))
        p.add_argument("--type2-prob", type=float, dest="type2_prob")
        p.add_argument("--class2-prob", type=float, dest="class2_prob")
        p.add_argument("--class2-weight", type=float, dest="class2_weight")
        p.add_argument("--gamma", type=float)
        p.add_argument("--weight-scale", type=int, dest="weight_scale")
        if online:
            p.add_argument("--lambda", type=float, dest="lam")
            p.add_argument("--frequency", type=float,
                           help="updates per time unit; omit for per-arrival")
            p.add_argument("--batch", action="store_true",
                           help="batch arrivals of U{5..15} coflows")
            p.add_argument("--total", type=int, help="total coflow arrivals")

    p_gen = sub.add_parser("gen", help="generate an instance JSON")
    common(p_gen)
    p_gen.add_argument("--preset", choices=["edd-trap"],
                       help="built-in adversarial instance instead of synthetic")
    p_gen.add_argument("--singles", type=int,
                       help="singleton coflows in the edd-trap preset")
    p_gen.add_argument("--eps", type=float, default=0.1)
    p_gen.set_defaults(func=_cmd_gen)

    p_off = sub.add_parser("run-offline", help="schedule zero-release batches")
    common(p_off)
    p_off.set_defaults(func=_cmd_run_offline)

    p_on = sub.add_parser("run-online", help="simulate an arrival stream")
    common(p_on, online=True)
    p_on.set_defaults(func=_cmd_run_online)

    p_or = sub.add_parser("oracle", help="exhaustive optimum (tiny instances)")
    common(p_or)
    p_or.set_defaults(func=_cmd_oracle)

    p_ilp = sub.add_parser("export-ilp", help="write the admission ILP (LP format)")
    common(p_ilp)
    p_ilp.set_defaults(func=_cmd_export_ilp)

    return top.parse_args(argv)


def _effective_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    for key in ("out", "scheduler", "seed", "jobs", "instance", "machines",
                "coflows", "trace", "alpha", "type2_prob", "class2_prob",
                "class2_weight", "gamma", "weight_scale", "lam", "frequency",
                "batch", "total", "preset", "singles", "eps"):
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def _schedulers(cfg) -> list[str]:
    raw = cfg.get("scheduler", cfg.get("schedulers", "wdcoflow"))
    names = raw.split(",") if isinstance(raw, str) else list(raw)
    names = [n.strip() for n in names if n.strip()]
    for n in names:
        if n not in VARIANTS:
            raise ConfigError(f"unknown scheduler '{n}', valid: {', '.join(VARIANTS)}")
    if not names:
        raise ConfigError("need at least one scheduler")
    return names


def _seeds(cfg) -> list[int]:
    raw = cfg.get("seed", cfg.get("seeds", "1"))
    if isinstance(raw, str):
        raw = raw.split(",")
    elif isinstance(raw, int):
        raw = [raw]
    try:
        seeds = [int(s) for s in raw]
    except (TypeError, ValueError):
        raise ConfigError(f"seeds must be integers, got {raw!r}") from None
    if not seeds:
        raise ConfigError("need at least one seed")
    return seeds


def _digest(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _scheduler_config(name: str, cfg: dict) -> SchedulerConfig:
    return SchedulerConfig(variant=name, gamma=float(cfg.get("gamma", 0.9)),
                           weight_scale=int(cfg.get("weight_scale", 1)))


def _synthetic_config(cfg: dict, seed: int) -> workload.SyntheticConfig:
    try:
        machines = int(cfg["machines"])
        coflows = int(cfg["coflows"])
    except KeyError as exc:
        raise ConfigError(f"synthetic workload needs {exc.args[0]}") from None
    return workload.SyntheticConfig(
        machines=machines, coflows=coflows, rng_seed=seed,
        alpha_range=tuple(cfg.get("alpha", (2.0, 4.0))),
        type2_prob=float(cfg.get("type2_prob", 0.4)),
        class2_prob=float(cfg.get("class2_prob", 0.0)),
        class2_weight=float(cfg.get("class2_weight", 2.0)))


def _offline_instance(cfg: dict, seed: int):
    if "instance" in cfg:
        inst = workload.load_instance(cfg["instance"])
        return os.path.splitext(os.path.basename(cfg["instance"]))[0], inst
    if "trace" in cfg:
        trace = workload.parse_trace(cfg["trace"])
        inst = workload.sample_trace(
            trace, int(cfg["machines"]), int(cfg["coflows"]), seed,
            class2_prob=float(cfg.get("class2_prob", 0.0)),
            class2_weight=float(cfg.get("class2_weight", 2.0)),
            alpha_range=tuple(cfg.get("alpha", (2.0, 4.0))))
        stem = os.path.splitext(os.path.basename(cfg["trace"]))[0]
        return f"{stem}-m{cfg['machines']}-n{cfg['coflows']}-s{seed}", inst
    scfg = _synthetic_config(cfg, seed)
    inst = workload.gen_synthetic(scfg, Fabric.uniform(scfg.machines))
    return f"syn-m{scfg.machines}-n{scfg.coflows}-s{seed}", inst


def _write_rows(path, rows) -> None:
    if path in (None, "-"):
        out = csv.writer(sys.stdout)
        out.writerow(CSV_HEADER)
        out.writerows(rows)
        return
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        if fresh:
            out.writerow(CSV_HEADER)
        out.writerows(rows)


def _fan_out(tasks, jobs):
    """Run (key, thunk) tasks on a thread pool; emit results in key order."""
    results = {}
    workers = jobs or min(8, os.cpu_count() or 1)
    if workers <= 1 or len(tasks) == 1:
        for key, thunk in tasks:
            results[key] = thunk()
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {key: pool.submit(thunk) for key, thunk in tasks}
            for key, fut in futures.items():
                results[key] = fut.result()
    return [results[key] for key in sorted(results)]


def _cmd_gen(args) -> int:
    cfg = _effective_config(args)
    seed = _seeds(cfg)[0]
    if cfg.get("preset") == "edd-trap":
        machines = int(cfg.get("machines", 4))
        inst = workload.edd_trap_instance(
            machines, eps=float(cfg.get("eps", 0.1)),
            singles=cfg.get("singles"))
    else:
        scfg = _synthetic_config(cfg, seed)
        inst = workload.gen_synthetic(scfg, Fabric.uniform(scfg.machines))
    text = workload.instance_to_json(inst)
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        log.info("gen config=%s seed=%d wrote %s", _digest(cfg), seed, cfg["out"])
    else:
        print(text)
    return 0


def _run_matrix(cfg, runner) -> int:
    schedulers = _schedulers(cfg)
    seeds = _seeds(cfg)
    digest = _digest(cfg)
    tasks = []
    for seed in seeds:
        for name in schedulers:
            tasks.append(((seed, name), _make_thunk(runner, cfg, seed, name, digest)))
    rows = _fan_out(tasks, cfg.get("jobs"))
    _write_rows(cfg.get("out"), rows)
    return 0


def _make_thunk(runner, cfg, seed, name, digest):
    def thunk():
        t0 = time.perf_counter()
        row = runner(cfg, seed, name)
        log.info("run config=%s scheduler=%s seed=%d wall_ms=%d",
                 digest, name, seed, round((time.perf_counter() - t0) * 1e3))
        return row
    return thunk


def _cmd_run_offline(args) -> int:
    cfg = _effective_config(args)

    def runner(cfg, seed, name):
        instance_id, inst = _offline_instance(cfg, seed)
        metrics = run_offline(inst, _scheduler_config(name, cfg))
        return metrics_to_row(metrics, instance_id, name, seed,
                              inst.fabric.num_machines)

    return _run_matrix(cfg, runner)


def _cmd_run_online(args) -> int:
    cfg = _effective_config(args)

    def runner(cfg, seed, name):
        freq = cfg.get("frequency")
        ocfg = OnlineConfig(scheduler=_scheduler_config(name, cfg),
                            frequency=float(freq) if freq else None)
        if "instance" in cfg:
            inst = workload.load_instance(cfg["instance"])
            arrivals = sorted(((c.release_time, c) for c in inst.coflows),
                              key=lambda rc: rc[0])
            machines = inst.fabric.num_machines
            fabric = inst.fabric
            instance_id = os.path.splitext(os.path.basename(cfg["instance"]))[0]
            lam = None
        else:
            lam = float(cfg.get("lam", 0) or 0)
            if lam <= 0:
                raise ConfigError("online synthetic runs need --lambda > 0")
            total = int(cfg.get("total", cfg.get("coflows", 0)) or 0)
            if total <= 0:
                raise ConfigError("online synthetic runs need --total > 0")
            scfg = _synthetic_config({**cfg, "coflows": total}, seed)
            arrival = workload.ArrivalConfig(
                lam=lam, total_coflows=total,
                batch_size_range=(5, 15) if cfg.get("batch") else None)
            arrivals = workload.gen_arrivals(scfg, arrival)
            fabric = Fabric.uniform(scfg.machines)
            machines = scfg.machines
            instance_id = f"on-m{machines}-lam{lam:g}-s{seed}"
        metrics = run_online(fabric, arrivals, ocfg)
        return metrics_to_row(metrics, instance_id, name, seed, machines,
                              lam=lam, freq=ocfg.frequency or float("inf"))

    return _run_matrix(cfg, runner)


def _cmd_oracle(args) -> int:
    cfg = _effective_config(args)
    seed = _seeds(cfg)[0]
    _, inst = _offline_instance(cfg, seed)
    weight, accepted, order = exact.brute_force_sigma_wcar(inst)
    doc = json.dumps({"opt_weight": weight, "accepted": sorted(accepted),
                      "order": order})
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
    else:
        print(doc)
    log.info("oracle config=%s seed=%d opt_weight=%s", _digest(cfg), seed, weight)
    return 0


def _cmd_export_ilp(args) -> int:
    cfg = _effective_config(args)
    if not cfg.get("out"):
        raise ConfigError("export-ilp needs --out for the LP file")
    seed = _seeds(cfg)[0]
    _, inst = _offline_instance(cfg, seed)
    model = exact.export_ilp(inst, cfg["out"])
    counts = model.var_counts()
    log.info("export-ilp config=%s vars z=%d d=%d y=%d c=%d -> %s", _digest(cfg),
             counts["z"], counts["d"], counts["y"], counts["c"], cfg["out"])
    return 0


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = _parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except (ParseError, SizeLimitError) as exc:
        log.error("%s", exc)
        return 3
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
