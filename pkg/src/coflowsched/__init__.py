"""Deadline-aware coflow admission control and scheduling on a Big-Switch fabric."""

from .alloc import AllocationTimeline, FluidNetwork, actual_cct, greedy_allocate
from .errors import ConfigError, ParseError, SizeLimitError
from .exact import brute_force_sigma_wcar, build_ilp, export_ilp, parse_lp
from .model import (Coflow, Fabric, Flow, FlowOutcome, Instance,
                    bottleneck_port, f_parallel, isolation_cct, port_load,
                    processing_time, psi_index, schedulability_index)
from .sched import (VARIANTS, SchedulerConfig, SigmaOrder, build_sigma, cs_mha,
                    dcoflow_variant_candidates, dp_filter, edd_order, eval_cct,
                    reject_coflow, remove_late_coflows)
from .sim import (CSV_HEADER, OnlineConfig, RunMetrics, compute_metrics,
                  run_offline, run_online)
from .singlemachine import (Job, brute_force_late, dp_weighted_late,
                            moore_hodgson)
from .workload import (ArrivalConfig, SyntheticConfig, TraceFile,
                       edd_trap_instance, gen_arrivals, gen_synthetic,
                       instance_from_json, instance_to_json, load_instance,
                       parse_trace, sample_trace, save_instance)

__version__ = "0.1.0"
