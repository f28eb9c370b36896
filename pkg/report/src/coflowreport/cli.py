"""Turn results CSV files into figures and percentile tables.

Subcommands: `bars` (grouped bar chart per metric, plus a companion data
CSV) and `gains` (percentile table of relative gains against a baseline
scheduler). Exit codes: 0 success, 2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .figures import percentile_gains, plot_bars
from .frame import METRICS, SchemaError

log = logging.getLogger("coflowreport")


def _parse_args(argv):
    top = argparse.ArgumentParser(prog="coflow-report", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p_bars = sub.add_parser("bars", help="grouped bar chart of scheduler means")
    p_bars.add_argument("csv", help="results CSV")
    p_bars.add_argument("--metric", default="CAR", choices=METRICS)
    p_bars.add_argument("--group", nargs="+", default=["M", "N"],
                        help="columns defining the x-axis groups")
    p_bars.add_argument("--kind", default="bar", choices=["bar", "line"],
                        help="line charts suit lambda/frequency sweeps")
    p_bars.add_argument("--out", required=True, help="figure path (.png/.svg)")

    p_gains = sub.add_parser("gains", help="percentile table of relative gains")
    p_gains.add_argument("csv", help="results CSV")
    p_gains.add_argument("--baseline", required=True)
    p_gains.add_argument("--out", required=True, help="table path (.csv)")

    return top.parse_args(argv)


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = _parse_args(argv)
    try:
        if args.command == "bars":
            plot_bars(args.csv, args.group, args.metric, args.out, kind=args.kind)
        else:
            percentile_gains(args.csv, args.baseline, args.out)
    except (SchemaError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
