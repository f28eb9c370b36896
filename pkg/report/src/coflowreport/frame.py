"""Strict reader for the scheduler results CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

SCHEMA = ["instance_id", "scheduler", "seed", "M", "N", "lambda", "f",
          "CAR", "WCAR", "car_class1", "car_class2", "pred_error",
          "accepted", "runtime_ms"]
NUMERIC = {"seed", "M", "N", "lambda", "f", "CAR", "WCAR", "car_class1",
           "car_class2", "pred_error", "accepted", "runtime_ms"}
METRICS = ("CAR", "WCAR", "car_class1", "car_class2", "pred_error")


class SchemaError(ValueError):
    """The CSV does not match the results schema."""


def _coerce(name: str, value: str):
    if name not in NUMERIC:
        return value
    if value == "":
        return None
    if value == "inf":
        return math.inf
    return float(value)


@dataclass
class ResultsFrame:
    rows: list[dict]

    @classmethod
    def read(cls, path: str) -> "ResultsFrame":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty results file") from None
            if header != SCHEMA:
                unknown = [c for c in header if c not in SCHEMA]
                missing = [c for c in SCHEMA if c not in header]
                raise SchemaError(
                    f"{path}: header mismatch (unknown columns {unknown}, "
                    f"missing {missing})")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != len(SCHEMA):
                    raise SchemaError(f"{path}:{lineno}: expected "
                                      f"{len(SCHEMA)} fields, got {len(rec)}")
                rows.append({name: _coerce(name, val)
                             for name, val in zip(SCHEMA, rec)})
        return cls(rows)

    def schedulers(self) -> list[str]:
        return sorted({r["scheduler"] for r in self.rows})
