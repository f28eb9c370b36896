"""Ground-truth machinery for desk-scale instances.

`brute_force_sigma_wcar` enumerates every subset and permutation under the
port-cumulative completion bound and is the reference optimum for the
priority-order admission problem. `export_ilp` writes the same problem as an
LP-format integer program for external solvers; `parse_lp` reads our own
files back for structural round-trip checks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, SizeLimitError
from .model import TOL, Instance
from .sched import BatchView

BRUTE_FORCE_LIMIT = 8


def brute_force_sigma_wcar(instance: Instance) -> tuple[float, set[int], list[int]]:
    """Optimal admitted weight over all priority orders, by exhaustion.

    A subset is feasible under a permutation iff every member's cumulative
    port load (over itself and its predecessors) stays within its deadline on
    every port. Ties between equal-weight optima go to the smaller subset,
    then the lexicographically smallest id set; the returned order is the
    first feasible permutation in lexicographic order.
    """
    n = len(instance.coflows)
    if n > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(
            f"brute force handles at most {BRUTE_FORCE_LIMIT} coflows, got {n}")
    view = BatchView.from_instance(instance)
    rows = list(range(n))
    subsets = sorted(
        (s for r in range(n + 1) for s in itertools.combinations(rows, r)),
        key=lambda s: (-sum(view.w[r] for r in s), len(s),
                       tuple(int(view.ids[r]) for r in s)))
    for subset in subsets:
        perm = _first_feasible_perm(view, subset)
        if perm is not None:
            weight = float(sum(view.w[r] for r in subset))
            ids = {int(view.ids[r]) for r in subset}
            return weight, ids, [int(view.ids[r]) for r in perm]
    return 0.0, set(), []


def _first_feasible_perm(view: BatchView, subset) -> tuple | None:
    """Depth-first search over permutations (lexicographic by id), pruning as
    soon as a prefix violates some member's deadline."""
    P, T = view.P, view.T

    def extend(prefix, cum, left):
        if not left:
            return prefix
        for idx, r in enumerate(left):
            new_cum = cum + P[r]
            if float(new_cum.max()) <= T[r] + TOL:
                hit = extend(prefix + (r,), new_cum, left[:idx] + left[idx + 1:])
                if hit is not None:
                    return hit
        return None

    return extend((), np.zeros(P.shape[1]), tuple(subset))


# --- integer-program export -----------------------------------------------------

@dataclass
class IlpModel:
    """Structural form of the exported program.

    Variables: z_k (admit), d_k_k2 (k before k2), y_k2_k (k2 admitted and
    before k), c_l_k (completion of k on port l). Constraints are stored as
    (name, {var: coef}, sense, rhs) with sense one of <=, >=, =.
    """

    objective: dict[str, float]
    binaries: list[str]
    continuous: list[str]
    constraints: list[tuple[str, dict[str, float], str, float]] = field(
        default_factory=list)

    def var_counts(self) -> dict[str, int]:
        out = {"z": 0, "d": 0, "y": 0, "c": 0}
        for v in self.binaries + self.continuous:
            out[v.split("_", 1)[0]] += 1
        return out


def build_ilp(instance: Instance) -> IlpModel:
    """Assemble the admission ILP: maximize total admitted weight subject to
    ordering consistency and port-cumulative deadline constraints."""
    if not instance.coflows:
        raise ValueError("need at least one coflow to export")
    view = BatchView.from_instance(instance)
    ids = [int(k) for k in view.ids]
    ports = range(1, view.P.shape[1] + 1)
    z = {k: f"z_{k}" for k in ids}
    d = {(a, b): f"d_{a}_{b}" for a in ids for b in ids if a != b}
    y = {(a, b): f"y_{a}_{b}" for a in ids for b in ids if a != b}
    c = {(l, k): f"c_{l}_{k}" for l in ports for k in ids}
    p = {(l, k): float(view.P[r, l - 1])
         for r, k in enumerate(ids) for l in ports}
    T = {k: float(view.T[r]) for r, k in enumerate(ids)}
    w = {k: float(view.w[r]) for r, k in enumerate(ids)}

    model = IlpModel(
        objective={z[k]: w[k] for k in ids},
        binaries=[z[k] for k in ids] + [d[a, b] for a, b in sorted(d)]
        + [y[a, b] for a, b in sorted(y)],
        continuous=[c[l, k] for l, k in sorted(c)],
    )
    add = model.constraints.append
    for a, b in itertools.combinations(ids, 2):
        add((f"ord_{a}_{b}", {d[a, b]: 1.0, d[b, a]: 1.0}, "=", 1.0))
    for a, b, e in itertools.permutations(ids, 3):
        add((f"tri_{a}_{b}_{e}", {d[a, b]: 1.0, d[b, e]: 1.0, d[e, a]: 1.0},
             "<=", 2.0))
    for a, b in sorted(y):  # y_a_b = z_a AND d_a_b, linearized
        add((f"yz_{a}_{b}", {y[a, b]: 1.0, z[a]: -1.0}, "<=", 0.0))
        add((f"yd_{a}_{b}", {y[a, b]: 1.0, d[a, b]: -1.0}, "<=", 0.0))
        add((f"ylb_{a}_{b}", {y[a, b]: 1.0, z[a]: -1.0, d[a, b]: -1.0},
             ">=", -1.0))
    for l in ports:
        for k in ids:
            terms = {c[l, k]: 1.0}
            for k2 in ids:
                if k2 != k and p[l, k2] > 0.0:
                    terms[y[k2, k]] = -p[l, k2]
            if p[l, k] > 0.0:
                terms[z[k]] = -p[l, k]
            add((f"cct_{l}_{k}", terms, ">=", 0.0))
            add((f"dl_{l}_{k}", {c[l, k]: 1.0, z[k]: -T[k]}, "<=", 0.0))
    return model


def _fmt(x: float) -> str:
    return repr(float(x))


def _terms_str(terms: dict[str, float]) -> str:
    parts = []
    for var, coef in terms.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {var}")
    joined = " ".join(parts)
    return joined[2:] if joined.startswith("+ ") else joined


def write_lp(model: IlpModel, path: str) -> None:
    lines = ["Maximize", f" obj: {_terms_str(model.objective)}", "Subject To"]
    for name, terms, sense, rhs in model.constraints:
        op = {"<=": "<=", ">=": ">=", "=": "="}[sense]
        lines.append(f" {name}: {_terms_str(terms)} {op} {_fmt(rhs)}")
    lines.append("Bounds")
    for var in model.continuous:
        lines.append(f" {var} >= {_fmt(0.0)}")
    lines.append("Binary")
    for var in model.binaries:
        lines.append(f" {var}")
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def export_ilp(instance: Instance, path: str) -> IlpModel:
    """Write the admission ILP in LP text format; returns the model written."""
    model = build_ilp(instance)
    write_lp(model, path)
    return model


def _parse_expr(tokens: list[str]) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign = 1.0
    pending: float | None = None
    for tok in tokens:
        if tok == "+":
            sign, pending = 1.0, None
        elif tok == "-":
            sign, pending = -1.0, None
        else:
            try:
                pending = sign * float(tok)
            except ValueError:
                coef = pending if pending is not None else sign
                terms[tok] = terms.get(tok, 0.0) + coef
                sign, pending = 1.0, None
    return terms


def parse_lp(path: str) -> IlpModel:
    """Read back an LP file written by `write_lp` (same dialect only)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    section = None
    objective: dict[str, float] = {}
    constraints = []
    binaries: list[str] = []
    continuous: list[str] = []
    for no, ln in enumerate(lines, start=1):
        low = ln.lower()
        if low in ("maximize", "subject to", "bounds", "binary", "end"):
            section = low
            continue
        if section == "maximize":
            _, expr = ln.split(":", 1)
            objective = _parse_expr(expr.split())
        elif section == "subject to":
            name, body = ln.split(":", 1)
            tokens = body.split()
            for op in ("<=", ">=", "="):
                if op in tokens:
                    cut = tokens.index(op)
                    constraints.append((name.strip(), _parse_expr(tokens[:cut]),
                                        op, float(tokens[cut + 1])))
                    break
            else:
                raise ParseError(f"constraint without comparator: {ln!r}", line=no)
        elif section == "bounds":
            var = ln.split()[0]
            continuous.append(var)
        elif section == "binary":
            binaries.extend(ln.split())
        elif section != "end":
            raise ParseError(f"content outside any section: {ln!r}", line=no)
    return IlpModel(objective, binaries, continuous, constraints)
