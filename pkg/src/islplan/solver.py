"""Solver backends and the common solve layer for superframe models.

Two exact backends ship:

    HighsBackend        scipy.optimize.milp (HiGHS branch-and-cut); honors
                        time limits and relative-gap targets and reports the
                        dual bound of interrupted solves.
    EnumerationBackend  depth-first exhaustive search with per-row interval
                        pruning; capped variable count, no time limit. Exists
                        so small instances can be solved and cross-checked
                        with no MILP machinery in the loop.

solve_model() adds prechecks, status mapping, and infeasibility diagnosis:
an infeasible model is re-solved with the min-ranging rows dropped, then the
delay-window rows, then both, to name the family that breaks it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize
import scipy.sparse

from .errors import CapabilityError, InfeasibleError, IslPlanError, SolverLimitError
from .ilp import IlpModel, structural_problems

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE = "feasible-with-gap"
STATUS_INFEASIBLE = "infeasible"
STATUS_NO_INCUMBENT = "time-limit-no-incumbent"


@dataclass
class SolveResult:
    status: str
    objective: Optional[float]          # maximize sense
    values: Optional[np.ndarray]
    gap: Optional[float]
    dual_bound: Optional[float]         # upper bound on the objective
    wall_time_s: float
    backend: str

    @property
    def usable(self) -> bool:
        return self.status in (STATUS_OPTIMAL, STATUS_FEASIBLE)


class HighsBackend:
    """MILP solve through scipy's HiGHS bindings."""

    name = "highs"

    def solve(self, model: IlpModel, time_limit_s: Optional[float] = None,
              gap: Optional[float] = None) -> SolveResult:
        start = time.perf_counter()
        if model.n_vars == 0:
            return SolveResult(STATUS_OPTIMAL, 0.0, np.zeros(0), 0.0, 0.0,
                               time.perf_counter() - start, self.name)
        constraints = None
        if model.n_rows:
            rows, cols, vals = [], [], []
            for ridx, (rc, rv) in enumerate(zip(model.row_cols, model.row_vals)):
                rows.extend([ridx] * len(rc))
                cols.extend(rc)
                vals.extend(rv)
            a = scipy.sparse.csc_array((vals, (rows, cols)),
                                       shape=(model.n_rows, model.n_vars))
            constraints = scipy.optimize.LinearConstraint(
                a, np.array(model.row_lower), np.array(model.row_upper))
        options = {"disp": False}
        if time_limit_s is not None:
            options["time_limit"] = float(time_limit_s)
        if gap:
            options["mip_rel_gap"] = float(gap)
        res = scipy.optimize.milp(
            c=-model.objective,
            integrality=np.ones(model.n_vars),
            bounds=scipy.optimize.Bounds(model.lower, model.upper),
            constraints=constraints,
            options=options)
        wall = time.perf_counter() - start

        dual = getattr(res, "mip_dual_bound", None)
        dual_bound = -float(dual) if dual is not None else None
        rel_gap = getattr(res, "mip_gap", None)
        rel_gap = float(rel_gap) if rel_gap is not None else None
        if res.status == 0:
            return SolveResult(STATUS_OPTIMAL, -float(res.fun), np.asarray(res.x),
                               rel_gap, dual_bound, wall, self.name)
        if res.status == 1:
            if res.x is None:
                return SolveResult(STATUS_NO_INCUMBENT, None, None, None,
                                   dual_bound, wall, self.name)
            return SolveResult(STATUS_FEASIBLE, -float(res.fun), np.asarray(res.x),
                               rel_gap, dual_bound, wall, self.name)
        if res.status == 2:
            return SolveResult(STATUS_INFEASIBLE, None, None, None, None, wall,
                               self.name)
        raise IslPlanError(f"unexpected MILP status {res.status}: {res.message}")


class EnumerationBackend:
    """Exhaustive depth-first search with interval pruning.

    Exact on any model within the variable cap; intended for cross-checks
    and tiny instances, not production scale.
    """

    name = "enumeration"

    def __init__(self, max_vars: int = 96):
        self.max_vars = max_vars

    def solve(self, model: IlpModel, time_limit_s: Optional[float] = None,
              gap: Optional[float] = None) -> SolveResult:
        start = time.perf_counter()
        n = model.n_vars
        if n > self.max_vars:
            raise CapabilityError(
                f"enumeration backend capped at {self.max_vars} variables, "
                f"model has {n}")
        if n == 0:
            return SolveResult(STATUS_OPTIMAL, 0.0, np.zeros(0), 0.0, 0.0,
                               time.perf_counter() - start, self.name)

        lo = model.lower.astype(int)
        hi = model.upper.astype(int)
        obj = model.objective
        rows_of_var: list = [[] for _ in range(n)]
        for ridx, (rc, rv) in enumerate(zip(model.row_cols, model.row_vals)):
            for c, v in zip(rc, rv):
                rows_of_var[c].append((ridx, v))
        m = model.n_rows
        row_lo = np.array(model.row_lower)
        row_hi = np.array(model.row_upper)
        partial = np.zeros(m)
        min_rest = np.zeros(m)
        max_rest = np.zeros(m)
        for v in range(n):
            for ridx, coeff in rows_of_var[v]:
                min_rest[ridx] += min(coeff * lo[v], coeff * hi[v])
                max_rest[ridx] += max(coeff * lo[v], coeff * hi[v])
        # best objective still reachable from each depth onward
        gain = np.where(obj > 0, obj * hi, obj * lo)
        suffix_gain = np.concatenate([np.cumsum(gain[::-1])[::-1], [0.0]])

        values = np.zeros(n, dtype=int)
        best_obj = -np.inf
        best_values: Optional[np.ndarray] = None

        def feasible_rows(affected) -> bool:
            for ridx in affected:
                if partial[ridx] + max_rest[ridx] < row_lo[ridx] - 1e-9:
                    return False
                if partial[ridx] + min_rest[ridx] > row_hi[ridx] + 1e-9:
                    return False
            return True

        def dfs(v: int, current: float) -> None:
            nonlocal best_obj, best_values
            if current + suffix_gain[v] <= best_obj + 1e-9:
                return
            if v == n:
                best_obj = current
                best_values = values.copy()
                return
            domain = range(hi[v], lo[v] - 1, -1) if obj[v] > 0 else \
                range(lo[v], hi[v] + 1)
            touched = rows_of_var[v]
            for ridx, coeff in touched:
                min_rest[ridx] -= min(coeff * lo[v], coeff * hi[v])
                max_rest[ridx] -= max(coeff * lo[v], coeff * hi[v])
            affected = [ridx for ridx, _ in touched]
            for val in domain:
                values[v] = val
                for ridx, coeff in touched:
                    partial[ridx] += coeff * val
                if feasible_rows(affected):
                    dfs(v + 1, current + obj[v] * val)
                for ridx, coeff in touched:
                    partial[ridx] -= coeff * val
            values[v] = 0
            for ridx, coeff in touched:
                min_rest[ridx] += min(coeff * lo[v], coeff * hi[v])
                max_rest[ridx] += max(coeff * lo[v], coeff * hi[v])

        dfs(0, 0.0)
        wall = time.perf_counter() - start
        if best_values is None:
            return SolveResult(STATUS_INFEASIBLE, None, None, None, None, wall,
                               self.name)
        return SolveResult(STATUS_OPTIMAL, float(best_obj),
                           best_values.astype(float), 0.0, float(best_obj),
                           wall, self.name)


_BACKENDS = {"highs": HighsBackend, "enumeration": EnumerationBackend}


def get_backend(name: str):
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise CapabilityError(f"unknown solver backend {name!r}; "
                              f"choose from {sorted(_BACKENDS)}") from None


def diagnose_infeasibility(model: IlpModel, backend, time_limit_s=None) -> list:
    """Name the constraint families whose removal restores feasibility."""
    notes = structural_problems(model)
    probes = [("min-ranging",), ("delay-window",),
              ("min-ranging", "delay-window")]
    for fams in probes:
        relaxed = model.without_families(fams)
        res = backend.solve(relaxed, time_limit_s=time_limit_s)
        if res.usable:
            notes.append("feasible after relaxing: " + ", ".join(fams))
            return notes
    notes.append("infeasible even without the min-ranging and delay-window rows")
    return notes


def solve_model(model: IlpModel, time_limit_s: Optional[float] = None,
                gap: Optional[float] = None, backend=None,
                diagnose: bool = True) -> SolveResult:
    """Solve with prechecks; raise typed errors for unusable outcomes."""
    if backend is None:
        backend = get_backend(model.params.backend)
    if time_limit_s is None:
        time_limit_s = model.params.time_limit_s
    if gap is None:
        gap = model.params.gap

    problems = structural_problems(model)
    if problems:
        raise InfeasibleError("superframe model is structurally infeasible",
                              diagnostics=problems)
    res = backend.solve(model, time_limit_s=time_limit_s, gap=gap)
    if res.status == STATUS_INFEASIBLE:
        notes = (diagnose_infeasibility(model, backend, time_limit_s)
                 if diagnose else [])
        raise InfeasibleError("superframe model is infeasible",
                              diagnostics=notes)
    if res.status == STATUS_NO_INCUMBENT:
        raise SolverLimitError(
            f"time limit {time_limit_s}s reached with no incumbent solution")
    return res


def write_lp(model: IlpModel, path) -> None:
    """CPLEX-LP text dump of a built model, for external debugging."""
    inf = np.inf
    lines = ["Maximize", " obj:"]
    terms = [f" {'+' if c >= 0 else '-'} {abs(c):g} {model.var_names[idx]}"
             for idx, c in enumerate(model.objective) if c != 0.0]
    lines[-1] += "".join(terms) if terms else " 0 x_dummy"
    lines.append("Subject To")
    for ridx in range(model.n_rows):
        expr = "".join(
            f" {'+' if v >= 0 else '-'} {abs(v):g} {model.var_names[c]}"
            for c, v in zip(model.row_cols[ridx], model.row_vals[ridx]))
        lo, hi = model.row_lower[ridx], model.row_upper[ridx]
        fam = model.row_family[ridx].replace("-", "_")
        if lo == hi:
            lines.append(f" c{ridx}_{fam}:{expr} = {lo:g}")
        else:
            if hi < inf:
                lines.append(f" c{ridx}a_{fam}:{expr} <= {hi:g}")
            if lo > -inf:
                lines.append(f" c{ridx}b_{fam}:{expr} >= {lo:g}")
    lines.append("Bounds")
    general, binary = [], []
    for idx in range(model.n_vars):
        lo, hi = model.lower[idx], model.upper[idx]
        if hi > 1.0:
            lines.append(f" {lo:g} <= {model.var_names[idx]} <= {hi:g}")
            general.append(model.var_names[idx])
        else:
            binary.append(model.var_names[idx])
    if binary:
        lines.append("Binary")
        lines.extend(f" {name}" for name in binary)
    if general:
        lines.append("General")
        lines.extend(f" {name}" for name in general)
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
