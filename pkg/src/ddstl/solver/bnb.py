"""Best-first branch-and-bound over binary variables."""
from __future__ import annotations

import heapq
import time

import numpy as np

from .simplex import LpSolution, SolverParams, Status, solve_lp_arrays


def solve_milp(problem, params: SolverParams = SolverParams()) -> LpSolution:
    """Minimize a :class:`~ddstl.milp.MilpProblem` with binary variables.

    Nodes are explored in order of (parent LP bound, creation order); the most
    fractional binary is branched on, lowest index first among ties.  Every
    integral LP point is re-solved with its binaries fixed to the rounded
    values before it becomes the incumbent, so reported solutions are exactly
    integral.
    """
    c, A, senses, b, lb0, ub0, is_bin = problem.to_arrays()
    return solve_milp_arrays(c, A, senses, b, lb0, ub0, is_bin, params)


def solve_milp_arrays(c, A, senses, b, lb0, ub0, is_bin, params: SolverParams = SolverParams()) -> LpSolution:
    start = time.perf_counter()
    lb0 = np.array(lb0, dtype=float)
    ub0 = np.array(ub0, dtype=float)
    bins = np.flatnonzero(is_bin)
    lb0[bins] = np.ceil(np.maximum(lb0[bins], 0.0) - params.inttol)
    ub0[bins] = np.floor(np.minimum(ub0[bins], 1.0) + params.inttol)
    stats = {"nodes": 0, "lp_iterations": 0, "incumbents": [], "polish_failures": 0}
    A = np.asarray(A, dtype=float).reshape(-1, lb0.shape[0])
    b = np.asarray(b, dtype=float)
    if bins.size and not _implied_binary_bounds(A, senses, b, lb0, ub0, is_bin, params.inttol):
        stats["seconds"] = time.perf_counter() - start
        return LpSolution(Status.INFEASIBLE, stats=stats)
    stats["fixed_by_rows"] = int(np.count_nonzero(lb0[bins] == ub0[bins]))
    incumbent, inc_obj, inc_duals = None, np.inf, None
    heap = [(-np.inf, 0, ())]
    counter = 1
    limited = False

    def lp(fix):
        lb, ub = lb0.copy(), ub0.copy()
        for j, v in fix:
            lb[j] = ub[j] = v
        sol = solve_lp_arrays(c, A, senses, b, lb, ub, params)
        stats["lp_iterations"] += sol.stats.get("iterations", 0)
        return sol

    while heap:
        if stats["nodes"] >= params.node_limit or time.perf_counter() - start > params.time_limit:
            limited = True
            break
        bound, _, fix = heapq.heappop(heap)
        if bound >= inc_obj - _gap(inc_obj):
            continue
        stats["nodes"] += 1
        sol = lp(fix)
        if sol.status is Status.INFEASIBLE:
            continue
        if sol.status is Status.UNBOUNDED:
            if not fix:
                stats["seconds"] = time.perf_counter() - start
                return LpSolution(Status.UNBOUNDED, stats=stats)
            continue
        if sol.status is Status.LIMIT:
            limited = True
            stats["lp_failures"] = stats.get("lp_failures", 0) + 1
            stats["lp_failure_detail"] = dict(sol.stats)
            continue
        if sol.objective >= inc_obj - _gap(inc_obj):
            continue
        x = sol.values
        frac = np.abs(x[bins] - np.round(x[bins]))
        if bins.size == 0 or frac.max() <= params.inttol:
            fixed = tuple((int(j), float(np.round(x[j]))) for j in bins)
            if bins.size:
                sol = lp(fixed)
                if sol.status is not Status.OPTIMAL:
                    stats["polish_failures"] += 1
                    continue
            if sol.objective < inc_obj:
                incumbent, inc_obj, inc_duals = sol.values, sol.objective, sol.duals
                stats["incumbents"].append(inc_obj)
            continue
        k = int(np.argmax(frac))
        j = int(bins[k])
        for v in (0.0, 1.0):
            heapq.heappush(heap, (sol.objective, counter, fix + ((j, v),)))
            counter += 1
    stats["seconds"] = time.perf_counter() - start
    stats["open_nodes"] = len(heap)
    if incumbent is None:
        if limited:
            return LpSolution(Status.LIMIT, proven=False, stats=stats)
        return LpSolution(Status.INFEASIBLE, stats=stats)
    if limited:
        return LpSolution(Status.FEASIBLE, incumbent, inc_obj, proven=False, duals=inc_duals, stats=stats)
    return LpSolution(Status.OPTIMAL, incumbent, inc_obj, duals=inc_duals, stats=stats)


def _implied_binary_bounds(A, senses, b, lb, ub, is_bin, inttol, passes: int = 50) -> bool:
    """Fix binaries that a row with no other free variable decides (in place).

    Returns False when some row cannot be met by either value.
    """
    is_bin = np.asarray(is_bin, dtype=bool)
    senses = np.asarray(senses)
    for _ in range(passes):
        free = (lb < ub) & (A != 0.0)
        single = np.flatnonzero(free.sum(axis=1) == 1)
        changed = False
        for i in single:
            j = int(np.flatnonzero(free[i])[0])
            if not is_bin[j]:
                continue
            row = A[i]
            others = np.flatnonzero((row != 0.0) & (np.arange(row.size) != j))
            q = (b[i] - row[others] @ lb[others]) / row[j]
            # a_ij x_j (sense) rest  ->  x_j >= q or x_j <= q
            upper = (senses[i] == "<=") == (row[j] > 0)
            lo, hi = lb[j], ub[j]
            if senses[i] == "=" or not upper:
                if q > inttol:
                    lo = 1.0
                if q > 1.0 + inttol:
                    return False
            if senses[i] == "=" or upper:
                if q < 1.0 - inttol:
                    hi = 0.0
                if q < -inttol:
                    return False
            if lo > hi:
                return False
            if (lo, hi) != (lb[j], ub[j]):
                lb[j], ub[j] = lo, hi
                changed = True
        if not changed:
            break
    return True


def _gap(obj: float) -> float:
    if not np.isfinite(obj):
        return 0.0
    return 1e-9 * max(1.0, abs(obj))
