"""Two-phase dense-tableau simplex.

Problems are given as ``min c.x`` subject to row constraints ``A x (<=|=|>=) b``
and bounds ``lb <= x <= ub``.  Internally variables are shifted, reflected or
split so that all are nonnegative, finite upper bounds become rows, and each
row gets a slack and, where needed, an artificial variable.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"  # incumbent found but optimality not proven (limits)
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"  # limit hit without any answer


@dataclass(frozen=True)
class SolverParams:
    feastol: float = 1e-7
    inttol: float = 1e-6
    node_limit: int = 200_000
    time_limit: float = 600.0
    iteration_limit: int = 100_000

    def __post_init__(self):
        if min(self.feastol, self.inttol, self.node_limit, self.time_limit, self.iteration_limit) <= 0:
            raise ValueError("solver parameters must be positive")


@dataclass
class LpSolution:
    status: Status
    values: Optional[np.ndarray] = None
    objective: float = float("nan")
    proven: bool = True
    duals: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)


_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_BLAND_AFTER = 50
_REFACTOR_EVERY = 50


class _Tableau:
    def __init__(self, T: np.ndarray, basis: np.ndarray, params: SolverParams):
        self.T = T  # last row: reduced costs, last column: rhs (cost row rhs = -objective)
        self.basis = basis
        self.params = params
        self.iterations = 0
        self.A = T[:-1, :-1].copy()
        self.r = T[:-1, -1].copy()
        self.cost = np.zeros(T.shape[1] - 1)
        self.stale = 0  # pivots since the tableau was last rebuilt from the original rows

    def drop_rows(self, keep: np.ndarray) -> None:
        self.T = np.vstack([self.T[keep], self.T[-1:]])
        self.basis = self.basis[keep]
        self.A = self.A[keep]
        self.r = self.r[keep]

    def set_cost(self, cost: np.ndarray) -> None:
        self.cost = cost
        T, m = self.T, self.A.shape[0]
        cb = cost[self.basis]
        T[-1, :-1] = cost - cb @ T[:m, :-1]
        T[-1, self.basis] = 0.0
        T[-1, -1] = -cb @ T[:m, -1]

    def refactor(self) -> bool:
        """Rebuild the tableau from the original rows and the current basis."""
        m = self.A.shape[0]
        B = self.A[:, self.basis]
        try:
            body = np.linalg.solve(B, np.column_stack([self.A, self.r]))
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(body)):
            return False
        T = self.T
        T[:m] = body
        T[:m, self.basis] = np.eye(m)
        cb = self.cost[self.basis]
        T[-1, :-1] = self.cost - cb @ body[:, :-1]
        T[-1, self.basis] = 0.0
        T[-1, -1] = -cb @ body[:, -1]
        small = (T[:m, -1] < 0.0) & (T[:m, -1] > -self.params.feastol)
        T[:m, -1][small] = 0.0
        self.stale = 0
        return True

    def pivot(self, r: int, e: int) -> None:
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, e] = 0.0
        T[r, e] = 1.0
        self.basis[r] = e
        self.stale += 1

    def run(self, allowed: np.ndarray) -> str:
        """Pivot until optimal over the ``allowed`` columns; returns a status word."""
        T = self.T
        m = T.shape[0] - 1
        degenerate = 0
        while True:
            if self.iterations >= self.params.iteration_limit:
                return "limit"
            d = T[-1, :-1]
            cand = np.flatnonzero(allowed & (d < -_COST_TOL))
            if cand.size == 0:
                if self.stale == 0 or not self.refactor():
                    return "optimal"
                continue
            bland = degenerate >= _BLAND_AFTER
            e = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            col = T[:m, e]
            rhs = T[:m, -1]
            pos = np.flatnonzero(col > _PIVOT_TOL)
            if pos.size == 0:
                if self.stale == 0 or not self.refactor():
                    return "unbounded"
                continue
            # Harris two-pass ratio test
            relaxed = np.min((np.maximum(rhs[pos], 0.0) + self.params.feastol) / col[pos])
            ratios = np.maximum(rhs[pos], 0.0) / col[pos]
            ok = pos[ratios <= relaxed]
            if bland:
                ok_ratios = np.maximum(rhs[ok], 0.0) / col[ok]
                best = ok[ok_ratios <= ok_ratios.min() + 1e-12]
                r = int(best[np.argmin(self.basis[best])])
            else:
                r = int(ok[np.argmax(col[ok])])
            step = max(rhs[r], 0.0) / col[r]
            degenerate = degenerate + 1 if step <= 1e-12 else 0
            self.pivot(r, e)
            self.iterations += 1
            if self.iterations % _REFACTOR_EVERY == 0:
                self.refactor()
            neg = T[:m, -1] < 0.0
            T[:m, -1][neg & (T[:m, -1] > -self.params.feastol)] = 0.0


@dataclass
class _Standard:
    """Map between the user variables and the nonnegative standard columns."""

    offset: np.ndarray  # x = offset + M s
    M: np.ndarray
    n_s: int


def _standardize(lb, ub):
    n = lb.shape[0]
    cols = []  # (var, sign)
    offset = np.zeros(n)
    bound_rows = []  # (std column, upper)
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo == hi:
            offset[j] = lo
        elif np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    return _Standard(offset, M, len(cols)), bound_rows


def solve_lp_arrays(c, A, senses, b, lb, ub, params: SolverParams = SolverParams()) -> LpSolution:
    """Solve the LP given in dense array form."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.shape[0])
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return LpSolution(Status.INFEASIBLE, stats={"iterations": 0})
    std, bound_rows = _standardize(lb, ub)
    # column scaling: big-M columns otherwise make the bases badly conditioned
    w = np.max(np.abs(A @ std.M), axis=0, initial=0.0)
    w[w == 0.0] = 1.0
    std.M /= w
    bound_rows = [(k, hi * w[k]) for k, hi in bound_rows]
    As = A @ std.M
    rhs = b - A @ std.offset
    cs = c @ std.M
    rows, sense, r = [], [], []
    row_map = []  # original row index or -1 for bound rows, and the multiplier applied
    for i in range(As.shape[0]):
        rows.append(As[i])
        sense.append(senses[i])
        r.append(rhs[i])
        row_map.append(i)
    for k, hi in bound_rows:
        e = np.zeros(std.n_s)
        e[k] = 1.0
        rows.append(e)
        sense.append("<=")
        r.append(hi)
        row_map.append(-1)
    m = len(rows)
    Ar = np.array(rows).reshape(m, std.n_s)
    r = np.array(r, dtype=float)
    mult = np.ones(m)
    keep = []
    for i in range(m):
        if sense[i] == ">=":
            Ar[i] *= -1.0
            r[i] *= -1.0
            mult[i] = -1.0
            sense[i] = "<="
        scale = np.max(np.abs(Ar[i])) if std.n_s else 0.0
        if scale == 0.0:
            bad = (r[i] < -params.feastol) if sense[i] == "<=" else (abs(r[i]) > params.feastol)
            if bad:
                return LpSolution(Status.INFEASIBLE, stats={"iterations": 0})
            continue
        keep.append(i)
    Ar, r, mult = Ar[keep], r[keep], mult[keep]
    sense = [sense[i] for i in keep]
    row_map = [row_map[i] for i in keep]
    m = len(keep)
    slack_rows = [i for i in range(m) if sense[i] == "<="]
    n_sl = len(slack_rows)
    S = np.zeros((m, n_sl))
    for k, i in enumerate(slack_rows):
        S[i, k] = 1.0
    neg = r < 0
    Ar[neg] *= -1.0
    S[neg] *= -1.0
    r[neg] *= -1.0
    mult[neg] *= -1.0
    basis = np.full(m, -1)
    for k, i in enumerate(slack_rows):
        if S[i, k] > 0:
            basis[i] = std.n_s + k
    art_rows = np.flatnonzero(basis < 0)
    n_art = art_rows.size
    n_cols = std.n_s + n_sl + n_art
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :std.n_s] = Ar
    T[:m, std.n_s:std.n_s + n_sl] = S
    for k, i in enumerate(art_rows):
        T[i, std.n_s + n_sl + k] = 1.0
        basis[i] = std.n_s + n_sl + k
    T[:m, -1] = r
    is_art = np.zeros(n_cols, dtype=bool)
    is_art[std.n_s + n_sl:] = True
    tab = _Tableau(T, basis, params)

    def stop(status):
        return LpSolution(status, stats={"iterations": tab.iterations})

    if n_art:
        tab.set_cost(is_art.astype(float))
        word = tab.run(~is_art)
        if word != "optimal":  # phase 1 is bounded below, so anything else is numerical
            return stop(Status.LIMIT)
        art_basic = is_art[tab.basis]
        if np.max(tab.T[:m, -1][art_basic], initial=0.0) > params.feastol:
            return stop(Status.INFEASIBLE)
        # drive artificials out of the basis; rows where that is impossible are redundant
        drop = []
        for i in range(m):
            if is_art[tab.basis[i]]:
                row = np.abs(tab.T[i, :-1]) * (~is_art)
                j = int(np.argmax(row))
                if row[j] > 1e-7:
                    tab.pivot(i, j)
                else:
                    drop.append(i)
        if drop:
            keep_rows = np.setdiff1d(np.arange(m), drop)
            tab.drop_rows(keep_rows)
            mult = mult[keep_rows]
            row_map = [row_map[i] for i in keep_rows]
            m = len(keep_rows)
    # phase 2
    cost = np.zeros(n_cols)
    cost[:std.n_s] = cs
    tab.set_cost(cost)
    word = tab.run(~is_art)
    if word == "limit":
        return stop(Status.LIMIT)
    if word == "unbounded":
        return stop(Status.UNBOUNDED)
    # basic solution and duals from the original rows
    B = tab.A[:, tab.basis]
    try:
        zb = np.linalg.solve(B, tab.r)
        duals_std = np.linalg.solve(B.T, cost[tab.basis])
    except np.linalg.LinAlgError:
        zb, duals_std = tab.T[:m, -1].copy(), None
    z = np.zeros(n_cols)
    z[tab.basis] = np.maximum(zb, 0.0)
    x = std.offset + std.M @ z[:std.n_s]
    # judge the answer against every original row, including any dropped as redundant
    worst = _violation(A, senses, b, x, params.feastol)
    if not np.isfinite(worst) or worst > 0.0:
        out = stop(Status.LIMIT)
        out.stats["numerical_trouble"] = float(worst)
        return out
    duals = None
    if duals_std is not None:
        duals = np.zeros(A.shape[0])
        for k, i in enumerate(row_map):
            if i >= 0:
                duals[i] += duals_std[k] * mult[k]
    return LpSolution(Status.OPTIMAL, x, float(c @ x), duals=duals, stats={"iterations": tab.iterations})


def _violation(A, senses, b, x, feastol) -> float:
    """Largest row violation beyond a tolerance scaled to the row's magnitudes."""
    if A.shape[0] == 0:
        return 0.0
    ax = A @ x
    senses = np.asarray(senses)
    over = np.where(senses == "<=", ax - b, np.where(senses == ">=", b - ax, np.abs(ax - b)))
    tol = 10 * feastol + 1e-9 * np.abs(b) + 1e-12 * (np.abs(A) @ np.abs(x))
    return float(np.max(np.maximum(over - tol, 0.0)))


def solve_lp(problem, params: SolverParams = SolverParams()) -> LpSolution:
    """LP relaxation of a :class:`~ddstl.milp.MilpProblem` (integrality ignored)."""
    c, A, senses, b, lb, ub, _ = problem.to_arrays()
    return solve_lp_arrays(c, A, senses, b, lb, ub, params)
