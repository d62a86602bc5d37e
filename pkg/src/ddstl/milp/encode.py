"""MILP encodings of the data-driven dynamics, STL satisfaction and cost.

Variable naming (stable, used in LP export):

* ``alpha_<j>``            Hankel column weights (free)
* ``u_<t>_<i>``, ``y_<t>_<i>``  future inputs/outputs, ``t = 0..L``, channel ``i`` from 1
* ``x_<t>_<i>``            states of the model-based variant
* ``zp<k>_<t>``            binary truth of the ``k``-th predicate node at step ``t``
* ``z<k>_<t>``             [0, 1] truth of composite node ``k`` at step ``t``
* ``zu<k>_<t>``            [0, 1] truth of the unbounded-until chain of until node ``k``
* ``s_u_<t>_<i>``, ``s_y_<t>_<i>``  absolute values entering the cost

Formula nodes are numbered in preorder.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..behavior import HankelSystem
from ..lti import StateSpaceModel, Trajectory
from ..numerics import DimensionError
from ..stl.formula import Always, And, Const, Eventually, Formula, Not, Or, Predicate, Until, horizon
from .model import LinExpr, MilpProblem, ProblemBuilder, VarKind


@dataclass(frozen=True)
class EncodingParams:
    """Big-M constant and strictness margin for predicate encodings."""

    big_m: float = 1e4
    eps: float = 1e-6
    predicate_overrides: Mapping = field(default_factory=dict)  # Predicate -> (M, eps)
    time_overrides: Mapping = field(default_factory=dict)  # t -> (M, eps)

    def __post_init__(self):
        for m, e in [(self.big_m, self.eps), *self.predicate_overrides.values(), *self.time_overrides.values()]:
            if not (m > 0 and e > 0 and e < m):
                raise ValueError(f"need big_m > eps > 0, got big_m={m}, eps={e}")

    def at(self, pred: Predicate, t: int) -> tuple[float, float]:
        if pred in self.predicate_overrides:
            return self.predicate_overrides[pred]
        if t in self.time_overrides:
            return self.time_overrides[t]
        return self.big_m, self.eps


@dataclass(frozen=True)
class PredicateInstance:
    predicate: Predicate
    t: int
    var: int
    expr: LinExpr
    big_m: float
    eps: float = 0.0


@dataclass
class Handles:
    u: np.ndarray  # (L+1, n_u) variable indices
    y: np.ndarray  # (L+1, n_y) variable indices
    alpha: list = field(default_factory=list)
    alpha_map: Optional[np.ndarray] = None  # reduced form: alpha = alpha_offset + alpha_map @ beta
    alpha_offset: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None
    root: object = True  # variable index or a constant bool
    atoms: list = field(default_factory=list)
    cost_aux: list = field(default_factory=list)

    def outputs(self) -> list:
        return [[LinExpr.var(int(j)) for j in row] for row in self.y]


def _box(box, n_u: int) -> Optional[np.ndarray]:
    if box is None:
        return None
    b = np.array(box, dtype=float)
    if b.ndim == 1:
        b = np.tile(b.reshape(1, 2), (n_u, 1))
    if b.shape != (n_u, 2) or np.any(b[:, 0] > b[:, 1]):
        raise ValueError("input box must give [lo, hi] per input channel")
    return b


def _io_vars(pb: ProblemBuilder, L: int, n_u: int, n_y: int, box) -> tuple[np.ndarray, np.ndarray]:
    bounds = _box(box, n_u)
    u = np.empty((L + 1, n_u), dtype=int)
    y = np.empty((L + 1, n_y), dtype=int)
    for t in range(L + 1):
        for i in range(n_u):
            lo, hi = (-np.inf, np.inf) if bounds is None else bounds[i]
            u[t, i] = pb.add_var(f"u_{t}_{i + 1}", lb=lo, ub=hi)
        for i in range(n_y):
            y[t, i] = pb.add_var(f"y_{t}_{i + 1}")
    return u, y


def _future_disturbance(d_future, L: int, n_d: int) -> Optional[np.ndarray]:
    if n_d == 0:
        return None
    if d_future is None:
        raise DimensionError("the system has disturbance inputs; pass their future values")
    d = np.array(d_future, dtype=float).reshape(-1, n_d)
    if d.shape[0] < L + 1:
        raise DimensionError(f"need {L + 1} future disturbance samples, got {d.shape[0]}")
    return d[:L + 1]


DICTIONARY_FORMS = ("columns", "reduced")


def _reduce(H: np.ndarray, pinned: np.ndarray, values: np.ndarray, tol: float):
    """Parametrize ``{H a : (H a)[pinned] = values}`` as ``Q (g0 + N b)``.

    ``Q`` is an orthonormal basis of the column span of ``H``; ``N`` spans the
    directions that leave the pinned entries unchanged.  Returns ``Q``, ``g0``,
    ``N`` and the map ``R`` with ``a = R g`` for a weighting of the columns.
    """
    U, sv, Vt = np.linalg.svd(H, full_matrices=False)
    r = int(np.count_nonzero(sv > tol * (sv[0] if sv.size else 1.0)))
    Q = U[:, :r]
    R = Vt[:r].T / sv[:r]
    P = Q[pinned]
    Up, sp, Vpt = np.linalg.svd(P, full_matrices=True)
    rp = int(np.count_nonzero(sp > tol * (sp[0] if sp.size else 1.0)))
    g0 = Vpt[:rp].T @ ((Up[:, :rp].T @ values) / sp[:rp])
    N = Vpt[rp:].T
    return Q, g0, N, R


def encode_dynamics(pb: ProblemBuilder, sys: HankelSystem, w_ini: Trajectory, L: int, box=None,
                    d_future=None, form: str = "columns", tol: float = 1e-9) -> Handles:
    """Add ``[Hu; Hy] alpha = [u_ini; u; y_ini; y]`` with the initialization as constants.

    Introduces one free ``alpha`` per Hankel column and the future input and
    output variables; returns their handles.

    ``form="reduced"`` solves the pinned rows (initialization and known
    disturbances) in closed form first.  The Hankel columns are replaced by an
    orthonormal basis of their span, and the pins by a particular solution
    plus a null-space basis, with one free ``beta`` per null direction.
    Singular values below ``tol`` relative count as zero.  The trajectories
    described are the same, but the rows are far better conditioned when the
    data are nearly collinear.  ``Handles.alpha_map`` and ``alpha_offset`` map
    ``beta`` back to a column weighting.
    """
    if form not in DICTIONARY_FORMS:
        raise ValueError(f"unknown dictionary form {form!r}; expected one of {DICTIONARY_FORMS}")
    t_ini = w_ini.length
    if sys.depth != t_ini + L + 1:
        raise DimensionError(f"dictionary depth {sys.depth} != t_ini + L + 1 = {t_ini + L + 1}")
    if w_ini.n_u != sys.n_u or w_ini.n_y != sys.n_y or w_ini.n_d != sys.n_d:
        raise DimensionError("initialization channels do not match the data")
    d = _future_disturbance(d_future, L, sys.n_d)
    targets: list = []
    u, y = _io_vars(pb, L, sys.n_u, sys.n_y, box)
    for k in range(sys.depth):
        for i in range(sys.n_in):
            if k < t_ini:
                targets.append(float(w_ini.inputs[k, i]))
            elif i < sys.n_u:
                targets.append(int(u[k - t_ini, i]))
            else:
                targets.append(float(d[k - t_ini, i - sys.n_u]))
    for k in range(sys.depth):
        for i in range(sys.n_y):
            targets.append(float(w_ini.y[k, i]) if k < t_ini else int(y[k - t_ini, i]))
    H = sys.stacked
    const = np.zeros(H.shape[0])
    alpha_map = alpha_offset = None
    if form == "reduced":
        pinned = np.array([r for r, t in enumerate(targets) if not isinstance(t, int)], dtype=int)
        values = np.array([targets[r] for r in pinned], dtype=float)
        Q, g0, N, R = _reduce(H, pinned, values, tol)
        const = Q @ g0
        H = Q @ N
        alpha_map, alpha_offset = R @ N, R @ g0
        alpha = [pb.add_var(f"beta_{j}") for j in range(N.shape[1])]
        # pinned rows hold by construction; keep only the rows tied to variables
        rows = [r for r, t in enumerate(targets) if isinstance(t, int)]
    else:
        alpha = [pb.add_var(f"alpha_{j}") for j in range(sys.columns)]
        rows = range(len(targets))
    for r in rows:
        target = targets[r]
        expr = LinExpr({alpha[j]: H[r, j] for j in np.flatnonzero(H[r])}, float(const[r]))
        if isinstance(target, int):
            expr = expr - LinExpr.var(target)
            pb.add_constraint(expr, "=", 0.0, name=f"hankel_{r}")
        else:
            pb.add_constraint(expr, "=", target, name=f"hankel_{r}")
    return Handles(u=u, y=y, alpha=alpha, alpha_map=alpha_map, alpha_offset=alpha_offset)


def encode_state_space(pb: ProblemBuilder, model: StateSpaceModel, w_ini: Trajectory, L: int, box=None,
                       d_future=None) -> Handles:
    """Model-based replacement for :func:`encode_dynamics`.

    States ``x_0 .. x_{t_ini+L}`` are free variables tied by the state recursion;
    the initialization samples enter as constants.
    """
    t_ini = w_ini.length
    if w_ini.n_u != model.n_u or w_ini.n_y != model.n_y or w_ini.n_d != model.n_d:
        raise DimensionError("initialization channels do not match the model")
    d = _future_disturbance(d_future, L, model.n_d)
    u, y = _io_vars(pb, L, model.n_u, model.n_y, box)
    n = t_ini + L + 1
    x = np.array([[pb.add_var(f"x_{t}_{i + 1}") for i in range(model.n_x)] for t in range(n)], dtype=int)

    def u_at(k):
        if k < t_ini:
            return [LinExpr.lift(float(v)) for v in w_ini.u[k]]
        return [LinExpr.var(int(j)) for j in u[k - t_ini]]

    def d_at(k):
        if model.n_d == 0:
            return []
        return list(w_ini.d[k]) if k < t_ini else list(d[k - t_ini])

    for k in range(n):
        uk = u_at(k)
        for i in range(model.n_y):
            e = LinExpr({int(x[k, j]): model.C[i, j] for j in range(model.n_x)})
            for m in range(model.n_u):
                e = e + model.D[i, m] * uk[m]
            if k < t_ini:
                pb.add_constraint(e, "=", float(w_ini.y[k, i]), name=f"out_{k}_{i + 1}")
            else:
                pb.add_constraint(e - LinExpr.var(int(y[k - t_ini, i])), "=", 0.0, name=f"out_{k}_{i + 1}")
        if k + 1 < n:
            dk = d_at(k)
            for i in range(model.n_x):
                e = LinExpr({int(x[k, j]): model.A[i, j] for j in range(model.n_x)})
                for m in range(model.n_u):
                    e = e + model.B[i, m] * uk[m]
                for m, dv in enumerate(dk):
                    e = e + model.Bd[i, m] * float(dv)
                pb.add_constraint(e - LinExpr.var(int(x[k + 1, i])), "=", 0.0, name=f"state_{k}_{i + 1}")
    return Handles(u=u, y=y, states=x)


class _FormulaEncoder:
    def __init__(self, pb: ProblemBuilder, outputs, L: int, params: EncodingParams, schedules):
        self.pb = pb
        self.outputs = [[LinExpr.lift(v) for v in row] for row in outputs]
        self.L = L
        self.params = params
        self.schedules = schedules
        self.cache: dict = {}
        self.atoms: list[PredicateInstance] = []
        self.ids: dict = {}

    def number(self, phi: Formula) -> None:
        def walk(f):
            if id(f) in self.ids:
                return
            self.ids[id(f)] = len(self.ids)
            for c in _children(f):
                walk(c)
        walk(phi)

    def window(self, t, a, b):
        return range(min(t + a, self.L), min(t + b, self.L) + 1)

    def unit(self, node, t, prefix="z"):
        return self.pb.add_var(f"{prefix}{self.ids[id(node)]}_{t}", VarKind.UNIT)

    def conj(self, node, t, parts, prefix="z"):
        if any(p is False for p in parts):
            return False
        parts = [p for p in parts if p is not True]
        if not parts:
            return True
        if len(parts) == 1:
            return parts[0]
        z = self.unit(node, t, prefix)
        for p in parts:
            self.pb.add_constraint(LinExpr.var(z) - LinExpr.var(p), "<=", 0.0)
        s = LinExpr({})
        for p in parts:
            s = s + LinExpr.var(p)
        self.pb.add_constraint(LinExpr.var(z) - s, ">=", 1.0 - len(parts))
        return z

    def disj(self, node, t, parts, prefix="z"):
        if any(p is True for p in parts):
            return True
        parts = [p for p in parts if p is not False]
        if not parts:
            return False
        if len(parts) == 1:
            return parts[0]
        z = self.unit(node, t, prefix)
        s = LinExpr({})
        for p in parts:
            self.pb.add_constraint(LinExpr.var(z) - LinExpr.var(p), ">=", 0.0)
            s = s + LinExpr.var(p)
        self.pb.add_constraint(LinExpr.var(z) - s, "<=", 0.0)
        return z

    def enc(self, phi: Formula, t: int):
        key = (id(phi), t)
        if key not in self.cache:
            self.cache[key] = self._enc(phi, t)
        return self.cache[key]

    def _enc(self, phi, t):
        if isinstance(phi, Const):
            return phi.value
        if isinstance(phi, Predicate):
            return self.predicate(phi, t)
        if isinstance(phi, Not):
            c = self.enc(phi.child, t)
            if isinstance(c, bool):
                return not c
            z = self.unit(phi, t)
            self.pb.add_constraint(LinExpr.var(z) + LinExpr.var(c), "=", 1.0)
            return z
        if isinstance(phi, And):
            return self.conj(phi, t, self.each(phi.children, t, False))
        if isinstance(phi, Or):
            return self.disj(phi, t, self.each(phi.children, t, True))
        if isinstance(phi, Always):
            return self.conj(phi, t, [self.enc(phi.child, i) for i in self.window(t, phi.a, phi.b)])
        if isinstance(phi, Eventually):
            return self.disj(phi, t, [self.enc(phi.child, i) for i in self.window(t, phi.a, phi.b)])
        if isinstance(phi, Until):
            # left on [t, t+a], right somewhere in [t+a, t+b], and the chain
            # "left until right" starting at t+a
            head = [self.enc(phi.left, i) for i in self.window(t, 0, phi.a)]
            target = [self.enc(phi.right, i) for i in self.window(t, phi.a, phi.b)]
            chain = self.until_chain(phi, min(t + phi.a, self.L))
            return self.conj(phi, t, [*head, self.disj_tmp(phi, t, target), chain])
        raise TypeError(f"not a formula: {phi!r}")

    def each(self, children, t, absorbing: bool) -> list:
        # stop at the first child that decides the operator outright
        out = []
        for c in children:
            v = self.enc(c, t)
            out.append(v)
            if v is absorbing:
                break
        return out

    def disj_tmp(self, phi, t, parts):
        # the eventually-part of an until gets its own name prefix
        return self.disj(phi, t, parts, prefix="ze")

    def until_chain(self, phi: Until, s: int):
        """Truth of ``left U right`` from step ``s`` with a closed window.

        ``U_s = left_s and (right_s or U_{s+1})`` and ``U_L = left_L and right_L``.
        """
        key = ("U", id(phi), s)
        if key in self.cache:
            return self.cache[key]
        left = self.enc(phi.left, s)
        right = self.enc(phi.right, s)
        if s == self.L:
            v = self.conj(phi, s, [left, right], prefix="zu")
        else:
            nxt = self.until_chain(phi, s + 1)
            inner = self.disj(phi, s, [right, nxt], prefix="zv")
            v = self.conj(phi, s, [left, inner], prefix="zu")
        self.cache[key] = v
        return v

    def predicate(self, p: Predicate, t: int):
        if p.n_y != len(self.outputs[t]):
            raise DimensionError(f"predicate over {p.n_y} outputs, system has {len(self.outputs[t])}")
        expr = LinExpr.lift(p.shift(t, self.schedules))
        for k, c in enumerate(p.coeffs):
            if c != 0.0:
                expr = expr + c * self.outputs[t][k]
        M, eps = self.params.at(p, t)
        if expr.is_const():
            # schedule-only predicates are decided at build time
            if expr.const >= eps:
                return True
            if expr.const <= -eps:
                return False
        z = self.pb.add_var(f"zp{self.ids[id(p)]}_{t}", VarKind.BINARY)
        # sigma <= M z - eps ;  -sigma <= M (1 - z) - eps
        self.pb.add_constraint(expr - M * LinExpr.var(z), "<=", -eps)
        self.pb.add_constraint(-expr + M * LinExpr.var(z), "<=", M - eps)
        self.atoms.append(PredicateInstance(p, t, z, expr, M, eps))
        return z


def _children(f):
    if isinstance(f, Not):
        return (f.child,)
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, (Always, Eventually)):
        return (f.child,)
    if isinstance(f, Until):
        return (f.left, f.right)
    return ()


def encode_formula(pb: ProblemBuilder, phi: Formula, outputs, L: int, params: EncodingParams = EncodingParams(),
                   schedules=None):
    """Encode satisfaction of ``phi`` at step 0.

    ``outputs[t][i]`` is the expression (variable index wrapped in
    :class:`LinExpr`, or a number) for output ``i`` at step ``t``.  Returns the
    root truth variable, or a bool when the formula folds to a constant, and
    the list of predicate instances.
    """
    if len(outputs) != L + 1:
        raise DimensionError(f"expected {L + 1} output samples, got {len(outputs)}")
    if horizon(phi) > L:
        raise ValueError(f"formula needs horizon {horizon(phi)}, only L = {L} available")
    enc = _FormulaEncoder(pb, outputs, L, params, schedules)
    enc.number(phi)
    root = enc.enc(phi, 0)
    return root, enc.atoms


COST_KINDS = ("input_norm", "output_norm", "mixed")


def encode_cost(pb: ProblemBuilder, kind: str, u_vars, y_vars, q=None, r=None) -> list[int]:
    """Weighted 1-norm of the future inputs and/or outputs.

    ``q`` and ``r`` are per-channel weights for outputs and inputs (``mixed``
    only).  Each weighted variable ``v`` gets ``s >= v, s >= -v`` and ``s`` enters
    the objective.
    """
    u_vars = np.asarray(u_vars, dtype=int)
    y_vars = np.asarray(y_vars, dtype=int)
    n_u, n_y = u_vars.shape[1], y_vars.shape[1]
    if kind == "input_norm":
        r, q = np.ones(n_u), np.zeros(n_y)
    elif kind == "output_norm":
        r, q = np.zeros(n_u), np.ones(n_y)
    elif kind == "mixed":
        q = np.zeros(n_y) if q is None else np.broadcast_to(np.asarray(q, dtype=float), (n_y,))
        r = np.zeros(n_u) if r is None else np.broadcast_to(np.asarray(r, dtype=float), (n_u,))
    else:
        raise ValueError(f"unknown cost kind {kind!r}; expected one of {COST_KINDS}")
    if np.any(q < 0) or np.any(r < 0):
        raise ValueError("cost weights must be nonnegative")
    aux = []
    for tag, vars_, w in (("u", u_vars, r), ("y", y_vars, q)):
        for t in range(vars_.shape[0]):
            for i in range(vars_.shape[1]):
                if w[i] == 0.0:
                    continue
                j = int(vars_[t, i])
                s = pb.add_var(f"s_{tag}_{t}_{i + 1}", lb=0.0)
                pb.add_constraint(LinExpr.var(s) - LinExpr.var(j), ">=", 0.0)
                pb.add_constraint(LinExpr.var(s) + LinExpr.var(j), ">=", 0.0)
                pb.add_objective(s, float(w[i]))
                aux.append(s)
    return aux


@dataclass(frozen=True)
class CostSpec:
    kind: str = "input_norm"
    q: Optional[Sequence[float]] = None
    r: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}; expected one of {COST_KINDS}")


def _finish(pb: ProblemBuilder, h: Handles, phi: Formula, cost: CostSpec, params: EncodingParams, schedules,
            L: int) -> MilpProblem:
    root, atoms = encode_formula(pb, phi, h.outputs(), L, params, schedules)
    h.root, h.atoms = root, atoms
    if root is False:
        pb.add_constraint(LinExpr({}), ">=", 1.0, name="sat")
    elif root is not True:
        pb.add_constraint(LinExpr.var(root), "=", 1.0, name="sat")
    h.cost_aux = encode_cost(pb, cost.kind, h.u, h.y, cost.q, cost.r)
    pb.metadata["handles"] = h
    pb.metadata["L"] = L
    return pb.build()


def assemble_problem(sys: HankelSystem, w_ini: Trajectory, phi: Formula, cost: CostSpec = CostSpec(), box=None,
                     params: EncodingParams = EncodingParams(), d_future=None, schedules=None,
                     form: str = "columns") -> MilpProblem:
    """The full synthesis MILP for the data-driven system description."""
    L = sys.depth - w_ini.length - 1
    if L < 0:
        raise DimensionError("initialization longer than the dictionary depth")
    pb = ProblemBuilder()
    pb.metadata.update(t_ini=w_ini.length, n_u=sys.n_u, n_y=sys.n_y, n_d=sys.n_d, dynamics="hankel")
    h = encode_dynamics(pb, sys, w_ini, L, box, d_future, form)
    return _finish(pb, h, phi, cost, params, schedules, L)


def assemble_model_problem(model: StateSpaceModel, w_ini: Trajectory, phi: Formula, L: int,
                           cost: CostSpec = CostSpec(), box=None, params: EncodingParams = EncodingParams(),
                           d_future=None, schedules=None) -> MilpProblem:
    """Same problem with the exact state recursion in place of the Hankel constraints."""
    pb = ProblemBuilder()
    pb.metadata.update(t_ini=w_ini.length, n_u=model.n_u, n_y=model.n_y, n_d=model.n_d, dynamics="state_space")
    h = encode_state_space(pb, model, w_ini, L, box, d_future)
    return _finish(pb, h, phi, cost, params, schedules, L)
