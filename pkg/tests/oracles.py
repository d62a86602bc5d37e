"""Independent reference implementations used as test oracles.

Nothing here imports the code under test except the formula data classes,
which are plain containers.
"""
from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from ddstl.stl.formula import Always, And, Const, Eventually, Not, Or, Predicate, Until


# -- linear algebra ------------------------------------------------------------

def triple_loop_matmul(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            s = 0.0
            for k in range(a.shape[1]):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


def hankel_by_index(z, depth):
    """Entry (i, j) is sample ``j + i // n`` of channel ``i % n``."""
    z = np.asarray(z, float)
    if z.ndim == 1:
        z = z[:, None]
    n = z.shape[1]
    cols = z.shape[0] - depth + 1
    H = np.empty((depth * n, cols))
    for i in range(depth * n):
        for j in range(cols):
            H[i, j] = z[j + i // n, i % n]
    return H


def simulate_loop(A, B, C, x0, u, Bd=None, d=None):
    """Plain state recursion, one sample at a time."""
    A, B, C = (np.asarray(m, float) for m in (A, B, C))
    x = np.asarray(x0, float).copy()
    u = np.asarray(u, float).reshape(len(u), -1)
    ys = []
    for k in range(u.shape[0]):
        ys.append(C @ x)
        x = A @ x + B @ u[k]
        if Bd is not None:
            x = x + np.asarray(Bd, float) @ np.asarray(d[k], float)
    return np.array(ys)


# -- STL -----------------------------------------------------------------------

def truth_table(phi, y, schedules=None):
    """Bottom-up boolean table ``sat[t]`` for every ``t`` in ``[0, L]``.

    Quantifiers are expanded into explicit index loops with the clamp
    ``min(., L)``.  Until holds at ``t`` when some ``t'`` in the clamped window
    has the right operand and the left operand holds on every step of
    ``[t, t']``.
    """
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    L = y.shape[0] - 1
    T = range(L + 1)

    def clamp(v):
        return v if v < L else L

    def go(f):
        if isinstance(f, Const):
            return [f.value] * (L + 1)
        if isinstance(f, Predicate):
            out = []
            for t in T:
                v = f.offset
                for k, c in enumerate(f.coeffs):
                    v += c * y[t, k]
                for name, c in f.sched:
                    v += c * schedules[name][t]
                out.append(v > 0)
            return out
        if isinstance(f, Not):
            return [not v for v in go(f.child)]
        if isinstance(f, And):
            tabs = [go(c) for c in f.children]
            return [all(tab[t] for tab in tabs) for t in T]
        if isinstance(f, Or):
            tabs = [go(c) for c in f.children]
            return [any(tab[t] for tab in tabs) for t in T]
        if isinstance(f, (Always, Eventually)):
            tab = go(f.child)
            out = []
            for t in T:
                vals = [tab[i] for i in range(clamp(t + f.a), clamp(t + f.b) + 1)]
                out.append(all(vals) if isinstance(f, Always) else any(vals))
            return out
        if isinstance(f, Until):
            lt, rt = go(f.left), go(f.right)
            out = []
            for t in T:
                ok = False
                for tp in range(clamp(t + f.a), clamp(t + f.b) + 1):
                    if rt[tp] and all(lt[s] for s in range(t, tp + 1)):
                        ok = True
                out.append(ok)
            return out
        raise TypeError(f)

    return go(phi)


def until_decomposition(lt, rt, a, b, t, L):
    """``G[0,a] left and F[a,b] right and F[a,a](left U right)`` at step ``t``.

    The unbounded until is read with the same closed convention as the
    bounded one (left must also hold where right is met) and runs to ``L``.
    """
    def clamp(v):
        return min(v, L)

    g = all(lt[i] for i in range(clamp(t), clamp(t + a) + 1))
    f = any(rt[i] for i in range(clamp(t + a), clamp(t + b) + 1))
    s0 = clamp(t + a)
    u = any(rt[s] and all(lt[k] for k in range(s0, s + 1)) for s in range(s0, L + 1))
    return g and f and u


def horizon_rules(f):
    """The six length rules, with eventually rewritten as ``true U[a,b] f``."""
    if isinstance(f, (Const, Predicate)):
        return 0
    if isinstance(f, Not):
        return horizon_rules(f.child)
    if isinstance(f, (And, Or)):
        out = horizon_rules(f.children[0])
        for c in f.children[1:]:
            out = max(out, horizon_rules(c))
        return out
    if isinstance(f, Always):
        return horizon_rules(f.child) + f.b
    if isinstance(f, Eventually):
        return horizon_rules(Until(f.a, f.b, Const(True), f.child))
    if isinstance(f, Until):
        return max(horizon_rules(f.left), horizon_rules(f.right)) + f.b
    raise TypeError(f)


def furthest_read(f, t=0):
    """Largest time index an unclamped evaluation at ``t`` can touch."""
    if isinstance(f, Const):
        return t
    if isinstance(f, Predicate):
        return t
    if isinstance(f, Not):
        return furthest_read(f.child, t)
    if isinstance(f, (And, Or)):
        return max(furthest_read(c, t) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return max(furthest_read(f.child, i) for i in range(t + f.a, t + f.b + 1))
    if isinstance(f, Until):
        return max(max(furthest_read(f.left, i), furthest_read(f.right, i)) for i in range(t, t + f.b + 1))
    raise TypeError(f)


# -- random formulas -------------------------------------------------------------

def random_predicate(rng, n_y=1):
    """Integer coefficients, half-integer offset: margin 1/2 on integer traces."""
    coeffs = rng.integers(-2, 3, size=n_y)
    if not coeffs.any():
        coeffs[rng.integers(n_y)] = 1
    return Predicate(tuple(float(c) for c in coeffs), float(rng.integers(-4, 5)) + 0.5)


def random_formula(rng, depth=3, max_b=4, n_y=1):
    if depth == 0 or rng.random() < 0.2:
        return random_predicate(rng, n_y)
    kind = rng.choice(["not", "and", "or", "G", "F", "U"])
    sub = lambda: random_formula(rng, depth - 1, max_b, n_y)  # noqa: E731
    if kind == "not":
        return Not(sub())
    if kind in ("and", "or"):
        kids = tuple(sub() for _ in range(int(rng.integers(2, 4))))
        return And(kids) if kind == "and" else Or(kids)
    a = int(rng.integers(0, max_b + 1))
    b = int(rng.integers(a, max_b + 1))
    if kind == "G":
        return Always(a, b, sub())
    if kind == "F":
        return Eventually(a, b, sub())
    return Until(a, b, sub(), sub())


def formula_depth(f):
    if isinstance(f, (Const, Predicate)):
        return 0
    if isinstance(f, Not):
        return 1 + formula_depth(f.child)
    if isinstance(f, (And, Or)):
        return 1 + max(formula_depth(c) for c in f.children)
    if isinstance(f, (Always, Eventually)):
        return 1 + formula_depth(f.child)
    return 1 + max(formula_depth(f.left), formula_depth(f.right))


# -- optimization ----------------------------------------------------------------

def _linprog(c, A, senses, b, lb, ub):
    A = np.asarray(A, float)
    senses = list(senses)
    ub_rows = [i for i, s in enumerate(senses) if s == "<="]
    lb_rows = [i for i, s in enumerate(senses) if s == ">="]
    eq_rows = [i for i, s in enumerate(senses) if s == "="]
    A_ub = np.vstack([A[ub_rows], -A[lb_rows]]) if ub_rows or lb_rows else None
    b_ub = np.r_[np.asarray(b)[ub_rows], -np.asarray(b)[lb_rows]] if A_ub is not None else None
    A_eq = A[eq_rows] if eq_rows else None
    b_eq = np.asarray(b)[eq_rows] if eq_rows else None
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(lb, ub)]
    return linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")


def lp_reference(c, A, senses, b, lb, ub):
    """``(status, objective)`` from scipy's HiGHS: status is optimal/infeasible/unbounded."""
    res = _linprog(c, A, senses, b, lb, ub)
    if res.status == 0:
        return "optimal", float(res.fun)
    if res.status == 2:
        return "infeasible", None
    if res.status == 3:
        return "unbounded", None
    raise RuntimeError(res.message)


def enumerate_milp(c, A, senses, b, lb, ub, is_bin):
    """Best objective over all 0/1 fixings of the binaries, one LP each."""
    bins = np.flatnonzero(is_bin)
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        lo, hi = np.array(lb, float), np.array(ub, float)
        lo[bins] = hi[bins] = bits
        status, obj = lp_reference(c, A, senses, b, lo, hi)
        if status == "unbounded":
            return "unbounded", None
        if status == "optimal" and (best is None or obj < best):
            best = obj
    return ("infeasible", None) if best is None else ("optimal", best)
