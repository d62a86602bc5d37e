"""Small problem builders shared by several test modules."""
import numpy as np

from ddstl.milp import EncodingParams, LinExpr, ProblemBuilder, encode_formula
from ddstl.solver import solve_milp


def pinned_formula_problem(phi, y, params=EncodingParams(), schedules=None, root_value=1.0):
    """Encoding of ``phi`` over outputs fixed through their bounds, root pinned."""
    y = np.asarray(y, float)
    if y.ndim == 1:
        y = y[:, None]
    L = y.shape[0] - 1
    pb = ProblemBuilder()
    outs = [[LinExpr.var(pb.add_var(f"y_{t}_{i + 1}", lb=y[t, i], ub=y[t, i])) for i in range(y.shape[1])]
            for t in range(L + 1)]
    root, atoms = encode_formula(pb, phi, outs, L, params, schedules)
    if root is True:
        if root_value == 0.0:
            pb.add_constraint(LinExpr({}), ">=", 1.0)
    elif root is False:
        if root_value == 1.0:
            pb.add_constraint(LinExpr({}), ">=", 1.0)
    else:
        pb.add_constraint(LinExpr.var(root), "=", root_value, name="sat")
    return pb.build(), root, atoms


def encoder_says(phi, y, params=EncodingParams(), schedules=None) -> bool:
    problem, _, _ = pinned_formula_problem(phi, y, params, schedules)
    return solve_milp(problem).ok


def random_band_spec(rng):
    """A random band-type specification over one output with horizon at most 12."""
    kind = rng.integers(0, 4)
    a = int(rng.integers(0, 5))
    b = int(rng.integers(a, a + 6))
    lo = float(np.round(rng.uniform(-2.5, 1.5), 2))
    hi = float(np.round(lo + rng.uniform(0.3, 2.0), 2))
    r = float(np.round(rng.uniform(0.3, 2.5), 2))
    if kind == 0:
        return f"G[{a},{b}] (y1 >= {lo} and y1 <= {hi})"
    if kind == 1:
        return f"F[{a},{b}] G[0,2] abs(y1) <= {r}"
    if kind == 2:
        return f"G[{a},{b}] (abs(y1) >= {r} and abs(y1) <= {round(r + 1.0, 2)})"
    return f"(y1 <= {round(hi + 1.0, 2)}) U[{a},{b}] (y1 >= {lo} and y1 <= {hi})"


def random_reachable_init(rng, model, t_ini=3, scale=0.5):
    from ddstl.lti import simulate
    return simulate(model, rng.normal(scale=scale, size=model.n_x), rng.uniform(-1, 1, size=t_ini))
