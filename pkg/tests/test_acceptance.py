"""End-to-end acceptance checks, one test per numbered criterion.

Each test prints a single ``CRITERION n: PASS|FAIL`` line to the terminal
(also under capture) before asserting, so a plain ``pytest -v`` log carries
the summary.  Run this file directly for the same output.
"""
import sys
import time

import numpy as np
import pytest

from ddstl.behavior import InSpan, assemble, membership
from ddstl.lti import Trajectory, builtin_model, generate_data, simulate
from ddstl.milp import CostSpec
from ddstl.scenarios import load_scenario
from ddstl.solver import Status, solve_milp_arrays
from ddstl.stl import monitor, parse
from ddstl.synthesis import SynthesisConfig, compute_L, model_based_synthesize, synthesize, verify_closed_loop
from builders import encoder_says, random_band_spec, random_reachable_init
from oracles import enumerate_milp, formula_depth, furthest_read, horizon_rules, random_formula


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return emit


def _scenario_runs(name, costs=("input_norm", "output_norm")):
    rows = []
    for cost in costs:
        t0 = time.perf_counter()
        sc = load_scenario(name, cost=cost)
        res = synthesize(sc.data, sc.w_ini, sc.phi, sc.config, sc.d_future, sc.schedules)
        verdict = "Infeasible"
        if res.feasible:
            v = verify_closed_loop(sc.model, sc.w_ini, res.u_opt, sc.phi, sc.d_future, sc.schedules)
            verdict = "Satisfied" if v else f"Violated@{v.t_fail}"
        rows.append((cost, res.status.value, verdict, res.objective, time.perf_counter() - t0))
    return rows


def _scenario_ok(rows, budget):
    total = sum(r[4] for r in rows)
    ok = all(r[2] == "Satisfied" for r in rows) and total < budget
    detail = "; ".join(f"{c} {s} {v} J={j:.6g} {t:.1f}s" for c, s, v, j, t in rows)
    return ok, f"{detail}; total {total:.1f}s (budget {budget}s)"


def test_criterion_1_scenario_one(report):
    ok, detail = _scenario_ok(_scenario_runs("scenario1"), 60)
    assert report(1, ok, detail)


def test_criterion_2_scenario_two(report):
    ok, detail = _scenario_ok(_scenario_runs("scenario2"), 120)
    assert report(2, ok, detail)


def test_criterion_3_hvac(report):
    rows = _scenario_runs("hvac", ("input_norm",))
    sc = load_scenario("hvac")
    ok = rows[0][2] == "Satisfied" and sc.config.L + 1 == 24 and sc.config.t_ini == 5
    c, s, v, j, t = rows[0]
    assert report(3, ok, f"L+1={sc.config.L + 1}, t_ini={sc.config.t_ini}: {s} {v} J={j:.6g} {t:.1f}s")


def test_criterion_4_encoder_monitor(report):
    rng = np.random.default_rng(404)
    pairs = mismatches = truths = 0
    while pairs < 1000:
        n_y = 1 + pairs % 2
        phi = random_formula(rng, depth=3, max_b=4, n_y=n_y)
        if formula_depth(phi) > 3 or compute_L(phi) > 12:
            continue
        # integer samples against half-integer offsets keep every margin at 1/2
        y = rng.integers(-4, 5, size=(13, n_y)).astype(float)
        want = monitor(phi, y)
        mismatches += encoder_says(phi, y) != want
        truths += want
        pairs += 1
    assert report(4, mismatches == 0, f"{pairs} pairs ({truths} satisfied), {mismatches} mismatches")


def test_criterion_5_fundamental_lemma(report):
    car = builtin_model("car")
    data = generate_data(car, 200, (-2, 2), seed=7)
    sys_ = assemble(data, 3, 13, n_x_bound=3)
    rng = np.random.default_rng(505)
    worst_in, best_out, rejected = 0.0, np.inf, 0
    for _ in range(100):
        w = simulate(car, rng.normal(size=3), rng.uniform(-2, 2, size=17))
        worst_in = max(worst_in, membership(sys_, w).residual)
    for k in range(20):
        w = simulate(car, rng.normal(size=3), rng.uniform(-2, 2, size=17))
        y = w.y.copy()
        y[k % 17, 0] += rng.choice([-1, 1]) * rng.uniform(0.1, 1.0)
        res = membership(sys_, Trajectory(w.u, y))
        best_out = min(best_out, res.residual)
        rejected += not isinstance(res, InSpan) and res.residual > 1e-3
    ok = bool(sys_.pe_check) and worst_in <= 1e-8 and rejected == 20
    assert report(5, ok, f"PE certified={bool(sys_.pe_check)}, depth {sys_.depth}; max fresh residual "
                         f"{worst_in:.2e}; perturbed rejected {rejected}/20 (min residual {best_out:.2e})")



def _cfg(k):
    kind = ("input_norm", "output_norm")[k % 2]
    return SynthesisConfig(t_ini=3, n_x_bound=3, box=(-2.0, 2.0), cost=CostSpec(kind))


def test_criterion_6_soundness(report):
    car = builtin_model("car")
    data = generate_data(car, 200, (-2, 2), seed=3)
    rng = np.random.default_rng(606)
    feasible = satisfied = attempts = 0
    worst = 0.0
    while feasible < 50 and attempts < 300:
        phi = parse(random_band_spec(rng))
        w = random_reachable_init(rng, car)
        res = synthesize(data, w, phi, _cfg(attempts))
        attempts += 1
        if not res.feasible:
            continue
        feasible += 1
        v = verify_closed_loop(car, w, res.u_opt, phi)
        err = float(np.max(np.abs(v.y - res.y_pred)))
        worst = max(worst, err)
        satisfied += bool(v) and err <= 1e-6
    ok = feasible == 50 and satisfied == 50
    assert report(6, ok, f"{satisfied}/{feasible} feasible instances satisfied with |y_pred - y| <= 1e-6 "
                         f"({attempts} attempts; worst error {worst:.2e})")


def test_criterion_7_completeness(report):
    car = builtin_model("car")
    data = generate_data(car, 200, (-2, 2), seed=3)
    rng = np.random.default_rng(707)
    agree, n_feas, worst = 0, 0, 0.0
    for k in range(20):
        phi = parse(random_band_spec(rng))
        w = random_reachable_init(rng, car)
        dd = synthesize(data, w, phi, _cfg(k))
        mb = model_based_synthesize(car, w, phi, _cfg(k))
        same = dd.feasible == mb.feasible and dd.status is not Status.LIMIT and mb.status is not Status.LIMIT
        if same and dd.feasible:
            n_feas += 1
            gap = abs(dd.objective - mb.objective)
            worst = max(worst, gap)
            same = gap <= 1e-4
        agree += same
    assert report(7, agree == 20, f"{agree}/20 agree ({n_feas} feasible, {20 - n_feas} infeasible); "
                                  f"worst objective gap {worst:.2e}")


def _random_milp(rng):
    nb = int(rng.integers(1, 11))
    nc = int(rng.integers(1, 31))
    n, m = nb + nc, int(rng.integers(2, 12))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    senses = list(rng.choice(["<=", ">=", "="], size=m, p=[0.55, 0.35, 0.10]))
    b = rng.integers(-6, 7, size=m).astype(float)
    lb = np.r_[np.zeros(nb), rng.integers(-5, 0, nc).astype(float)]
    ub = np.r_[np.ones(nb), rng.integers(1, 6, nc).astype(float)]
    c = rng.integers(-5, 6, size=n).astype(float)
    return c, A, senses, b, lb, ub, np.r_[np.ones(nb, bool), np.zeros(nc, bool)]


def test_criterion_8_solver(report):
    rng = np.random.default_rng(808)
    agree = optimal = 0
    worst = 0.0
    for _ in range(50):
        inst = _random_milp(rng)
        ref_status, ref_obj = enumerate_milp(*inst)
        sol = solve_milp_arrays(*inst)
        same = sol.status.value == ref_status
        if same and ref_status == "optimal":
            optimal += 1
            worst = max(worst, abs(sol.objective - ref_obj))
            same = abs(sol.objective - ref_obj) <= 1e-6
        agree += same
    assert report(8, agree == 50, f"{agree}/50 match enumeration ({optimal} optimal); worst gap {worst:.2e}")


def test_criterion_9_horizon(report):
    rng = np.random.default_rng(909)
    match = reads = 0
    for _ in range(200):
        phi = random_formula(rng, depth=4, max_b=5, n_y=2)
        L = compute_L(phi)
        match += L == horizon_rules(phi)
        reads += furthest_read(phi) == L
    assert report(9, match == 200, f"compute_L equals the rule recursion on {match}/200 formulas; "
                                   f"equals the furthest index read on {reads}/200")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
