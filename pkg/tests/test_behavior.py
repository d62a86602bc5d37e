import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddstl.behavior import (ContinuationError, InSpan, NotInSpan, assemble, build_hankel, check_pe, continuation,
                            membership, project_initialization, stack)
from ddstl.lti import Trajectory, simulate
from ddstl.numerics import rank
from oracles import hankel_by_index


def test_hankel_scalar():
    np.testing.assert_array_equal(build_hankel([1, 2, 3, 4], 2), [[1, 2, 3], [2, 3, 4]])


def test_hankel_single_column():
    np.testing.assert_array_equal(build_hankel([1, 2, 3], 3), [[1], [2], [3]])


def test_hankel_two_channels_index_oracle(rng):
    z = rng.normal(size=(5, 2))
    H = build_hankel(z, 2)
    assert H.shape == (4, 4)
    np.testing.assert_array_equal(H, hankel_by_index(z, 2))


def test_hankel_too_short():
    with pytest.raises(ValueError, match="3.*4"):
        build_hankel([1, 2, 3], 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 12), st.integers(0, 10))
def test_hankel_dimensions(n, depth, extra):
    z = np.arange((depth + extra) * n, dtype=float).reshape(-1, n)
    H = build_hankel(z, depth)
    N = z.shape[0] - 1
    assert H.shape == (depth * n, N - depth + 2)
    np.testing.assert_array_equal(H, hankel_by_index(z, depth))


def test_pe_zero_row():
    assert not check_pe([1, 0, 0, 0, 0], 2)


def test_pe_random_against_rank_oracle(rng):
    u = rng.uniform(-1, 1, size=41)
    res = check_pe(u, 20)
    assert res and np.linalg.matrix_rank(build_hankel(u, 20)) == 20


def test_pe_order_one():
    assert check_pe([0.0, 0.0, 3.0], 1)


def test_pe_short_sequence_reason():
    res = check_pe(np.ones(5), 4)
    assert not res and "samples" in res.reason


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 12), st.integers(10, 40))
def test_pe_monotone(seed, k, n):
    u = np.random.default_rng(seed).integers(-1, 2, size=n).astype(float)
    if check_pe(u, k):
        assert check_pe(u, k - 1)


def test_assemble_dimensions(car_data):
    sys = assemble(car_data, 3, 13, n_x_bound=3)
    assert sys.depth == 17 and sys.columns == 184
    assert sys.Hu.shape == (17, 184) and sys.Hy.shape == (17, 184)
    assert sys.pe_order_certified == 20
    assert rank(build_hankel(car_data.u, 20)) == 20


def test_assemble_too_short(car_data):
    with pytest.raises(ValueError, match="at least 201"):
        assemble(car_data, 100, 100)


def _fresh(car, rng, n):
    return simulate(car, rng.normal(size=3), rng.uniform(-2, 2, size=n))


def test_membership_of_a_column(car_data):
    sys = assemble(car_data, 3, 13)
    res = membership(sys, sys.stacked[:, 5])
    assert isinstance(res, InSpan) and res.residual < 1e-9


def test_membership_fresh_and_perturbed(car, car_data, rng):
    sys = assemble(car_data, 3, 13, n_x_bound=3)
    w = _fresh(car, rng, 17)
    assert membership(sys, w).residual <= 1e-8
    y = w.y.copy()
    y[6, 0] += 1.0
    res = membership(sys, Trajectory(w.u, y))
    assert isinstance(res, NotInSpan) and res.residual > 1e-3


def test_stack_order():
    w = Trajectory([[1.0], [2.0]], [[3.0], [4.0]])
    np.testing.assert_array_equal(stack(w), [1, 2, 3, 4])


def test_continuation_zero_input_matches_simulation(car, car_data, rng):
    sys = assemble(car_data, 3, 13)
    x0 = rng.normal(size=3)
    u = np.r_[rng.uniform(-2, 2, size=3), np.zeros(14)]
    full = simulate(car, x0, u)
    c = continuation(sys, full.window(0, 3), np.zeros(14))
    assert c.unique
    np.testing.assert_allclose(c.y, full.y[3:], atol=1e-8)


def test_continuation_superposition(car_data, rng):
    sys = assemble(car_data, 3, 13)
    zero = Trajectory(np.zeros(3), np.zeros(3))
    u1, u2 = rng.normal(size=14), rng.normal(size=14)
    y = lambda u: continuation(sys, zero, u).y  # noqa: E731
    np.testing.assert_allclose(y(1.5 * u1 + 0.25 * u2), 1.5 * y(u1) + 0.25 * y(u2), atol=1e-8)


def test_continuation_short_history_flagged(car, car_data, rng):
    sys = assemble(car_data, 1, 15)
    w = _fresh(car, rng, 1)
    c = continuation(sys, w, np.zeros(16))
    assert not c.unique


def test_continuation_rejects_foreign_initialization(car_data):
    sys = assemble(car_data, 3, 13)
    bad = Trajectory(np.zeros(3), [[0.0], [0.0], [5.0]])
    with pytest.raises(ContinuationError):
        continuation(sys, bad, np.zeros(14))


def test_continuation_deterministic(car, car_data, rng):
    sys = assemble(car_data, 3, 13)
    w = _fresh(car, rng, 3)
    u = rng.normal(size=14)
    np.testing.assert_array_equal(continuation(sys, w, u).y, continuation(sys, w, u).y)


def test_span_elements_continue_like_the_model(car, car_data, rng):
    # a random combination of columns, split into history and future
    sys = assemble(car_data, 3, 13)
    for _ in range(10):
        w = sys.stacked @ rng.normal(size=sys.columns)
        u, y = w[:17], w[17:]
        hist = Trajectory(u[:3], y[:3])
        O = np.vstack([car.C @ np.linalg.matrix_power(car.A, k) for k in range(3)])
        forced = simulate(car, np.zeros(3), u[:3]).y[:, 0]
        x_first = np.linalg.lstsq(O, y[:3] - forced, rcond=None)[0]
        expect = simulate(car, x_first, u).y[3:, 0]
        np.testing.assert_allclose(continuation(sys, hist, u[3:]).y[:, 0], expect, atol=1e-8 * max(1, abs(expect).max()))


def test_projection_moves_rounded_history_onto_span(car, car_data):
    sys = assemble(car_data, 3, 13)
    rounded = Trajectory([0.6058, 0.0, 0.0], [-0.1636, 0.0, 0.0])
    proj, dist = project_initialization(sys, rounded)
    assert 0 < dist < 1e-4
    assert membership(assemble(car_data, 2, 0), proj).residual < 1e-8
