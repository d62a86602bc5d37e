import numpy as np
import pytest

from ddstl.behavior import init_residual, assemble
from ddstl.scenarios import SCENARIOS, hvac_schedule, load_scenario, scenario_spec
from ddstl.synthesis import compute_L as compute_horizon


def test_names():
    assert set(SCENARIOS) == {"scenario1", "scenario2", "hvac"}
    with pytest.raises(ValueError):
        scenario_spec("nope")


@pytest.mark.parametrize("name", ["scenario1", "scenario2"])
def test_car_initializations_are_projected(name):
    sc = load_scenario(name)
    # the published values are rounded to four digits
    assert 0 < sc.projection_distance < 1e-4
    assert np.max(np.abs(sc.w_ini.u - sc.w_ini_recorded.u)) < 1e-4
    sys = assemble(sc.data, sc.config.t_ini, sc.config.L)
    assert init_residual(sys, sc.w_ini) < 1e-8
    assert init_residual(sys, sc.w_ini_recorded) > 1e-6


def test_horizons_fit_L():
    for name in SCENARIOS:
        sc = load_scenario(name)
        assert compute_horizon(sc.phi) <= sc.config.L
    assert compute_horizon(load_scenario("scenario1").phi) == 10
    assert compute_horizon(load_scenario("scenario2").phi) == 13


def test_seed_and_length_overrides():
    a = load_scenario("scenario1", seed=9, data_steps=80)
    b = load_scenario("scenario1", seed=9, data_steps=80)
    assert a.data.length == 80
    np.testing.assert_array_equal(a.data.u, b.data.u)
    assert not np.array_equal(a.data.u, load_scenario("scenario1", seed=10, data_steps=80).data.u)


def test_hvac_schedule_shape():
    h = hvac_schedule()
    assert len(h["occ"]) == 24
    occ = np.asarray(h["occ"])
    assert set(occ) == {0.0, 1.0}
    assert occ.sum() == 10 and occ[8] == 1 and occ[18] == 0
    comf = np.asarray(h["Tcomf"])
    assert comf[occ == 1].min() >= 21.0 and comf[occ == 0].max() == 18.0


def test_hvac_scenario_setup():
    sc = load_scenario("hvac")
    assert sc.model.n_d == 7 and sc.d_future.shape == (24, 7)
    assert sc.config.dictionary == "reduced" and sc.config.encoding.eps == 1e-3
    assert sc.w_ini.d.shape == (5, 7)
    # steady state before the window
    np.testing.assert_allclose(sc.w_ini_recorded.d, np.tile(sc.d_future[0], (5, 1)))
    np.testing.assert_allclose(sc.w_ini.d, sc.w_ini_recorded.d, atol=1e-9)
    assert sc.projection_distance < 1e-6
    assert set(sc.schedules) == {"occ", "Tcomf"}


def test_schedule_override(tmp_path):
    h = hvac_schedule()
    path = tmp_path / "short.csv"
    lines = ["t," + ",".join(k for k in h if k != "t")]
    for i in range(10):
        lines.append(",".join(str(float(h[k][i])) for k in h))
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="rows"):
        load_scenario("hvac", schedule_path=path)
