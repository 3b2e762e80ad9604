import numpy as np
import pytest

from latticelight import thermometry as th
from latticelight.angular import AngularIntegral, DetectorSpec
from latticelight.core import K40_D2, RB87_D2, LatticeSpec
from latticelight.errors import ValidityError
from latticelight.matrix_elements import LatticeModel

FERMI = LatticeModel(LatticeSpec((10, 10, 1), (8.0, 8.0, 15.0)))
MOTT = LatticeModel(LatticeSpec((10, 10, 1), (20.0, 20.0, 20.0)))
SF = LatticeModel(LatticeSpec((8, 8, 1), (3.0, 3.0, 20.0)))


def integral(**comps):
    comps = {k: np.atleast_1d(np.asarray(v, float)) for k, v in comps.items()}
    return AngularIntegral("fermi", comps, {k: 0 * v for k, v in comps.items()}, 0)


def test_exposure_time_linear():
    rate = np.array([2.0e6, 5.0e5])
    t = th.exposure_time(rate, 45.0)
    assert np.allclose(t * rate, 45.0, rtol=1e-12)
    assert np.allclose(th.exposure_time(rate, 90.0), 2 * t)
    assert np.allclose(th.exposure_time(2 * rate, 45.0), t / 2)
    with pytest.raises(th.UnboundedExposureError):
        th.exposure_time([0.0], 45.0)


def test_collected_photons_filter_and_efficiency():
    coll = integral(g0=10.0, g1=5.0, g2=0.0, b=2.0)
    assert np.isclose(th.collected_photons(coll, 0.5)[0], 8.5)
    assert np.isclose(th.collected_photons(coll, 0.5, filter_interband=True)[0], 7.5)
    assert np.isclose(th.collected_photons(coll, 0.5, efficiency=0.4)[0], 3.4)


def test_repetitions_rule():
    assert th.repetitions(100.0, 110.0) == 1
    assert th.repetitions(100.0, 102.0) == 25
    assert th.repetitions(100.0, 101.5) == 45     # ceil(44.4)
    with pytest.raises(th.SignalDegenerateError):
        th.repetitions(100.0, 100.0)
    with pytest.raises(th.SignalDegenerateError):
        th.repetitions(100.0, 99.0)


def test_run_validation():
    det = DetectorSpec()
    with pytest.raises(ValidityError):
        th.ThermometryRun("fermi", {"filling": 0.5}, det, (0.1, 0.05), 0.01)
    with pytest.raises(ValidityError):
        th.ThermometryRun("fermi", {"filling": 0.5}, det, (0.1,), 0.0)
    with pytest.raises(ValidityError):
        th.ThermometryRun("fermi", {"filling": 0.5}, det, (0.1,), 0.01, W_budget=-1)
    with pytest.raises(ValidityError):
        th.ThermometryRun("gas", {}, det, (0.1,), 0.01)
    with pytest.raises(ValidityError):
        th.solve_phase(FERMI, K40_D2, "gas", 0.1)


@pytest.fixture(scope="module")
def fermi_rows():
    run = th.ThermometryRun("fermi", {"filling": 0.5}, DetectorSpec(), (0.02, 0.06), 0.006)
    return run, th.temperature_curve(run, FERMI, K40_D2)


def test_fermion_curve(fermi_rows):
    run, rows = fermi_rows
    assert [r.T for r in rows] == [0.02, 0.06]
    for r in rows:
        assert r.error is None
        assert r.W == pytest.approx(0.1 * r.N)
        heat = sum(r.heating.values())
        assert r.t_exp["full"] * heat == pytest.approx(r.W, rel=1e-12)
        heat_nb = heat - r.heating["b"]
        assert r.t_exp["no_interband"] * heat_nb == pytest.approx(r.W, rel=1e-12)
        assert r.N_c_next["full"] > r.N_c["full"]
        expected = int(np.ceil(r.N_c["full"] / (r.N_c_next["full"] - r.N_c["full"]) ** 2))
        assert r.tau["full"] == expected
        assert r.tau["filtered"] >= 0.9 * r.tau["full"]
        assert set(r.as_dict()) >= {"T", "N_c", "tau", "t_exp", "collected", "heating"}


def test_curve_is_deterministic(fermi_rows):
    run, rows = fermi_rows
    again = th.temperature_curve(run, FERMI, K40_D2)
    assert [r.as_dict() for r in again] == [r.as_dict() for r in rows]


def test_budget_scales_exposure_not_tau_ratio(fermi_rows):
    run, rows = fermi_rows
    run2 = th.ThermometryRun("fermi", {"filling": 0.5}, DetectorSpec(), (0.02,), 0.006,
                             W_budget=2 * rows[0].W)
    r2 = th.temperature_curve(run2, FERMI, K40_D2)[0]
    assert r2.t_exp["full"] == pytest.approx(2 * rows[0].t_exp["full"], rel=1e-12)
    assert r2.N_c["full"] == pytest.approx(2 * rows[0].N_c["full"], rel=1e-12)


def test_tau_scales_inverse_square_in_dT():
    runs = [th.ThermometryRun("fermi", {"filling": 0.5}, DetectorSpec(), (0.04,), dT, rtol=1e-7)
            for dT in (0.002, 0.001)]
    rows = [th.temperature_curve(r, FERMI, K40_D2)[0] for r in runs]
    exact = [r.N_c["full"] / (r.N_c_next["full"] - r.N_c["full"]) ** 2 for r in rows]
    assert exact[1] / exact[0] == pytest.approx(4.0, rel=0.05)


def test_mott_zero_temperature_error_paths():
    run = th.ThermometryRun("mott", {"n0": 1}, DetectorSpec(), (0.0,), 0.003)
    row = th.temperature_curve(run, MOTT, RB87_D2)[0]
    # interband scattering still heats, but without it nothing would
    assert row.t_exp["full"] is not None and row.t_exp["no_interband"] is None
    assert "UnboundedExposureError" in row.error


def test_row_failures_are_recorded(quiet):
    run = th.ThermometryRun("superfluid", {"N": 64}, DetectorSpec(), (0.01, 5.0), 0.002)
    rows = th.temperature_curve(run, SF, RB87_D2)
    assert rows[0].error is None or "Signal" in rows[0].error
    assert rows[1].error is not None and "ValidityError" in rows[1].error
    assert rows[1].tau == {}
