import logging

import numpy as np
import pytest

import analysis
from analysis import (
    TAU_TILDE_R,
    Y_C,
    ExtremumConfig,
    ExtremumKind,
    ScenarioKind,
    SweepFamily,
    check_inflection_conjecture,
    classify_scenario,
    classify_zones,
    critical_constants,
    extremum_residual,
    find_extrema,
    saddle_noise,
    sweep_capacity,
    sweep_values,
    taylor_coefficients,
)
from capacity_engine import capacity, threshold_frequency
from gauss_core import FiducialChannel, GaussianDomainError, UnphysicalChannelError
from verification import load_golden


def lossy_y(tau, m_env=1e-3):
    return abs(1.0 - tau) * (m_env + 0.5)


def capacity_at(tau, y, n_bar, omega_env):
    return capacity(FiducialChannel.from_noise(tau, y, omega_env), n_bar).capacity_bits


def test_critical_constants():
    constants = critical_constants(0.1, 1e-3)
    assert constants.y_c == pytest.approx(0.288675, abs=1e-6)
    assert constants.n_c == pytest.approx(0.3578, abs=5e-5)
    assert constants.m_c == pytest.approx(0.0969, abs=5e-5)
    assert constants.tau_L == pytest.approx(0.42265, abs=1e-5)
    assert constants.tau_tilde_R == pytest.approx(0.51640, abs=1e-5)
    assert constants.tau_tilde_L < constants.tau_L < constants.tau_tilde_R < constants.tau_R
    assert constants.tau_c_minus < 1.0 < constants.tau_c_plus


def test_critical_constants_reject_negative_inputs():
    with pytest.raises(GaussianDomainError):
        critical_constants(-0.1, 0.0)


def test_taylor_slope_vanishes_at_critical_noise():
    assert taylor_coefficients(1.0, Y_C, 0.1).a == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tau, y, n_bar, rising", [(1.0, 0.1, 0.1, True), (-1.0, 1.2, 1.0, False)])
def test_taylor_slope_sign(tau, y, n_bar, rising):
    coeffs = taylor_coefficients(tau, y, n_bar)
    assert (coeffs.a > 0) == rising
    assert (coeffs.fd_slope > 0) == rising


def test_taylor_slope_sign_on_random_channels(rng):
    checked = 0
    while checked < 20:
        tau = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.5))
        floor = max(abs(1.0 - tau) / 2.0, 0.1)
        y = float(rng.uniform(floor, floor + 1.0))
        if abs(y - Y_C) < 0.02:
            continue
        n_bar = float(rng.uniform(0.05, 1.0))
        coeffs = taylor_coefficients(tau, y, n_bar)
        assert np.sign(coeffs.a) == np.sign(coeffs.fd_slope), (tau, y, n_bar, coeffs)
        checked += 1


def test_taylor_rejects_zero_transmission():
    with pytest.raises(GaussianDomainError):
        taylor_coefficients(0.0, 0.6, 1.0)


def test_extremum_residual_thermal_boundary():
    assert extremum_residual(1.0, 1.0, 0.1, 1.0) == 0.0
    with pytest.raises(GaussianDomainError):
        extremum_residual(0.0, 1.0, 0.1, 1.0)


def test_extremum_residual_single_root_below_critical_noise():
    upper = threshold_frequency(1.2, 0.1001, 0.1)
    grid = np.geomspace(1e-5, upper * (1.0 - 1e-9), 2000)
    values = np.array([extremum_residual(e, 1.2, 0.1001, 0.1) for e in grid])
    assert np.count_nonzero(values[:-1] * values[1:] < 0) == 1


def test_phase_conjugator_has_no_extrema():
    assert find_extrema(-1.0, 1.2, 1.0) == []


def test_lossy_single_maximum():
    extrema = find_extrema(0.455, lossy_y(0.455), 0.1)
    assert [e.kind for e in extrema] == [ExtremumKind.MAX]


def test_lossy_saddle():
    tau = 0.3759
    extrema = find_extrema(tau, lossy_y(tau), 0.1)
    assert [e.kind for e in extrema] == [ExtremumKind.SADDLE]
    assert saddle_noise(tau, 0.1) == pytest.approx(lossy_y(tau), abs=1e-3)


def test_saddle_noise_outside_lossy_window():
    assert saddle_noise(0.6, 0.1) is None
    assert saddle_noise(-0.5, 0.1) is None


def test_max_then_min_confirmed_by_capacity_curve():
    tau, n_bar = 0.41, 0.1
    y = lossy_y(tau)
    extrema = find_extrema(tau, y, n_bar)
    assert [e.kind for e in extrema] == [ExtremumKind.MAX, ExtremumKind.MIN]
    upper = threshold_frequency(tau, y, n_bar)
    spread = extrema[1].omega_env - extrema[0].omega_env
    for e in extrema:
        assert 0.0 < e.omega_env < upper
        delta = min(1e-2 * e.omega_env, spread / 4.0)
        centre = capacity_at(tau, y, n_bar, e.omega_env)
        sides = [capacity_at(tau, y, n_bar, e.omega_env - delta), capacity_at(tau, y, n_bar, e.omega_env + delta)]
        if e.kind == ExtremumKind.MAX:
            assert centre >= max(sides)
        else:
            assert centre <= min(sides)


@pytest.mark.parametrize("case", load_golden()["scenarios"], ids=lambda c: f"tau={c['tau']}")
def test_scenario_reference_cases(case):
    scenario = classify_scenario(case["tau"], lossy_y(case["tau"], case["m_env"]), case["n_bar"])
    assert scenario.kind.value == case["expected"]


def test_one_maximum_lists_exactly_one_max():
    scenario = classify_scenario(1.2, 0.1001, 0.1)
    assert scenario.kind == ScenarioKind.ONE_MAXIMUM
    assert [e.kind for e in scenario.extrema] == [ExtremumKind.MAX]
    assert 0.0 < scenario.extrema[0].omega_env < threshold_frequency(1.2, 0.1001, 0.1)


@pytest.mark.parametrize("tau, y, n_bar", [(1.9, 0.45045, 0.1), (-1.0, 1.2, 1.0)])
def test_fast_path_agrees_with_numeric_path(tau, y, n_bar):
    fast = classify_scenario(tau, y, n_bar)
    numeric = classify_scenario(tau, y, n_bar, numeric_only=True)
    assert fast.kind == numeric.kind == ScenarioKind.MONOTONIC


def test_classify_rejects_unphysical_channel():
    with pytest.raises(UnphysicalChannelError):
        classify_scenario(0.5, 0.1, 0.1)


def test_classify_degenerate_inputs():
    assert classify_scenario(1.0, 0.0, 1.0).kind == ScenarioKind.MONOTONIC
    assert classify_scenario(0.7, 0.3, 0.0).kind == ScenarioKind.MONOTONIC
    assert TAU_TILDE_R == pytest.approx(0.516398, abs=1e-6)


def test_extremum_config_validation():
    with pytest.raises(GaussianDomainError):
        ExtremumConfig(scan_points=2)
    with pytest.raises(GaussianDomainError):
        ExtremumConfig(omega_floor=1.0)


def test_water_filling_side_is_decreasing_and_convex():
    tau, y, n_bar = 1.0, 0.1, 1.0
    omegas = np.linspace(threshold_frequency(tau, y, n_bar), 1.0, 21)
    values = np.array([capacity_at(tau, y, n_bar, w) for w in omegas])
    assert np.all(np.diff(values) <= 1e-12)
    assert np.all(np.diff(values, 2) >= -1e-10)


def test_water_filling_side_on_random_channels(random_channel, rng):
    for _ in range(10):
        ch = random_channel()
        n_bar = float(rng.uniform(0.1, 3.0))
        omegas = np.linspace(threshold_frequency(ch.tau, ch.y, n_bar) + 1e-6, 1.0, 21)
        values = np.array([capacity_at(ch.tau, ch.y, n_bar, w) for w in omegas])
        assert np.all(np.diff(values) <= 1e-12), (ch.tau, ch.y, n_bar)
        assert np.all(np.diff(values, 2) >= -1e-10), (ch.tau, ch.y, n_bar)


def test_inflection_conjecture_on_sampled_curve():
    assert check_inflection_conjecture(-1.0, 1.2, 1.0)


def test_inflection_conjecture_reports_violation(monkeypatch, caplog):
    monkeypatch.setattr(analysis, "count_inflections", lambda *args, **kwargs: 3)
    with caplog.at_level(logging.WARNING, logger="analysis"):
        assert not check_inflection_conjecture(1.0, 0.1, 1.0)
    assert "3 inflection points" in caplog.text


def test_sweep_values():
    assert sweep_values(0.0, 1.0, 5).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert sweep_values(1.0, 100.0, 3, log=True) == pytest.approx([1.0, 10.0, 100.0])
    with pytest.raises(GaussianDomainError):
        sweep_values(0.0, 1.0, 5, log=True)
    with pytest.raises(GaussianDomainError):
        sweep_values(0.0, 1.0, 1)


def test_sweep_family_validation():
    with pytest.raises(GaussianDomainError):
        SweepFamily("gain", m_env=0.1)
    with pytest.raises(GaussianDomainError):
        SweepFamily("tau")
    with pytest.raises(GaussianDomainError):
        SweepFamily("tau", m_env=0.1, y=0.2)


def test_omega_sweep_thermal_noise_is_worst_above_threshold():
    table = sweep_capacity(SweepFamily("omega_env", tau=1.0, m_env=0.1, n_bar=1.0), 0.01, 1.0, 40, max_workers=2)
    frame = table.frame
    assert table.error_count == 0
    assert frame.columns[0] == "omega_env"
    assert frame["omega_env"].is_monotonic_increasing
    assert frame["omega_thr"].iloc[0] == pytest.approx(0.362, abs=1e-3)
    assert table.metadata["threshold_in_range"]
    upper = frame[frame["omega_env"] >= frame["omega_thr"]]
    assert upper["capacity_bits"].idxmin() == frame.index[-1]


def test_tau_sweep_is_non_increasing_for_amplifiers():
    frame = sweep_capacity(SweepFamily("tau", m_env=0.1, n_bar=1.0), 1.0, 10.0, 19, max_workers=1).frame
    assert frame["regime"].iloc[0] == "AboveThreshold"
    assert frame["capacity_bits"].iloc[0] == pytest.approx(2.0, abs=1e-12)
    assert np.all(np.diff(frame["capacity_bits"]) <= 1e-10)


def test_energy_sweep_crosses_threshold_once():
    table = sweep_capacity(SweepFamily("n_bar", tau=1.0, y=0.1, omega_env=0.2), 0.5, 4.0, 15)
    frame = table.frame
    assert int(frame["threshold_crossing"].sum()) == 1
    assert table.metadata["n_bar_thr"] == pytest.approx(2.24)
    assert set(frame["regime"]) == {"BelowThreshold", "AboveThreshold"}
    assert frame["capacity_bits"].is_monotonic_increasing


def test_sweep_records_unphysical_rows():
    table = sweep_capacity(SweepFamily("y", tau=0.5), 0.0, 0.5, 11, max_workers=1)
    frame = table.frame
    assert len(frame) == 11
    assert table.error_count == 5
    errors = frame[frame["status"] != "ok"]
    assert errors["y"].max() < 0.25
    assert errors["status"].str.startswith("error: UnphysicalChannelError").all()
    assert frame["y"].tolist() == pytest.approx(list(np.linspace(0.0, 0.5, 11)))


def test_zone_raster():
    frame = classify_zones(0.1, (-1.0, 2.0), (0.0, 1.0), 4, max_workers=1)
    assert list(frame.columns) == ["tau", "y", "n_bar", "scenario"]
    assert len(frame) == 16
    labels = dict(zip(zip(frame["tau"], frame["y"]), frame["scenario"]))
    assert labels[(-1.0, 0.0)] == "Unphysical"
    assert labels[(-1.0, 1.0)] == "Monotonic"
    assert labels[(1.0, 0.0)] == "Monotonic"
    assert set(frame["scenario"]) == {"Unphysical", "Monotonic"}
    assert (frame["scenario"] == "Unphysical").sum() == 7


def test_zone_raster_rectangular_steps():
    frame = classify_zones(0.1, (0.9, 1.2), (0.2, 0.2), (2, 1), max_workers=1)
    assert frame["tau"].tolist() == pytest.approx([0.9, 1.2])
    assert frame["scenario"].tolist() == ["OneMaximum", "OneMaximum"]
