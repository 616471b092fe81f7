import numpy as np
import pytest

from dhrom import chebyshev, control, rom
from dhrom.control import ControllerState, PIGains, Plant
from dhrom.rom import InputProfile


def test_gains_must_be_nonnegative():
    with pytest.raises(ValueError):
        PIGains(-0.1, 0.0)
    with pytest.raises(ValueError):
        ControllerState(bounds=(2.0, 1.0))


def test_pi_step_zero_error_stays_at_rest():
    ctrl = ControllerState()
    for _ in range(100):
        ctrl, u = control.pi_step(ctrl, PIGains(0.7, 0.01), 0.0, 1.0)
        assert u == 0.0
    assert ctrl.integral == 0.0


def test_pi_step_examples():
    _, u = control.pi_step(ControllerState(), PIGains(0.5, 0.0), 2.0, 1.0)
    assert u == 1.0
    ctrl, u = control.pi_step(ControllerState(integral=3.0), PIGains(0.5, 0.1), 2.0, 0.5)
    assert ctrl.integral == 4.0
    assert u == pytest.approx(0.5 * 2.0 + 0.1 * 4.0)
    with pytest.raises(ValueError):
        control.pi_step(ControllerState(), PIGains(1.0, 1.0), 1.0, 0.0)


def test_pi_step_clamps_and_freezes_integral():
    ctrl = ControllerState(bounds=(0.0, 1.0))
    gains = PIGains(1.0, 0.1)
    for _ in range(50):
        ctrl, u = control.pi_step(ctrl, gains, 5.0, 1.0)
        assert u == 1.0
    assert ctrl.integral == 0.0
    # back inside the bounds the integral resumes from where it stopped
    ctrl, u = control.pi_step(ctrl, gains, 0.5, 1.0)
    assert ctrl.integral == 0.5 and u == pytest.approx(0.55)
    # below the lower bound with a negative error it is frozen again
    ctrl, u = control.pi_step(ctrl, gains, -2.0, 1.0)
    assert ctrl.integral == 0.5 and u == 0.0


def test_ziegler_nichols():
    g = control.ziegler_nichols(1.055, 152.7)
    assert (round(g.K_p, 4), round(g.K_i, 4)) == (0.4748, 0.0037)
    g1 = control.ziegler_nichols(1.0, 1.0)
    assert (g1.K_p, g1.K_i) == pytest.approx((0.45, 0.54), abs=1e-15)
    g2 = control.ziegler_nichols(2.0, 1.0)
    assert (g2.K_p, g2.K_i) == pytest.approx((0.9, 1.08), abs=1e-15)
    with pytest.raises(ValueError):
        control.ziegler_nichols(0.0, 10.0)


def test_turning_points_ignore_small_ripple():
    t = np.arange(0, 400.0)
    x = np.sin(2 * np.pi * t / 100) + 1e-4 * np.sin(2 * np.pi * t / 3.7)
    idx = control.turning_points(x, 1e-2)
    np.testing.assert_allclose(np.diff(t[idx]), 50.0, atol=2.0)
    osc = control.oscillation(t, x, skip=0)
    assert osc.period == pytest.approx(100.0, abs=2.0)
    assert osc.ratio == pytest.approx(1.0, abs=0.01)


def test_decaying_signal_ratio():
    t = np.arange(0, 2000.0)
    x = np.exp(-t / 400) * np.cos(2 * np.pi * t / 100)
    osc = control.oscillation(t, x, skip=0)
    assert osc.ratio == pytest.approx(np.exp(-50 / 400), rel=0.02)


def _first_order_plant(tau=100.0):
    t = np.arange(0.0, 20 * tau, 0.5)
    F1 = rom.identify(t, 1 - np.exp(-t / tau), 32)
    F2 = rom.identify(t, np.zeros_like(t), 4, kind=rom.GROUND)
    return Plant(F1, F2)


def test_first_order_plant_does_not_oscillate():
    with pytest.raises(control.TuningError, match="no sustained oscillation"):
        control.find_ultimate_gain(_first_order_plant(), scan=6)


def test_ultimate_gain_lies_in_coarse_scan_bracket(system2_plant, system2_tuning):
    K_u = system2_tuning[0]
    grid = np.linspace(0.2, 3.0, 15)
    ratios = []
    for k in grid:
        osc = control._p_only_oscillation(system2_plant, k, 1.0, 3000.0, 1.0)
        ratios.append(0.0 if osc is None else osc.ratio)
    j = next(i for i, r in enumerate(ratios) if r >= 1.0)
    assert grid[j - 1] <= K_u <= grid[j]


def test_ultimate_gain_and_period(system2_tuning):
    K_u, tau_u, _ = system2_tuning
    assert K_u == pytest.approx(1.055, rel=0.10)
    assert tau_u == pytest.approx(152.7, rel=0.10)


def test_optimize_ki(system2_plant, system2_tuning):
    K_i = system2_tuning[2]
    assert K_i == pytest.approx(0.0085, rel=0.15)
    assert control.overshoot_of(system2_plant, PIGains(0.211, K_i), 60.0, 1.0, 3600.0) <= 0.5
    assert control.overshoot_of(system2_plant, PIGains(0.211, K_i + 1e-4), 60.0, 1.0, 3600.0) > 0.5


def test_optimize_ki_bad_brackets(system2_plant):
    with pytest.raises(control.TuningError, match="already overshoots"):
        control.optimize_ki(system2_plant, 0.211, (0.02, 0.05), t_end=1200.0)
    with pytest.raises(control.TuningError, match="does not overshoot"):
        control.optimize_ki(system2_plant, 0.211, (0.0005, 0.001), t_end=1200.0)


def test_scenario1_with_optimized_gain(system2_plant, system2_tuning):
    res = control.run_scenario(control.scenario1(system2_plant), PIGains(0.211, system2_tuning[2]))
    assert res.overshoot <= 0.5
    assert res.settling_time is not None and res.settling_time <= 300.0


@pytest.mark.xfail(strict=True, reason="K_i = 0.0085 lies just above our no-overshoot optimum; "
                                       "see the decision ledger")
def test_reference_gain_pair_settles_without_overshoot(system2_plant):
    res = control.run_scenario(control.scenario1(system2_plant), PIGains(0.211, 0.0085))
    assert res.overshoot <= 0.5
    assert res.settling_time == pytest.approx(240.0, rel=0.25)


def test_small_and_large_integral_gains(system2_plant):
    slow = control.run_scenario(control.scenario1(system2_plant, t_end=3600.0), PIGains(0.211, 0.002))
    assert slow.overshoot == 0.0
    assert slow.settling_time == pytest.approx(1800.0, rel=0.25)
    fast = control.run_scenario(control.scenario1(system2_plant), PIGains(0.211, 0.01))
    assert fast.overshoot > 2.0


def test_scenario2_short_segments_lag(system2_plant, system2_tuning):
    res = control.run_scenario(control.scenario2(system2_plant), PIGains(0.211, system2_tuning[2]))
    assert len(res.segments) == len(control.SCENARIO2_TIMES)
    for seg in res.segments:
        assert seg.settling_time is not None
        share = seg.settling_time / (seg.end - seg.start)
        if seg.end - seg.start < 300:
            assert share > 0.5
        else:
            assert share < 0.5


def test_setpoint_at_rest_needs_no_action(system2_plant):
    plant = Plant(system2_plant.F1, system2_plant.F2, T0=20.0, T_g=20.0)
    res = control.run_scenario(control.Scenario(InputProfile.constant(20.0), plant, 600.0), PIGains(0.4, 0.004))
    np.testing.assert_array_equal(res.T_in, 20.0)
    np.testing.assert_array_equal(res.T_out, 20.0)


def test_zero_gains_never_reach_setpoint(system2_plant):
    res = control.run_scenario(control.scenario1(system2_plant, t_end=600.0), PIGains(0.0, 0.0))
    np.testing.assert_array_equal(res.T_in, 0.0)
    assert res.settling_time is None


@pytest.mark.parametrize("T0,T_g", [(0.0, 0.0), (10.0, 5.0)])
def test_asymptotic_input_and_integral_limit(system2_plant, T0, T_g):
    plant = Plant(system2_plant.F1, system2_plant.F2, T0=T0, T_g=T_g)
    gains = PIGains(0.211, 0.008)
    res = control.run_scenario(control.Scenario(InputProfile.constant(60.0), plant, 3600.0), gains)
    assert abs(res.T_out[-1] - 60.0) <= 1.0
    T_in_inf = plant.input_at_rest(60.0)
    assert res.T_in[-1] == pytest.approx(T_in_inf, rel=0.01)
    assert res.integral[-1] == pytest.approx((T_in_inf - T0) / gains.K_i, rel=0.05)


def test_saturated_loop_respects_bounds(system2_plant):
    sc = control.Scenario(InputProfile.constant(60.0), system2_plant, 1800.0, bounds=(0.0, 70.0))
    res = control.run_scenario(sc, PIGains(0.5, 0.01))
    assert res.T_in.min() >= 0.0 and res.T_in.max() <= 70.0
    assert abs(res.T_out[-1] - 60.0) <= 1.0


def test_runs_are_deterministic(system2_plant):
    sc = control.scenario2(system2_plant, t_end=1500.0)
    a = control.run_scenario(sc, PIGains(0.3, 0.006))
    b = control.run_scenario(sc, PIGains(0.3, 0.006))
    assert np.array_equal(a.T_in, b.T_in) and np.array_equal(a.T_out, b.T_out)
