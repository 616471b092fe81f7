import math

import numpy as np
import pytest
import scipy.sparse as sp

import oracles
from dhrom import fom, presets, rom
from dhrom.fom import Discretization, StateVector

# frozen values of 1/(u/dx + 2 alpha_min/dx^2)
DT_MAX_TABLE2 = 0.3333332006561982
DT_MAX_RIG = 0.8108102656620303


def _configs():
    return [presets.table2_pipe(), presets.rig_pipe(), presets.buried_pipe(200.0, presets.DN40, mass_flux=2.1884)]


def _sys(config, dx=0.5):
    return fom.assemble(config, Discretization.from_dx(config.geometry.length, dx))


@pytest.mark.parametrize("config", _configs(), ids=["table2", "rig", "dn40"])
def test_uniform_state_is_stationary(config):
    s = _sys(config)
    T = np.full(s.size, 37.5)
    rhs = s.A @ T + 37.5 * s.b1 + 37.5 * s.b2
    assert np.max(np.abs(rhs)) < 1e-9
    out = fom.step(s, StateVector(T), 37.5, 37.5, 0.5 * rom.positive_dt(s))
    np.testing.assert_allclose(out.values, T, rtol=0, atol=1e-12)


@pytest.mark.parametrize("config", _configs(), ids=["table2", "rig", "dn40"])
def test_row_sums_and_diagonal(config):
    s = _sys(config)
    sums = np.asarray(s.A.sum(axis=1)).ravel() + s.b1 + s.b2
    assert np.max(np.abs(sums)) < 1e-12 * np.max(np.abs(s.A.diagonal()))
    assert np.all(s.A.diagonal() <= 0)


def test_rig_has_three_fields():
    s = _sys(presets.rig_pipe(), dx=0.6)
    assert s.n_fields == 3 and s.size == 3 * s.n_x


def test_two_node_outlet_row():
    cfg = presets.table2_pipe()
    s = fom.assemble(cfg, Discretization.from_nodes(100.0, 2))
    g, W = cfg.geometry, cfg.fluid
    R = cfg.resistances()
    V_w = math.pi * g.r_w**2 * g.length
    expected = -(cfg.velocity / 100.0 + 1 / (R.ws * V_w * W.density * W.heat_capacity)) - W.diffusivity / 100.0**2
    assert s.A[1, 1] == pytest.approx(expected, rel=1e-12)


def test_matrix_step_matches_loop_form():
    cfg = presets.table2_pipe()
    n_x = 201
    s = fom.assemble(cfg, Discretization.from_nodes(100.0, n_x))
    rng = np.random.default_rng(7)
    dt = 0.5 * rom.positive_dt(s)
    for _ in range(3):
        T = rng.uniform(0, 80, s.size)
        T_in, T_g = rng.uniform(0, 80, 2)
        new = fom.step(s, StateVector(T), T_in, T_g, dt).values
        ref = T + dt * oracles.fom_rhs_loop(cfg, n_x, T, T_in, T_g)
        ref[0] = T_in
        np.testing.assert_allclose(new, ref, rtol=0, atol=1e-12 * 80)


def test_max_stable_dt_values():
    cfg = presets.table2_pipe()
    assert fom.max_stable_dt(cfg, Discretization.from_dx(100, 0.5)) == pytest.approx(DT_MAX_TABLE2, rel=1e-12)
    rig = presets.rig_pipe(velocity=0.74)
    assert fom.max_stable_dt(rig, Discretization.from_dx(39, 0.6)) == pytest.approx(DT_MAX_RIG, rel=1e-12)


def test_max_stable_dt_convective_limit():
    cfg = presets.buried_pipe(100.0, velocity=1e6)
    assert fom.max_stable_dt(cfg, Discretization.from_dx(100, 0.5)) == pytest.approx(0.5 / 1e6, rel=1e-9)


def test_step_rejects_unstable_dt():
    s = _sys(presets.table2_pipe())
    with pytest.raises(fom.StabilityError, match="stability limit"):
        fom.step(s, StateVector.uniform(s, 0.0), 1.0, 0.0, 1.01 * s.dt_max)


def test_first_step_touches_only_inlet():
    s = _sys(presets.table2_pipe())
    out = fom.step(s, StateVector.uniform(s, 0.0), 1.0, 0.0, 0.1)
    assert out.values[0] == 1.0
    assert np.all(out.values[1:] == 0.0)
    assert np.all(out.field(s, 3) == 0.0)


def test_constant_inputs_give_constant_output():
    s = _sys(presets.table2_pipe())
    res = fom.simulate(s, StateVector.uniform(s, 20.0), 20.0, 20.0, 0.2, 100.0)
    np.testing.assert_allclose(res.outlet, 20.0, atol=1e-10)


def test_simulate_samples_profiles():
    s = _sys(presets.table2_pipe())
    prof = rom.InputProfile(np.array([0.0, 1.0]), np.array([5.0, 7.0]))
    res = fom.simulate(s, StateVector.uniform(s, 0.0), prof, 0.0, 0.25, 2.0, keep_states=True)
    assert res.states[4, 0] == 5.0  # inlet pinned to the value sampled at t=0.75
    assert res.states[5, 0] == 7.0


def test_equilibrium_uniform_and_bounds():
    s = _sys(presets.table2_pipe())
    np.testing.assert_allclose(fom.equilibrium(s, 42.0, 42.0).values, 42.0, rtol=1e-10)
    eq = fom.equilibrium(s, 80.0, 10.0).values
    assert eq.min() >= 10.0 - 1e-9 and eq.max() <= 80.0 + 1e-9


def test_equilibrium_matches_long_simulation(table2_responses):
    s = _sys(presets.table2_pipe())
    F2_inf = fom.equilibrium(s, 0.0, 1.0).values[s.outlet]
    assert F2_inf == pytest.approx(4.2e-3, rel=0.25)
    assert table2_responses.ground[-1] == pytest.approx(F2_inf, rel=1e-3)
    F1_inf = fom.equilibrium(s, 1.0, 0.0).values[s.outlet]
    assert table2_responses.inlet[-1] == pytest.approx(F1_inf, rel=1e-3)


def test_step_response_converges_in_dx():
    cfg = presets.table2_pipe()
    curves = {}
    for dx in (1.0, 0.5, 0.25):
        s = _sys(cfg, dx)
        dt = 0.5 * rom.positive_dt(s)
        res = fom.simulate(s, StateVector.uniform(s, 0.0), 1.0, 0.0, dt, 200.0)
        curves[dx] = np.interp(np.arange(0, 200.0, 1.0), res.t, res.outlet)
    d1 = np.max(np.abs(curves[1.0] - curves[0.5]))
    d2 = np.max(np.abs(curves[0.5] - curves[0.25]))
    assert d2 < d1


def lumped_system(a, b1, b2):
    """Two-node, single-field system whose outlet obeys dT/dt = a T + b1 T_in + b2 T_g."""
    A = sp.csr_matrix(np.array([[-b1, 0.0], [b1, a]]))
    return fom.LinearSystem(A, np.array([b1, 0.0]), np.array([0.0, b2]), 2, 1, 1.0, b1, 0.0)


def lumped_coefficients():
    cfg = presets.table2_pipe()
    g, W = cfg.geometry, cfg.fluid
    m = W.density * math.pi * g.r_w**2 * g.length
    h_A = cfg.resistances().ws ** -1  # film and wall lumped into one conductance
    m_dot = cfg.mass_flux
    a = -(m_dot * W.heat_capacity + h_A) / (m * W.heat_capacity)
    return a, m_dot / m, h_A / (m * W.heat_capacity)


def test_lumped_system_against_closed_form():
    a, b1, b2 = lumped_coefficients()
    s = lumped_system(a, b1, b2)
    tau = -1 / a
    dt = tau / 20000
    x0 = StateVector(np.array([1.0, 0.0]))
    res = fom.simulate(s, x0, 1.0, 0.0, dt, 3 * tau)
    res2 = fom.simulate(s, StateVector(np.zeros(2)), 0.0, 1.0, dt, 3 * tau)
    for t in (tau / 2, tau, 3 * tau):
        F1, F2 = oracles.lumped_transfer(t, a, b1, b2)
        assert np.interp(t, res.t, res.outlet) == pytest.approx(F1, rel=1e-3)
        assert np.interp(t, res2.t, res2.outlet) == pytest.approx(F2, rel=1e-3)


def test_fingerprint_changes_with_parameters():
    a = presets.table2_pipe()
    assert a.fingerprint() == presets.table2_pipe().fingerprint()
    assert a.fingerprint() != a.with_length(120.0).fingerprint()
