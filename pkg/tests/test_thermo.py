import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from dhrom import presets, thermo
from dhrom.thermo import PipeGeometry

# frozen oracle values (bisection on the Colebrook residual, 40-digit formula evaluation)
F_SMOOTH_1E5 = 0.01798977308427384
F_ROUGH_1E5 = 0.022174535944515072
NU_1E5_PR7 = 599.0194959763766
H_TABLE2 = 7332.703121722169
H_RIG = 1374.3517074496772
R_SOIL_TABLE2 = 0.003264670863521712
R_TABLE2 = [1.7955921658901515e-05, 0.03286470014047155, 0.021104439045943345, 0.0033901499223047355]


def colebrook_residual(f, re, rr):
    return abs(1 / math.sqrt(f) + 2 * math.log10(rr / 3.7 + 2.51 / (re * math.sqrt(f))))


def test_friction_factor_rough_low_re_is_fixed_point():
    f = thermo.friction_factor(4000, 0.05)
    assert colebrook_residual(f, 4000, 0.05) < 1e-10


def test_friction_factor_smooth_matches_bisection():
    assert thermo.friction_factor(1e5, 0.0) == pytest.approx(F_SMOOTH_1E5, rel=1e-10)
    assert thermo.friction_factor(1e5, 0.0) == pytest.approx(0.01799, abs=1e-5)


def test_friction_factor_rough_exceeds_smooth():
    f = thermo.friction_factor(1e5, 0.001)
    assert f == pytest.approx(F_ROUGH_1E5, rel=1e-10)
    assert f > F_SMOOTH_1E5


def test_friction_factor_rejects_laminar():
    with pytest.raises(thermo.ThermoError, match="laminar"):
        thermo.friction_factor(2300, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(4e3, 1e7), st.floats(0.0, 0.05))
def test_friction_factor_residual_over_range(re, rr):
    assert colebrook_residual(thermo.friction_factor(re, rr), re, rr) < 1e-10


def test_friction_factor_monotone_in_roughness():
    for re in (5e3, 5e4, 5e5, 5e6):
        fs = [thermo.friction_factor(re, rr) for rr in np.linspace(0, 0.05, 26)]
        assert np.all(np.diff(fs) >= 0)


def test_nusselt_values():
    assert thermo.nusselt(1e5, 1.0, 0.018) == pytest.approx(222.75, rel=1e-12)
    assert thermo.nusselt(1e5, 7.0, 0.01799) == pytest.approx(NU_1E5_PR7, rel=1e-12)


def test_nusselt_vanishes_at_re_1000_numerator():
    # the correlation is rejected below the turbulent limit, so check the formula's numerator directly
    assert oracles.gnielinski_mp(1000, 5.0, 0.03) == 0.0


def test_convective_coeff_table2_and_rig():
    W = presets.WATER
    assert thermo.convective_coeff(W, 1.5, 0.0285) == pytest.approx(H_TABLE2, rel=1e-10)
    assert thermo.convective_coeff(W, 0.27, 0.05248) == pytest.approx(H_RIG, rel=1e-10)


def test_convective_coeff_scales_with_conductivity():
    W = presets.WATER
    W2 = thermo.FluidProps(W.density, W.heat_capacity * 2, W.conductivity * 2, W.dynamic_viscosity)
    # same Pr and Re, so same Nu; h doubles with k
    assert thermo.convective_coeff(W2, 1.5, 0.0285) == pytest.approx(2 * thermo.convective_coeff(W, 1.5, 0.0285))


def test_soil_resistance():
    assert thermo.soil_resistance(0.045, 0.045, 100, 1.6) == 0.0
    assert thermo.soil_resistance(0.6, 0.045, 100, 1.6) == pytest.approx(R_SOIL_TABLE2, rel=1e-12)
    assert thermo.soil_resistance(0.6, 0.045, 200, 1.6) == pytest.approx(R_SOIL_TABLE2 / 2, rel=1e-12)
    with pytest.raises(thermo.ThermoError):
        thermo.soil_resistance(0.04, 0.045, 100, 1.6)


def _table2_geom(length=100.0):
    return PipeGeometry(length, 0.01425, 0.01685, 0.042, 0.045, 0.6)


def test_resistances_table2():
    r = thermo.resistances(_table2_geom(), presets.STEEL, presets.PUR_INSULATION, presets.PE_CASING,
                           H_TABLE2, 1.6)
    assert [r.ws, r.si, r.ic, r.cg] == pytest.approx(R_TABLE2, rel=1e-12)


def test_resistances_scale_as_inverse_length():
    args = (presets.STEEL, presets.PUR_INSULATION, presets.PE_CASING, H_TABLE2, 1.6)
    a = thermo.resistances(_table2_geom(100.0), *args)
    b = thermo.resistances(_table2_geom(200.0), *args)
    for x, y in zip((a.ws, a.si, a.ic, a.cg), (b.ws, b.si, b.ic, b.cg)):
        assert x > 0 and y == pytest.approx(x / 2, rel=1e-12)


def test_resistance_ws_film_limit():
    stiff = thermo.LayerProps(7900, 500, 1e12)
    r = thermo.resistances(_table2_geom(), stiff, presets.PUR_INSULATION, presets.PE_CASING, H_TABLE2, 1.6)
    assert r.ws == pytest.approx(1 / (2 * math.pi * 0.01425 * 100 * H_TABLE2), rel=1e-9)


def test_geometry_validation():
    with pytest.raises(ValueError):
        PipeGeometry(100, 0.02, 0.01, 0.04, 0.05, 0.6)
    with pytest.raises(ValueError):
        PipeGeometry(100, 0.01, 0.02, 0.04, 0.05, 0.03)
    with pytest.raises(ValueError):
        thermo.FluidProps(1000, 4000, -0.6, 1e-3)
