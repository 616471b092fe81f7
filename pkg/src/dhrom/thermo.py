"""Heat-transfer correlations and lumped radial thermal resistances.

All quantities are SI. The fluid is treated with constant properties, and the
convective film uses the Gnielinski correlation with a Colebrook friction
factor, so only turbulent flow (Re > 2300) is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

LAMINAR_LIMIT = 2300.0
DEFAULT_ROUGHNESS = 4.5e-5  # m, commercial steel


class ThermoError(ValueError):
    """Raised when a correlation is evaluated outside its validity range."""


@dataclass(frozen=True)
class FluidProps:
    density: float  # kg/m3
    heat_capacity: float  # J/(kg K)
    conductivity: float  # W/(m K)
    dynamic_viscosity: float  # Pa s

    def __post_init__(self):
        for name in ("density", "heat_capacity", "conductivity", "dynamic_viscosity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FluidProps.{name} must be positive")

    @property
    def diffusivity(self) -> float:
        return self.conductivity / (self.density * self.heat_capacity)

    @property
    def prandtl(self) -> float:
        return self.heat_capacity * self.dynamic_viscosity / self.conductivity


@dataclass(frozen=True)
class LayerProps:
    density: float  # kg/m3
    heat_capacity: float  # J/(kg K)
    conductivity: float  # W/(m K)

    def __post_init__(self):
        for name in ("density", "heat_capacity", "conductivity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"LayerProps.{name} must be positive")

    @property
    def diffusivity(self) -> float:
        return self.conductivity / (self.density * self.heat_capacity)


@dataclass(frozen=True)
class PipeGeometry:
    """Buried pre-insulated pipe: steel carrier, insulation and casing.

    Radii are outer radii of each layer except ``r_w``, the inner (wetted)
    radius. ``depth`` is measured to the pipe centerline.
    """

    length: float
    r_w: float
    r_s: float
    r_i: float
    r_c: float
    depth: float
    roughness: float = DEFAULT_ROUGHNESS

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("pipe length must be positive")
        if not 0 < self.r_w < self.r_s < self.r_i < self.r_c:
            raise ValueError("radii must satisfy 0 < r_w < r_s < r_i < r_c")
        if not self.depth > self.r_c:
            raise ValueError("burial depth must exceed the casing radius")
        if self.roughness < 0:
            raise ValueError("roughness must be non-negative")

    @property
    def diameter(self) -> float:
        return 2.0 * self.r_w


@dataclass(frozen=True)
class Resistances:
    """Radial thermal resistances (K/W) between adjacent layers over the pipe length."""

    ws: float
    si: float
    ic: float
    cg: float

    def __post_init__(self):
        for name in ("ws", "si", "ic", "cg"):
            if not getattr(self, name) > 0:
                raise ValueError(f"resistance R_{name} must be positive")


def _colebrook_residual(f: float, re: float, rel_roughness: float) -> float:
    return 1.0 / math.sqrt(f) + 2.0 * math.log10(rel_roughness / 3.7 + 2.51 / (re * math.sqrt(f)))


def friction_factor(re: float, rel_roughness: float, tol: float = 1e-13) -> float:
    """Darcy friction factor from the implicit Colebrook relation.

    Iterates on ``x = 1/sqrt(f)`` starting from the Haaland approximation;
    falls back to bisection if the fixed point has not converged after 100
    iterations.
    """
    if re <= LAMINAR_LIMIT:
        raise ThermoError(
            f"Re={re:g} is in the laminar regime (Re <= {LAMINAR_LIMIT:g}); "
            "Colebrook/Gnielinski correlations are not valid there"
        )
    if rel_roughness < 0:
        raise ThermoError("relative roughness must be non-negative")

    x = -1.8 * math.log10((rel_roughness / 3.7) ** 1.11 + 6.9 / re)
    for _ in range(100):
        x_new = -2.0 * math.log10(rel_roughness / 3.7 + 2.51 * x / re)
        if abs(x_new - x) <= tol * abs(x_new):
            return 1.0 / x_new**2
        x = x_new

    lo, hi = 1e-4, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        # residual decreases monotonically in f
        if _colebrook_residual(mid, re, rel_roughness) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def nusselt(re: float, pr: float, f: float) -> float:
    """Gnielinski Nusselt number for turbulent pipe flow."""
    if re <= LAMINAR_LIMIT:
        raise ThermoError(f"Re={re:g} is in the laminar regime; Gnielinski is not valid")
    if pr <= 0 or f <= 0:
        raise ThermoError("Pr and f must be positive")
    f8 = f / 8.0
    return f8 * (re - 1000.0) * pr / (1.0 + 12.7 * math.sqrt(f8) * (pr ** (2.0 / 3.0) - 1.0))


def convective_coeff(fluid: FluidProps, u: float, diameter: float,
                     roughness: float = DEFAULT_ROUGHNESS) -> float:
    """Film coefficient h_w (W/(m2 K)) of the bulk flow against the pipe wall."""
    if u <= 0 or diameter <= 0:
        raise ThermoError("velocity and diameter must be positive")
    re = fluid.density * u * diameter / fluid.dynamic_viscosity
    f = friction_factor(re, roughness / diameter)
    return nusselt(re, fluid.prandtl, f) * fluid.conductivity / diameter


def soil_resistance(depth: float, r_c: float, length: float, k_soil: float) -> float:
    """Resistance (K/W) of the soil between the casing surface and the ground surface."""
    if depth < r_c:
        raise ThermoError(f"burial depth {depth} is smaller than casing radius {r_c}")
    if length <= 0 or k_soil <= 0:
        raise ThermoError("length and soil conductivity must be positive")
    ratio = depth / r_c
    return math.log(ratio + math.sqrt(ratio * ratio - 1.0)) / (2.0 * math.pi * length * k_soil)


def resistances(geom: PipeGeometry, steel: LayerProps, insulation: LayerProps,
                casing: LayerProps, h_w: float, k_soil: float) -> Resistances:
    """Four layer-to-layer resistances, each split at the mid-radius of a layer."""
    if h_w <= 0:
        raise ThermoError("h_w must be positive")
    two_pi_l = 2.0 * math.pi * geom.length
    r_w, r_s, r_i, r_c = geom.r_w, geom.r_s, geom.r_i, geom.r_c
    r_ws = (r_s - r_w) / 2.0
    r_si = (r_i - r_s) / 2.0
    r_ic = (r_c - r_i) / 2.0
    k_s, k_i, k_c = steel.conductivity, insulation.conductivity, casing.conductivity

    ws = 1.0 / (two_pi_l * r_w * h_w) + math.log((r_w + r_ws) / r_w) / (two_pi_l * k_s)
    si = math.log(r_s / (r_s - r_ws)) / (two_pi_l * k_s) + math.log((r_s + r_si) / r_s) / (two_pi_l * k_i)
    ic = math.log(r_i / (r_i - r_si)) / (two_pi_l * k_i) + math.log((r_i + r_ic) / r_i) / (two_pi_l * k_c)
    cg = (math.log(r_c / (r_c - r_ic)) / (two_pi_l * k_c)
          + soil_resistance(geom.depth, r_c, geom.length, k_soil))
    return Resistances(ws, si, ic, cg)
