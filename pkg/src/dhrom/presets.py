"""Bundled pipe configurations.

Dimensions follow standard steel carrier pipes with series-1 pre-insulated
casings (DN25: 33.7 x 2.6 mm in a 90 mm casing; DN40: 48.3 x 2.6 mm in a
110 mm casing). Water viscosity and burial depth are not tabulated with the
other properties; the values below are for water near 26 degC and a typical
0.6 m cover to centerline.
"""
from __future__ import annotations

from .fom import PipeConfig
from .thermo import FluidProps, LayerProps, PipeGeometry

WATER = FluidProps(density=996.7, heat_capacity=4066.7, conductivity=0.605, dynamic_viscosity=8.6e-4)
STEEL = LayerProps(density=7900.0, heat_capacity=502.5, conductivity=51.0)
PUR_INSULATION = LayerProps(density=30.0, heat_capacity=1400.0, conductivity=0.027)
PE_CASING = LayerProps(density=944.0, heat_capacity=2250.0, conductivity=0.43)
K_SOIL = 1.6
BURIAL_DEPTH = 0.6

RIG_STEEL = LayerProps(density=7800.0, heat_capacity=480.0, conductivity=45.0)
TUBOLIT = LayerProps(density=25.0, heat_capacity=2450.7, conductivity=0.04)

DN25 = dict(r_w=0.01425, r_s=0.01685, r_i=0.042, r_c=0.045)
DN40 = dict(r_w=0.02155, r_s=0.02415, r_i=0.052, r_c=0.055)

SYSTEM2_MASS_FLUX = 1.0942  # kg/s


def buried_pipe(length: float, dn: dict = DN25, *, velocity: float | None = None,
                mass_flux: float | None = None) -> PipeConfig:
    geom = PipeGeometry(length=length, depth=BURIAL_DEPTH, **dn)
    kwargs = dict(geometry=geom, fluid=WATER, steel=STEEL, insulation=PUR_INSULATION,
                  casing=PE_CASING, k_soil=K_SOIL)
    if mass_flux is not None:
        return PipeConfig.from_mass_flux(mass_flux, **kwargs)
    if velocity is None:
        raise ValueError("give either velocity or mass_flux")
    return PipeConfig(velocity=velocity, **kwargs)


def table2_pipe() -> PipeConfig:
    """DN25, L = 100 m, u = 1.5 m/s: the single-pipe identification case."""
    return buried_pipe(100.0, DN25, velocity=1.5)


def system2_pipe() -> PipeConfig:
    """DN25, L = 100 m, mass flux 1.0942 kg/s: the controlled single-pipe system."""
    return buried_pipe(100.0, DN25, mass_flux=SYSTEM2_MASS_FLUX)


def rig_pipe(velocity: float = 0.27, h_ambient: float = 10.0) -> PipeConfig:
    """Exposed laboratory pipe: 39 m steel pipe with 13 mm elastomer insulation."""
    # r_c / depth are placeholders; the 2-layer model never uses them
    geom = PipeGeometry(length=39.0, r_w=0.02624, r_s=0.03015, r_i=0.04315,
                        r_c=0.04316, depth=1.0)
    return PipeConfig(geometry=geom, fluid=WATER, steel=RIG_STEEL, insulation=TUBOLIT,
                      casing=None, k_soil=K_SOIL, velocity=velocity, layer_count=2,
                      h_ambient=h_ambient)
