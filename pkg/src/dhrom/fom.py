"""Explicit finite-difference full-order model of a buried pre-insulated pipe.

The pipe is split into ``n_x`` axial nodes. Each node carries one temperature
per field (water, steel, insulation and, for buried pipes, casing). Water is
advected with first-order upwinding; every field conducts axially with a
central stencil, and adjacent fields exchange heat radially through lumped
resistances. Collected over all nodes, this gives the semi-discrete LTI
system ``dT/dt = A T + T_in b1 + T_g b2``. The system is marched with
explicit Euler.

State ordering is field-major: ``[T^w_1..T^w_n, T^s_1..T^s_n, ...]``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import thermo
from .thermo import FluidProps, LayerProps, PipeGeometry, Resistances


class StabilityError(ValueError):
    """Time step exceeds the explicit stability limit."""


@dataclass(frozen=True)
class PipeConfig:
    """One pipe segment: geometry, materials, fluid and flow.

    ``layer_count`` is 4 for a buried pipe (water, steel, insulation, casing)
    and 2 for the exposed laboratory rig: steel and insulation only, with
    the insulation losing heat to ambient air (passed as ``T_g``) through
    an external film ``h_ambient``.
    """

    geometry: PipeGeometry
    fluid: FluidProps
    steel: LayerProps
    insulation: LayerProps
    casing: Optional[LayerProps]
    k_soil: float
    velocity: float
    layer_count: int = 4
    h_ambient: float = 10.0  # W/(m2 K), rig only

    def __post_init__(self):
        if self.layer_count not in (2, 4):
            raise ValueError("layer_count must be 2 or 4")
        if self.layer_count == 4 and self.casing is None:
            raise ValueError("a 4-layer pipe needs casing properties")
        if self.velocity < 0:
            raise ValueError("velocity must be non-negative")
        if self.k_soil <= 0:
            raise ValueError("soil conductivity must be positive")

    @classmethod
    def from_mass_flux(cls, mass_flux: float, **kwargs) -> "PipeConfig":
        geom, fluid = kwargs["geometry"], kwargs["fluid"]
        u = mass_flux / (fluid.density * math.pi * geom.r_w**2)
        return cls(velocity=u, **kwargs)

    @property
    def mass_flux(self) -> float:
        return self.fluid.density * self.velocity * math.pi * self.geometry.r_w**2

    @property
    def n_fields(self) -> int:
        return 4 if self.layer_count == 4 else 3

    def with_length(self, length: float) -> "PipeConfig":
        g = self.geometry
        geom = PipeGeometry(length, g.r_w, g.r_s, g.r_i, g.r_c, g.depth, g.roughness)
        return PipeConfig(geom, self.fluid, self.steel, self.insulation, self.casing,
                          self.k_soil, self.velocity, self.layer_count, self.h_ambient)

    def resistances(self) -> Resistances:
        g = self.geometry
        h_w = thermo.convective_coeff(self.fluid, self.velocity, g.diameter, g.roughness)
        if self.layer_count == 4:
            return thermo.resistances(g, self.steel, self.insulation, self.casing, h_w, self.k_soil)
        # rig: casing removed; insulation faces ambient air through a film
        two_pi_l = 2.0 * math.pi * g.length
        r_ws = (g.r_s - g.r_w) / 2.0
        r_si = (g.r_i - g.r_s) / 2.0
        k_s, k_i = self.steel.conductivity, self.insulation.conductivity
        ws = 1.0 / (two_pi_l * g.r_w * h_w) + math.log((g.r_w + r_ws) / g.r_w) / (two_pi_l * k_s)
        si = (math.log(g.r_s / (g.r_s - r_ws)) / (two_pi_l * k_s)
              + math.log((g.r_s + r_si) / g.r_s) / (two_pi_l * k_i))
        ia = (math.log(g.r_i / (g.r_i - r_si)) / (two_pi_l * k_i)
              + 1.0 / (two_pi_l * g.r_i * self.h_ambient))
        # cg is unused for the rig; ia takes the role of the outermost link
        return Resistances(ws, si, ia, ia)

    def diffusivities(self) -> list[float]:
        alphas = [self.fluid.diffusivity, self.steel.diffusivity, self.insulation.diffusivity]
        if self.layer_count == 4:
            alphas.append(self.casing.diffusivity)
        return alphas

    def fingerprint(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Discretization:
    n_x: int
    dx: float
    dt: Optional[float] = None

    def __post_init__(self):
        if self.n_x < 2:
            raise ValueError("need at least two nodes")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @classmethod
    def from_dx(cls, length: float, dx: float, dt: Optional[float] = None) -> "Discretization":
        n_x = int(round(length / dx)) + 1
        return cls(n_x, length / (n_x - 1), dt)

    @classmethod
    def from_nodes(cls, length: float, n_x: int, dt: Optional[float] = None) -> "Discretization":
        return cls(n_x, length / (n_x - 1), dt)


@dataclass
class StateVector:
    values: np.ndarray
    t: float = 0.0

    @classmethod
    def uniform(cls, sys: "LinearSystem", temperature: float, t: float = 0.0) -> "StateVector":
        return cls(np.full(sys.size, float(temperature)), t)

    def field(self, sys: "LinearSystem", index: int) -> np.ndarray:
        return self.values[index * sys.n_x:(index + 1) * sys.n_x]


@dataclass(frozen=True)
class LinearSystem:
    """Semi-discrete LTI form. ``A`` is sparse (CSR); ``outlet`` indexes T^w at x=L."""

    A: sp.csr_matrix
    b1: np.ndarray
    b2: np.ndarray
    n_x: int
    n_fields: int
    dx: float
    velocity: float
    alpha_min: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.n_x * self.n_fields

    @property
    def outlet(self) -> int:
        return self.n_x - 1

    @property
    def dt_max(self) -> float:
        return _dt_limit(self.velocity, self.alpha_min, self.dx)

    def C(self) -> np.ndarray:
        c = np.zeros(self.size)
        c[self.outlet] = 1.0
        return c

    def dense(self) -> np.ndarray:
        return self.A.toarray()

    def propagator(self, dt: float):
        """Cached ``(S, dt*b1, dt*b2)`` with ``S = I + dt*A``."""
        key = float(dt)
        if key not in self._cache:
            S = (sp.identity(self.size, format="csr") + dt * self.A).tocsr()
            self._cache[key] = (S, dt * self.b1, dt * self.b2)
        return self._cache[key]


def _dt_limit(u: float, alpha_min: float, dx: float) -> float:
    rate = u / dx + 2.0 * alpha_min / dx**2
    return math.inf if rate == 0 else 1.0 / rate


def max_stable_dt(config: PipeConfig, disc: Discretization) -> float:
    """Explicit stability limit from convection and the smallest diffusivity.

    Returns ``inf`` when there is neither flow nor conduction.
    """
    return _dt_limit(config.velocity, min(config.diffusivities()), disc.dx)


def exchange_rates(config: PipeConfig, disc: Discretization) -> list[tuple[float, float]]:
    """Radial exchange rates (1/s) for each interface between adjacent fields.

    Interface ``m`` couples field ``m`` with field ``m+1`` (the last one
    couples the outermost field with the ground). Each entry is
    ``(rate seen by the inner field, rate seen by the outer field)``.
    Coefficients follow ``dx / (R * V * rho * c_p * L)`` with ``V`` the
    volume of one cell of the layer and ``R`` the resistance over ``L``.
    """
    g = config.geometry
    dx, L = disc.dx, g.length
    res = config.resistances()
    radii = [0.0, g.r_w, g.r_s, g.r_i] + ([g.r_c] if config.layer_count == 4 else [])
    props = [(config.fluid.density, config.fluid.heat_capacity), config.steel, config.insulation]
    if config.layer_count == 4:
        props.append(config.casing)
    heat_cap = []
    for m, p in enumerate(props):
        rho, cp = p if isinstance(p, tuple) else (p.density, p.heat_capacity)
        v_cell = math.pi * (radii[m + 1] ** 2 - radii[m] ** 2) * dx
        heat_cap.append(v_cell * rho * cp)
    links = [res.ws, res.si, res.ic, res.cg][:len(props)]
    out = []
    for m, r in enumerate(links):
        inner = dx / (r * heat_cap[m] * L)
        outer = dx / (r * heat_cap[m + 1] * L) if m + 1 < len(props) else 0.0
        out.append((inner, outer))
    return out


def assemble(config: PipeConfig, disc: Discretization) -> LinearSystem:
    """Build ``A``, ``b1``, ``b2`` for the given pipe and grid."""
    n, nf = disc.n_x, config.n_fields
    dx, u = disc.dx, config.velocity
    alphas = config.diffusivities()
    rates = exchange_rates(config, disc)
    size = n * nf
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    b1 = np.zeros(size)
    b2 = np.zeros(size)

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    for f in range(nf):
        a = alphas[f] / dx**2
        off = f * n
        for i in range(n):
            r = off + i
            if f == 0 and i == 0:
                # Dirichlet inlet, expressed as upwind inflow from T_in
                add(r, r, -u / dx)
                b1[r] = u / dx
                continue
            # axial conduction; ghost nodes copy the boundary value at both ends
            if 0 < i:
                add(r, r - 1, a)
                add(r, r, -a)
            if i < n - 1:
                add(r, r + 1, a)
                add(r, r, -a)
            if f == 0:
                add(r, r - 1, u / dx)
                add(r, r, -u / dx)
            # radial exchange with the inner neighbour field
            if f > 0:
                k_out = rates[f - 1][1]
                add(r, r - n, k_out)
                add(r, r, -k_out)
            # radial exchange with the outer neighbour field or the ground
            k_in = rates[f][0]
            add(r, r, -k_in)
            if f + 1 < nf:
                add(r, r + n, k_in)
            else:
                b2[r] = k_in

    A = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    A.sum_duplicates()
    return LinearSystem(A, b1, b2, n, nf, dx, u, min(alphas))


def step(sys: LinearSystem, state: StateVector, T_in: float, T_g: float, dt: float,
         check: bool = True) -> StateVector:
    """One explicit Euler step; the inlet water node is then pinned to ``T_in``."""
    if check and dt > sys.dt_max * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:g} s exceeds the stability limit dt_max={sys.dt_max:g} s")
    S, c1, c2 = sys.propagator(dt)
    new = S @ state.values + T_in * c1 + T_g * c2
    new[0] = T_in
    return StateVector(new, state.t + dt)


@dataclass
class SimulationResult:
    t: np.ndarray
    outlet: np.ndarray
    states: Optional[np.ndarray] = None


def simulate(sys: LinearSystem, state0: StateVector, T_in_profile, T_g_profile, dt: float,
             t_end: float, keep_states: bool = False, every: int = 1) -> SimulationResult:
    """March from ``state0`` to ``t_end`` sampling inputs at each ``t_j = j*dt``.

    Profiles are callables of time (``InputProfile`` or plain functions).
    Output is recorded every ``every`` steps, starting with the initial state.
    """
    if dt > sys.dt_max * (1.0 + 1e-12):
        raise StabilityError(f"dt={dt:g} s exceeds the stability limit dt_max={sys.dt_max:g} s")
    n_steps = int(math.floor(t_end / dt + 1e-9))
    S, c1, c2 = sys.propagator(dt)
    T = state0.values.astype(float).copy()
    out_idx = sys.outlet
    n_rec = n_steps // every + 1
    ts = np.empty(n_rec)
    ys = np.empty(n_rec)
    xs = np.empty((n_rec, sys.size)) if keep_states else None
    ts[0], ys[0] = state0.t, T[out_idx]
    if keep_states:
        xs[0] = T
    t_in = _sampler(T_in_profile)
    t_g = _sampler(T_g_profile)
    rec = 1
    for j in range(n_steps):
        tj = state0.t + j * dt
        Ti = t_in(tj)
        T = S @ T + Ti * c1 + t_g(tj) * c2
        T[0] = Ti
        if (j + 1) % every == 0:
            ts[rec] = state0.t + (j + 1) * dt
            ys[rec] = T[out_idx]
            if keep_states:
                xs[rec] = T
            rec += 1
    return SimulationResult(ts[:rec], ys[:rec], xs[:rec] if keep_states else None)


def _sampler(profile):
    if callable(profile):
        return profile
    value = float(profile)
    return lambda t: value


def equilibrium(sys: LinearSystem, T_in: float, T_g: float) -> StateVector:
    """Steady state ``A T = -(T_in b1 + T_g b2)``."""
    rhs = -(T_in * sys.b1 + T_g * sys.b2)
    T = spla.spsolve(sys.A.tocsc(), rhs)
    if not np.all(np.isfinite(T)):
        raise np.linalg.LinAlgError("system matrix is singular")
    return StateVector(np.asarray(T), math.inf)
