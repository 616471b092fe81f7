"""Tree-shaped district-heating networks of pipe segments.

Each pipe is advanced either by the full-order model or by its identified
reduced-order model. Pipes are visited in topological order so that an
upstream outlet temperature at ``t_k`` feeds the downstream inlets at the
same ``t_k`` (block-diagram feed-through). An optional one-step-delay
coupling is available for sensitivity checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from . import fom, presets, rom
from .fom import PipeConfig
from .rom import InputProfile, TransferFunction


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Pipe:
    name: str
    config: PipeConfig
    upstream: str
    downstream: str

    @property
    def mass_flux(self) -> float:
        return self.config.mass_flux


@dataclass
class NetworkTopology:
    """Directed tree of pipes fed by one producer node."""

    producer: str
    pipes: list[Pipe]
    mass_tol: float = 1e-3

    def __post_init__(self):
        names = [p.name for p in self.pipes]
        if len(set(names)) != len(names):
            raise TopologyError("pipe names must be unique")
        self.order = self._topological_order()
        self._check_mass_balance()

    def _topological_order(self) -> list[str]:
        by_name = {p.name: p for p in self.pipes}
        graph: dict[str, set[str]] = {p.name: set() for p in self.pipes}
        for p in self.pipes:
            for q in self.pipes:
                if q.downstream == p.upstream:
                    graph[p.name].add(q.name)
        try:
            order = list(TopologicalSorter(graph).static_order())
        except CycleError as exc:
            raise TopologyError(f"network contains a cycle: {exc.args[1]}") from None
        feeders = {n for n in order if not graph[n]}
        for n in feeders:
            if by_name[n].upstream != self.producer:
                raise TopologyError(f"pipe {n} starts at {by_name[n].upstream!r}, which has no supply")
        return order

    def _check_mass_balance(self) -> None:
        nodes = {p.upstream for p in self.pipes} | {p.downstream for p in self.pipes}
        for node in nodes - {self.producer}:
            m_in = sum(p.mass_flux for p in self.pipes if p.downstream == node)
            out = [p for p in self.pipes if p.upstream == node]
            if not out:
                continue
            m_out = sum(p.mass_flux for p in out)
            if abs(m_in - m_out) > self.mass_tol * max(m_in, m_out):
                raise TopologyError(
                    f"mass flux not conserved at node {node!r}: in {m_in:.6g} kg/s, out {m_out:.6g} kg/s"
                )

    def pipe(self, name: str) -> Pipe:
        for p in self.pipes:
            if p.name == name:
                return p
        raise KeyError(name)

    def feeders_of(self, name: str) -> list[Pipe]:
        node = self.pipe(name).upstream
        return [p for p in self.pipes if p.downstream == node]


@dataclass
class SimulationPlan:
    dt: float
    t_end: float
    backend: str
    supply: InputProfile
    T_g: float = 10.0
    T0: Optional[float] = None
    dx: Union[float, dict[str, float]] = 0.5
    transfer_functions: dict[str, tuple[TransferFunction, TransferFunction]] = field(default_factory=dict)
    coupling: str = "direct"
    fom_substeps: Optional[int] = None

    def __post_init__(self):
        if self.backend not in ("fom", "rom"):
            raise ValueError("backend must be 'fom' or 'rom'")
        if self.coupling not in ("direct", "delay"):
            raise ValueError("coupling must be 'direct' or 'delay'")
        if not self.dt > 0 or self.t_end < 0:
            raise ValueError("need dt > 0 and t_end >= 0")
        if self.T0 is None:
            # the whole network starts from one uniform temperature
            self.T0 = float(self.supply(0.0))


@dataclass
class NetworkResult:
    t: np.ndarray
    outlets: dict[str, np.ndarray]
    dt_internal: float


def simulate_network(top: NetworkTopology, plan: SimulationPlan) -> NetworkResult:
    if plan.backend == "rom":
        return _simulate_rom(top, plan)
    return _simulate_fom(top, plan)


def _inlet_value(top: NetworkTopology, name: str, supply_now: float, outlets: dict[str, float]) -> float:
    feeders = top.feeders_of(name)
    if not feeders:
        return supply_now
    total = sum(p.mass_flux for p in feeders)
    return sum(p.mass_flux * outlets[p.name] for p in feeders) / total


def _simulate_rom(top: NetworkTopology, plan: SimulationPlan) -> NetworkResult:
    missing = [p.name for p in top.pipes if p.name not in plan.transfer_functions]
    if missing:
        raise rom.IdentificationError(
            f"no transfer functions for pipe(s) {', '.join(missing)}; run identification first"
        )
    n = int(math.floor(plan.t_end / plan.dt + 1e-9))
    states = {}
    for p in top.pipes:
        F1, F2 = plan.transfer_functions[p.name]
        states[p.name] = rom.RomState.create(F1, F2, plan.dt, max(n, 1), plan.T0)
    t = plan.dt * np.arange(n + 1)
    out = {p.name: np.empty(n + 1) for p in top.pipes}
    prev = {p.name: plan.T0 for p in top.pipes}
    for k in range(n + 1):
        supply_k = float(plan.supply(t[k]))
        current: dict[str, float] = {}
        for name in top.order:
            st = states[name]
            y = st.output() + plan.T0
            current[name] = y
            out[name][k] = y
            if k < n:
                source = current if plan.coupling == "direct" else prev
                st.push(_inlet_value(top, name, supply_k, source), plan.T_g)
        prev = current
    return NetworkResult(t, out, plan.dt)


def _simulate_fom(top: NetworkTopology, plan: SimulationPlan) -> NetworkResult:
    systems = []
    for p in top.pipes:
        dx = plan.dx[p.name] if isinstance(plan.dx, dict) else plan.dx
        disc = fom.Discretization.from_dx(p.config.geometry.length, dx)
        systems.append(fom.assemble(p.config, disc))
    dt_pos = min(rom.positive_dt(s) for s in systems)
    dt_max = min(s.dt_max for s in systems)
    n_sub = plan.fom_substeps or max(1, math.ceil(plan.dt / dt_pos))
    dt_int = plan.dt / n_sub
    if dt_int > dt_max * (1 + 1e-12):
        raise fom.StabilityError(
            f"internal step {dt_int:g} s exceeds the stability limit {dt_max:g} s"
        )
    # one block-diagonal system; inlet rows are overwritten every step
    S = sp.block_diag([s.propagator(dt_int)[0] for s in systems], format="csr")
    c2 = np.concatenate([s.propagator(dt_int)[2] for s in systems])
    offsets = np.cumsum([0] + [s.size for s in systems])
    idx = {p.name: i for i, p in enumerate(top.pipes)}
    inlet_row = {p.name: offsets[idx[p.name]] for p in top.pipes}
    outlet_row = {p.name: offsets[idx[p.name]] + systems[idx[p.name]].outlet for p in top.pipes}

    T = np.full(offsets[-1], float(plan.T0))
    n = int(math.floor(plan.t_end / plan.dt + 1e-9))
    total = n * n_sub
    t = plan.dt * np.arange(n + 1)
    out = {p.name: np.empty(n + 1) for p in top.pipes}
    for p in top.pipes:
        out[p.name][0] = T[outlet_row[p.name]]
    T_g = float(plan.T_g)
    prev_out = {p.name: T[outlet_row[p.name]] for p in top.pipes}
    for j in range(total):
        tj = j * dt_int
        supply_j = float(plan.supply(tj))
        cur_out = {name: T[outlet_row[name]] for name in top.order}
        source = cur_out if plan.coupling == "direct" else prev_out
        inlets = {name: _inlet_value(top, name, supply_j, source) for name in top.order}
        T = S @ T + T_g * c2
        for name, v in inlets.items():
            T[inlet_row[name]] = v
        prev_out = cur_out
        if (j + 1) % n_sub == 0:
            k = (j + 1) // n_sub
            for p in top.pipes:
                out[p.name][k] = T[outlet_row[p.name]]
    return NetworkResult(t, out, dt_int)


def project_linear(t_src, values, t_target) -> np.ndarray:
    """Linear interpolation onto ``t_target``; extrapolation is refused."""
    t_src = np.asarray(t_src, dtype=float)
    t_target = np.asarray(t_target, dtype=float)
    eps = 1e-9 * max(1.0, abs(t_src[-1]))
    if t_target.min() < t_src[0] - eps or t_target.max() > t_src[-1] + eps:
        raise ValueError(
            f"target grid [{t_target.min():g}, {t_target.max():g}] is outside the source grid "
            f"[{t_src[0]:g}, {t_src[-1]:g}]"
        )
    return np.interp(t_target, t_src, values)


F1_ORDERS = tuple(range(8, 129, 4))
F1_TARGET = 1e-3
F2_ORDER = 8


def identify_network(top: NetworkTopology, dx: float = 0.5, n1: Optional[dict[str, int]] = None,
                     n2: int = F2_ORDER, target: float = F1_TARGET):
    """Identify ``(F1, F2)`` for every pipe.

    Without explicit ``n1`` the inlet order of each pipe is the smallest
    order on ``F1_ORDERS`` whose reconstruction RMSE meets ``target``.
    Returns the transfer functions and the chosen orders.
    """
    tfs, orders = {}, {}
    for p in top.pipes:
        resp = rom.step_responses(p.config, dx=dx)
        if n1 and p.name in n1:
            order = n1[p.name]
        else:
            curve = rom.rmse_curve(resp.t_inlet, resp.inlet, F1_ORDERS)
            order = rom.choose_order(curve, target)
        tfs[p.name] = rom.identify_pair(resp, order, n2)
        orders[p.name] = order
    return tfs, orders


# Bundled System 1: producer -> P1 -> junction -> (P2 -> user 1, P3 -> user 2)
SYSTEM1_MASS_FLUX = 2.1884


def system1(m1: float = SYSTEM1_MASS_FLUX, m2: Optional[float] = None,
            m3: Optional[float] = None) -> NetworkTopology:
    m2 = m1 / 2 if m2 is None else m2
    m3 = m1 / 2 if m3 is None else m3
    return NetworkTopology("producer", [
        Pipe("P1", presets.buried_pipe(200.0, presets.DN40, mass_flux=m1), "producer", "junction"),
        Pipe("P2", presets.buried_pipe(300.0, presets.DN25, mass_flux=m2), "junction", "user1"),
        Pipe("P3", presets.buried_pipe(500.0, presets.DN25, mass_flux=m3), "junction", "user2"),
    ])


# Synthetic daily supply temperature (degC) at hourly breakpoints, t = 0..24 h:
# night setback, morning peak, midday dip and evening peak.
DAILY_SUPPLY = np.array([
    70.0, 70.0, 69.5, 69.5, 70.5, 73.0, 77.0, 80.0, 80.5, 79.0, 77.0, 75.5, 74.5,
    74.0, 74.5, 75.5, 77.0, 79.0, 80.0, 80.0, 78.5, 76.0, 73.0, 71.0, 70.0,
])


def daily_supply_profile() -> InputProfile:
    return InputProfile(3600.0 * np.arange(len(DAILY_SUPPLY)), DAILY_SUPPLY, "linear")
