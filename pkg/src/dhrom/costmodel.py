"""Flop-count cost models of the two propagators and a wall-clock harness.

One explicit step of the full-order model with ``P`` unknowns is counted
as a dense matrix-vector product plus two scaled vector additions,
``2P(P+2)`` flops. Step ``k`` of the reduced-order model is an inner
product of length ``k`` plus the ground term, ``2k+1`` flops, so ``Q``
steps cost ``(Q+1)^2 - 1``.
"""
from __future__ import annotations

import gc
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np


def c_fom(P: int, Q: int):
    if P < 1 or Q < 1:
        raise ValueError("P and Q must be at least 1")
    return 2 * P * (P + 2) * Q


def c_rom(Q: int):
    if Q < 1:
        raise ValueError("Q must be at least 1")
    return (Q + 1) ** 2 - 1


def p_min(Q: float) -> float:
    """DOF count above which the full-order model is the more expensive one."""
    if Q < 1:
        raise ValueError("Q must be at least 1")
    return (Q + 1) / math.sqrt(2 * Q)


def q_max(P: float) -> float:
    """Step count below which the reduced-order model is the cheaper one (about ``2P^2``)."""
    if P < 1:
        raise ValueError("P must be at least 1")
    return P * (P + math.sqrt(P * P - 1) - 1)


def ratio(P: float, Q: float) -> float:
    """Improvement factor ``2 P^2 Q / (Q+1)^2`` of the reduced-order model."""
    return 2.0 * P * P * Q / (Q + 1.0) ** 2


def adjusted_ratio(R: float, C_rom: float, C_ov: float) -> float:
    """Improvement factor once a fixed overhead ``C_ov`` is added to the ROM cost."""
    if C_ov < 0 or C_rom <= 0:
        raise ValueError("need C_rom > 0 and C_ov >= 0")
    A = C_rom / (C_ov + C_rom)
    return A * (R - 1.0) + 1.0


@dataclass(frozen=True)
class CostReport:
    P: int
    Q: int
    C_fom: int
    C_rom: int
    P_min: float
    Q_max: float
    R: float
    C_ov: Optional[float] = None
    A: Optional[float] = None
    R_adjusted: Optional[float] = None

    @classmethod
    def build(cls, P: int, Q: int, C_ov: Optional[float] = None) -> "CostReport":
        R = ratio(P, Q)
        cr = c_rom(Q)
        A = Ra = None
        if C_ov is not None:
            A = cr / (C_ov + cr)
            Ra = adjusted_ratio(R, cr, C_ov)
        return cls(P, Q, c_fom(P, Q), cr, p_min(Q), q_max(P), R, C_ov, A, Ra)


def regime_grid(P_values, Q_values) -> np.ndarray:
    """``sign(C_FOM - C_ROM)`` on the grid, rows indexed by ``P`` and columns by ``Q``."""
    out = np.empty((len(P_values), len(Q_values)), dtype=int)
    for i, P in enumerate(P_values):
        for j, Q in enumerate(Q_values):
            d = c_fom(int(P), int(Q)) - c_rom(int(Q))
            out[i, j] = (d > 0) - (d < 0)
    return out


@dataclass(frozen=True)
class BenchResult:
    times: tuple[float, ...]
    P: int = 0
    Q: int = 0

    def __post_init__(self):
        if len(self.times) < 1:
            raise ValueError("a benchmark needs at least one run")

    @property
    def runs(self) -> int:
        return len(self.times)

    @property
    def mean(self) -> float:
        return float(np.mean(self.times))

    @property
    def best(self) -> float:
        return float(min(self.times))

    @property
    def worst(self) -> float:
        return float(max(self.times))


def _time_runs(kernel, runs: int) -> tuple[float, ...]:
    kernel()  # warm-up, discarded
    times = []
    enabled = gc.isenabled()
    gc.disable()  # as in timeit: collector pauses would land in random runs
    try:
        for _ in range(runs):
            t0 = time.perf_counter()
            kernel()
            times.append(time.perf_counter() - t0)
    finally:
        if enabled:
            gc.enable()
    return tuple(times)


def fom_kernel(sys_, steps: int, dt: float, dense: bool = True):
    """Closure running ``steps`` explicit steps; assembly happens here, outside the timed call."""
    S, c1, c2 = sys_.propagator(dt)
    S = S.toarray() if dense else S
    x0 = np.zeros(sys_.size)

    def run():
        x = x0
        for _ in range(steps):
            x = S @ x + c1 + c2
            x[0] = 1.0
        return x

    return run


def rom_kernel(F1, F2, steps: int, dt: float):
    from .rom import RomState

    F1_tab = np.asarray(F1(dt * np.arange(1, steps + 1)), dtype=float)
    F2_tab = np.asarray(F2(dt * np.arange(1, steps + 1)), dtype=float)

    def run():
        state = RomState(0.0, dt, F1_tab, F2_tab)
        y = 0.0
        for _ in range(steps):
            y = state.output()
            state.push(1.0, 0.0)
        return y

    return run


def bench(kernel: str, config, runs: int = 5, dx: float = 0.5, steps: int = 3600,
          dt: Optional[float] = None, dense: bool = True, transfer_functions=None) -> BenchResult:
    """Wall-clock time of the pure stepping loop of one pipe model.

    ``kernel="fom"`` times ``steps`` explicit steps on the grid with spacing
    ``dx`` (default step: the positivity bound of the scheme);
    ``kernel="rom"`` times ``steps`` rolling steps of size ``dt`` (default
    1 s) with the given or freshly identified transfer functions.
    """
    from . import fom, rom

    if runs < 1:
        raise ValueError("runs must be at least 1")
    if kernel == "fom":
        sys_ = fom.assemble(config, fom.Discretization.from_dx(config.geometry.length, dx))
        run = fom_kernel(sys_, steps, dt or rom.positive_dt(sys_), dense)
        return BenchResult(_time_runs(run, runs), sys_.size, steps)
    if kernel == "rom":
        if transfer_functions is None:
            resp = rom.step_responses(config, dx=dx)
            transfer_functions = rom.identify_pair(resp, 48, 16)
        F1, F2 = transfer_functions
        sys_size = fom.assemble(config, fom.Discretization.from_dx(config.geometry.length, dx)).size
        run = rom_kernel(F1, F2, steps, dt or 1.0)
        return BenchResult(_time_runs(run, runs), sys_size, steps)
    raise ValueError(f"unknown kernel {kernel!r}; use 'fom' or 'rom'")
