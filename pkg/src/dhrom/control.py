"""PI control of a single pipe with the reduced-order model as plant.

Temperatures handed to and returned from this module are absolute; the
control law itself acts on temperatures relative to the uniform initial
temperature ``T0`` of the plant, so with ``T0 = 0`` the two coincide.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rom
from .rom import InputProfile, TransferFunction


class TuningError(RuntimeError):
    pass


@dataclass(frozen=True)
class PIGains:
    K_p: float
    K_i: float

    def __post_init__(self):
        if not (self.K_p >= 0 and self.K_i >= 0):
            raise ValueError("PI gains must be non-negative")


@dataclass(frozen=True)
class ControllerState:
    """Accumulated error (degC s), last output and optional output bounds."""

    integral: float = 0.0
    output: float = 0.0
    bounds: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.bounds is not None and not self.bounds[0] <= self.bounds[1]:
            raise ValueError("lower output bound exceeds upper bound")


def pi_step(ctrl: ControllerState, gains: PIGains, e: float, dt: float) -> tuple[ControllerState, float]:
    """Advance the integral by ``e*dt`` and return ``K_p e + K_i integral``.

    With bounds set the output is clamped and the integral is frozen while
    the clamp is active and the error would drive it further out.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    integral = ctrl.integral + e * dt
    u = gains.K_p * e + gains.K_i * integral
    if ctrl.bounds is not None:
        lo, hi = ctrl.bounds
        if (u > hi and e > 0) or (u < lo and e < 0):
            integral = ctrl.integral
            u = gains.K_p * e + gains.K_i * integral
        u = min(max(u, lo), hi)
    return replace(ctrl, integral=integral, output=u), u


def ziegler_nichols(K_u: float, tau_u: float) -> PIGains:
    """Classic PI tuning from the ultimate gain and period."""
    if not (K_u > 0 and tau_u > 0):
        raise ValueError("K_u and tau_u must be positive")
    return PIGains(0.45 * K_u, 0.54 * K_u / tau_u)


@dataclass(frozen=True)
class Plant:
    F1: TransferFunction
    F2: TransferFunction
    T0: float = 0.0
    T_g: float = 0.0

    def input_at_rest(self, setpoint: float) -> float:
        """Inlet temperature holding the outlet at ``setpoint`` in equilibrium."""
        rel = (setpoint - self.T0) - (self.T_g - self.T0) * self.F2.asymptote
        return self.T0 + rel / self.F1.asymptote


@dataclass(frozen=True)
class Scenario:
    setpoint: InputProfile
    plant: Plant
    t_end: float
    dt: float = 1.0
    bounds: Optional[tuple[float, float]] = None
    band: float = 1.0

    def __post_init__(self):
        if not self.dt > 0 or self.t_end < 0:
            raise ValueError("need dt > 0 and t_end >= 0")


@dataclass
class SegmentMetrics:
    start: float
    end: float
    setpoint: float
    overshoot: float
    settling_time: Optional[float]


@dataclass
class ScenarioResult:
    t: np.ndarray
    T_in: np.ndarray
    T_out: np.ndarray
    setpoint: np.ndarray
    integral: np.ndarray
    segments: list[SegmentMetrics] = field(default_factory=list)

    @property
    def overshoot(self) -> float:
        return max((s.overshoot for s in self.segments), default=0.0)

    @property
    def settling_time(self) -> Optional[float]:
        """Settling time of the first segment."""
        return self.segments[0].settling_time if self.segments else None


def _closed_loop(plant: Plant, setpoint, gains: PIGains, dt: float, t_end: float,
                 bounds=None):
    n = int(math.floor(t_end / dt + 1e-9))
    state = rom.RomState.create(plant.F1, plant.F2, dt, max(n, 1), plant.T0)
    ctrl = ControllerState(bounds=bounds)
    t = dt * np.arange(n + 1)
    sp = np.broadcast_to(np.asarray(setpoint(t) if callable(setpoint) else setpoint, dtype=float), t.shape)
    T_in = np.empty(n + 1)
    T_out = np.empty(n + 1)
    integral = np.empty(n + 1)
    for k in range(n + 1):
        y = state.output() + plant.T0
        ctrl, u = pi_step(ctrl, gains, float(sp[k] - y), dt)
        T_out[k] = y
        T_in[k] = plant.T0 + u
        integral[k] = ctrl.integral
        if k < n:
            state.push(T_in[k], plant.T_g)
    return t, T_in, T_out, np.array(sp), integral


def segment_metrics(t, T_out, setpoint: InputProfile, T_start: float, band: float) -> list[SegmentMetrics]:
    """Overshoot past each new setpoint level and time to enter ``band`` for good."""
    times = setpoint.times
    out = []
    previous = T_start
    for j, start in enumerate(times):
        if start > t[-1]:
            break
        last = j + 1 == len(times)
        end = float(t[-1]) if last else times[j + 1]
        level = float(setpoint.values[j])
        mask = (t >= start) & ((t <= end) if last else (t < end))
        y = T_out[mask]
        direction = 1.0 if level >= previous else -1.0
        overshoot = max(0.0, float(np.max(direction * (y - level)))) if y.size else 0.0
        inside = np.abs(y - level) <= band
        settle = None
        if inside.size and inside[-1]:
            outside = np.flatnonzero(~inside)
            first = 0 if outside.size == 0 else outside[-1] + 1
            settle = float(t[mask][first] - start)
        out.append(SegmentMetrics(float(start), float(end), level, overshoot, settle))
        previous = level
    return out


def run_scenario(sc: Scenario, gains: PIGains) -> ScenarioResult:
    t, T_in, T_out, sp, integral = _closed_loop(sc.plant, sc.setpoint, gains, sc.dt, sc.t_end, sc.bounds)
    result = ScenarioResult(t, T_in, T_out, sp, integral)
    result.segments = segment_metrics(t, T_out, sc.setpoint, sc.plant.T0, sc.band)
    return result


def turning_points(x, h: float) -> np.ndarray:
    """Indices of alternating extrema; a reversal counts once the signal retreats by more than ``h``."""
    x = np.asarray(x, dtype=float)
    out = []
    cand = 0
    direction = 0  # +1 while tracking a maximum, -1 while tracking a minimum
    for i in range(1, len(x)):
        if direction == 0:
            if abs(x[i] - x[0]) > h:
                direction = 1 if x[i] > x[0] else -1
                cand = i
        elif direction * (x[i] - x[cand]) >= 0:
            cand = i
        elif abs(x[i] - x[cand]) > h:
            out.append(cand)
            direction = -direction
            cand = i
    return np.array(out, dtype=int)


@dataclass
class Oscillation:
    ratio: float
    period: float
    periods_measured: int


def oscillation(t, x, skip: int = 1, periods: int = 3, rel_h: float = 1e-3) -> Optional[Oscillation]:
    """Peak-to-peak ratio of successive half cycles and the oscillation period.

    Ripples smaller than ``rel_h`` times the signal range are not counted
    as extrema. The first ``skip`` extrema (start-up transient) are ignored
    and the ratio is averaged geometrically over ``periods`` full periods.
    """
    x = np.asarray(x, dtype=float)
    idx = turning_points(x, rel_h * float(np.ptp(x)))
    need = skip + 2 * periods + 1
    if len(idx) < need:
        return None
    ext = idx[skip:need]
    pp = np.abs(np.diff(x[ext]))
    if np.any(pp <= 0):
        return None
    ratio = float(np.exp(np.mean(np.log(pp[1:] / pp[:-1]))))
    period = float(np.mean(np.diff(t[ext][::2])))
    return Oscillation(ratio, period, periods)


def _p_only_oscillation(plant: Plant, K_p: float, dt: float, horizon: float, setpoint: float):
    t, T_in, _, _, _ = _closed_loop(plant, setpoint, PIGains(K_p, 0.0), dt, horizon)
    return oscillation(t, T_in)


def find_ultimate_gain(plant: Plant, K_p_range: tuple[float, float] = (0.2, 3.0), dt: float = 1.0,
                       horizon: float = 3000.0, setpoint: float = 1.0, scan: int = 15,
                       tol: float = 1e-4) -> tuple[float, float]:
    """Ultimate gain and period of the proportional-only loop.

    A coarse scan of ``K_p`` finds the first gain whose oscillation no
    longer decays (peak-to-peak ratio at least 0.95); bisection on the
    ratio then locates the gain with sustained oscillation (ratio 1).
    """
    lo, hi = K_p_range
    if not 0 < lo < hi:
        raise ValueError("K_p range must satisfy 0 < lo < hi")

    def ratio(k):
        osc = _p_only_oscillation(plant, k, dt, horizon, setpoint)
        return (0.0, math.nan) if osc is None else (osc.ratio, osc.period)

    grid = np.linspace(lo, hi, scan)
    below = None
    above = None
    for k in grid:
        r, _ = ratio(k)
        if r >= 0.95:
            above = k
            break
        below = k
    if above is None:
        raise TuningError(
            f"no sustained oscillation for K_p in [{lo:g}, {hi:g}] ({scan} gains scanned)"
        )
    if below is None:
        raise TuningError(f"the loop already oscillates at K_p = {lo:g}; lower the scan range")
    while above - below > tol:
        mid = 0.5 * (below + above)
        if ratio(mid)[0] >= 1.0:
            above = mid
        else:
            below = mid
    r, period = ratio(above)
    if not 0.95 <= r <= 1.05:
        raise TuningError(f"oscillation at K_p = {above:g} is not sustained (ratio {r:.3f})")
    return float(above), float(period)


def overshoot_of(plant: Plant, gains: PIGains, setpoint: float, dt: float, t_end: float) -> float:
    _, _, T_out, _, _ = _closed_loop(plant, setpoint, gains, dt, t_end)
    return float(np.max(T_out) - setpoint)


def optimize_ki(plant: Plant, K_p: float, K_i_range: tuple[float, float] = (0.002, 0.01),
                setpoint: float = 60.0, dt: float = 1.0, overshoot_tol: float = 0.5,
                t_end: float = 3600.0, tol: float = 1e-5) -> float:
    """Largest ``K_i`` in the range whose step response stays below ``setpoint + overshoot_tol``."""
    lo, hi = K_i_range
    if not 0 <= lo < hi:
        raise ValueError("K_i range must satisfy 0 <= lo < hi")

    def ok(k):
        return overshoot_of(plant, PIGains(K_p, k), setpoint, dt, t_end) <= overshoot_tol

    if not ok(lo):
        raise TuningError(f"K_i = {lo:g} already overshoots by more than {overshoot_tol:g} degC")
    if ok(hi):
        raise TuningError(f"K_i = {hi:g} does not overshoot; widen the range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def scenario1(plant: Plant, setpoint: float = 60.0, t_end: float = 1800.0) -> Scenario:
    """Single step of the setpoint at t = 0."""
    return Scenario(InputProfile.constant(setpoint), plant, t_end)


# Approximate hourly demand: domestic hot water (60), fast (35) and moderate (10) space heating.
SCENARIO2_TIMES = np.array([0.0, 600.0, 1200.0, 1440.0, 2400.0, 2640.0])
SCENARIO2_LEVELS = np.array([60.0, 35.0, 60.0, 10.0, 35.0, 60.0])


def scenario2(plant: Plant, t_end: float = 3600.0) -> Scenario:
    return Scenario(InputProfile(SCENARIO2_TIMES, SCENARIO2_LEVELS), plant, t_end)
