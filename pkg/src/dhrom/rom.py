"""Reduced-order pipe model built from unit step responses.

The outlet temperature (relative to a uniform initial temperature ``T_0``)
is a superposition of the inlet transfer function ``F1`` and the ground
transfer function ``F2``, each triggered by the step changes of the
corresponding input. Both transfer functions are identified from
step-response data and stored as Chebyshev expansions in time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .chebyshev import ChebSpectrum, TimeMap, evaluate, lobatto_nodes, make_time_map, transform

INLET = "inlet"
GROUND = "ground"


class IdentificationError(ValueError):
    pass


class HorizonExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class InputProfile:
    """Breakpoint sequence ``(t_j, v_j)`` with ``t_0 = 0``.

    ``mode="step"`` holds ``v_j`` on ``[t_j, t_{j+1})``; ``mode="linear"``
    interpolates between breakpoints. Both hold the last value afterwards.
    """

    times: np.ndarray
    values: np.ndarray
    mode: str = "step"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.ndim != 1 or times.shape != values.shape or len(times) == 0:
            raise ValueError("times and values must be 1-D arrays of equal, non-zero length")
        if times[0] != 0.0:
            raise ValueError("first breakpoint must be at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("breakpoint times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        if self.mode not in ("step", "linear"):
            raise ValueError("mode must be 'step' or 'linear'")

    @classmethod
    def constant(cls, value: float) -> "InputProfile":
        return cls(np.array([0.0]), np.array([float(value)]))

    @classmethod
    def unit_step(cls) -> "InputProfile":
        return cls.constant(1.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.mode == "linear":
            out = np.interp(t, self.times, self.values)
        else:
            idx = np.searchsorted(self.times, t, side="right") - 1
            out = self.values[np.clip(idx, 0, None)]
        return float(out) if out.ndim == 0 else out

    def increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Step times and jumps, with the first jump equal to ``v_0``."""
        if self.mode != "step":
            raise ValueError("increments are defined for step-wise profiles only")
        return self.times, np.diff(self.values, prepend=0.0)

    def shifted(self, offset: float) -> "InputProfile":
        """Profile delayed by ``offset``; the gap at the start is held at zero."""
        if offset == 0:
            return self
        return InputProfile(np.concatenate([[0.0], self.times + offset]),
                            np.concatenate([[0.0], self.values]), self.mode)

    def scaled(self, factor: float) -> "InputProfile":
        return InputProfile(self.times, self.values * factor, self.mode)

    def sampled(self, dt: float, t_end: float) -> np.ndarray:
        """Zero-order-hold samples at ``t_k = k dt`` for ``k = 0..floor(t_end/dt)``."""
        n = int(math.floor(t_end / dt + 1e-9))
        return np.asarray(self(np.arange(n + 1) * dt), dtype=float)


def combine(a: InputProfile, b: InputProfile, wa: float = 1.0, wb: float = 1.0) -> InputProfile:
    """Step profile ``wa*a + wb*b`` on the union of the breakpoints."""
    times = np.union1d(a.times, b.times)
    return InputProfile(times, wa * np.atleast_1d(a(times)) + wb * np.atleast_1d(b(times)), "step")


@dataclass(frozen=True)
class TransferFunction:
    spectrum: ChebSpectrum
    kind: str
    fingerprint: str = ""

    def __post_init__(self):
        if self.kind not in (INLET, GROUND):
            raise ValueError(f"kind must be {INLET!r} or {GROUND!r}")

    def __call__(self, t):
        return evaluate(self.spectrum, t)

    @property
    def order(self) -> int:
        return self.spectrum.order

    @property
    def asymptote(self) -> float:
        return self.spectrum.asymptote

    @property
    def start_residual(self) -> float:
        """``|F(0)|``; the fit does not pin the response to zero at t = 0."""
        return abs(self(0.0))

    def save(self, path) -> None:
        self.spectrum.save(path, {"kind": self.kind, "fingerprint": self.fingerprint or "-"})

    @classmethod
    def load(cls, path, expect_fingerprint: Optional[str] = None) -> "TransferFunction":
        spec, header = ChebSpectrum.load(path)
        fp = header.get("fingerprint", "-")
        fp = "" if fp == "-" else fp
        if expect_fingerprint is not None and fp and fp != expect_fingerprint:
            raise IdentificationError(
                f"{path}: transfer function was identified for pipe {fp}, not {expect_fingerprint}"
            )
        return cls(spec, header.get("kind", INLET), fp)


def training_samples(t, response, time_map: TimeMap) -> np.ndarray:
    """Response values at the Lobatto times ``t_k``, by linear interpolation.

    The ``theta = 1`` node (``t = inf``) takes the last recorded value.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(response, dtype=float)
    nodes, _ = lobatto_nodes(time_map.order)
    t_k = time_map.time(nodes[1:])
    samples = np.empty(time_map.order + 1)
    samples[0] = y[-1]
    samples[1:] = np.interp(t_k, t, y)
    return samples


def identify(t, response, order: int, t_max: Optional[float] = None, kind: str = INLET,
             fingerprint: str = "") -> TransferFunction:
    """Fit a transfer function of Chebyshev order ``order`` to a unit step response.

    ``t_max`` defaults to the end of the series. The series must reach the
    reference time ``0.9 * t_max`` at which the first interior node sits.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(response, dtype=float)
    if t.shape != y.shape or t.size < 2:
        raise IdentificationError("time and response series must have equal length >= 2")
    if t_max is None:
        t_max = float(t[-1])
    tmap = make_time_map(t_max, order)
    t_ref = tmap.alpha_ref * t_max
    if t[-1] < t_ref:
        raise IdentificationError(
            f"response ends at t={t[-1]:g} s, before the reference time {t_ref:g} s"
        )
    if t[-1] > t_max:
        keep = t <= t_max
        t, y = t[keep], y[keep]
    spec = transform(training_samples(t, y, tmap), tmap)
    return TransferFunction(spec, kind, fingerprint)


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        raise ValueError("rmse of empty series")
    if a.shape != b.shape:
        raise ValueError(f"series lengths differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def reconstruction_rmse(tf: TransferFunction, t, response) -> float:
    """RMSE between the expansion and the training response on its own time grid."""
    t = np.asarray(t, dtype=float)
    keep = t <= tf.spectrum.time_map.t_max
    return rmse(tf(t[keep]), np.asarray(response)[keep])


def rmse_curve(t, response, orders, t_max: Optional[float] = None, kind: str = INLET) -> dict[int, float]:
    return {n: reconstruction_rmse(identify(t, response, n, t_max, kind), t, response) for n in orders}


def choose_order(curve: dict[int, float], target: float) -> int:
    """Smallest order whose RMSE meets ``target``."""
    if not curve:
        raise ValueError("empty RMSE curve")
    ok = [n for n, e in curve.items() if e <= target]
    if not ok:
        best = min(curve, key=curve.get)
        raise IdentificationError(
            f"no order reaches RMSE <= {target:g}; best is N={best} with RMSE {curve[best]:.3g}"
        )
    return min(ok)


def respond_steps(F1: TransferFunction, F2: TransferFunction, in_steps: InputProfile,
                  g_steps: InputProfile, t):
    """Outlet response (relative to T_0) to step-wise relative inputs, by direct summation."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    for F, prof in ((F1, in_steps), (F2, g_steps)):
        times, jumps = prof.increments()
        for tj, dj in zip(times, jumps):
            if dj == 0.0:
                continue
            lag = t - tj
            active = lag > 0
            if np.any(active):
                out[active] += dj * F(lag[active])
    return out


@dataclass
class RomState:
    """Rolling state for fixed-step propagation.

    Holds the input increments seen so far and ``F1``/``F2`` tabulated at
    ``t_1..t_K``. ``output()`` gives the relative outlet temperature at the
    current level ``t_k``; it depends only on increments ``0..k-1``.
    """

    T0: float
    dt: float
    F1_table: np.ndarray
    F2_table: np.ndarray
    k: int = 0
    d_in: np.ndarray = field(default=None, repr=False)
    d_g: np.ndarray = field(default=None, repr=False)
    last_in: float = 0.0
    last_g: float = 0.0
    g_constant: bool = True

    def __post_init__(self):
        K = len(self.F1_table)
        if len(self.F2_table) != K:
            raise ValueError("F1 and F2 tables must have the same horizon")
        # tables are stored reversed so each inner product reads contiguous memory
        self._F1_rev = np.ascontiguousarray(self.F1_table[::-1])
        self._F2_rev = np.ascontiguousarray(self.F2_table[::-1])
        if self.d_in is None:
            self.d_in = np.zeros(K)
        if self.d_g is None:
            self.d_g = np.zeros(K)

    @classmethod
    def create(cls, F1: TransferFunction, F2: TransferFunction, dt: float, horizon: int,
               T0: float = 0.0) -> "RomState":
        levels = dt * np.arange(1, horizon + 1)
        return cls(float(T0), float(dt), np.asarray(F1(levels), dtype=float),
                   np.asarray(F2(levels), dtype=float))

    @property
    def horizon(self) -> int:
        return len(self.F1_table)

    @property
    def t(self) -> float:
        return self.k * self.dt

    def output(self) -> float:
        k = self.k
        if k == 0:
            return 0.0
        K = self.horizon
        if k > K:
            raise HorizonExhausted(
                f"ROM horizon of {K} steps exhausted; rebuild the state with a longer horizon"
            )
        y = float(np.dot(self._F1_rev[K - k:], self.d_in[:k]))
        if self.g_constant:
            y += self.F2_table[k - 1] * self.d_g[0]
        else:
            y += float(np.dot(self._F2_rev[K - k:], self.d_g[:k]))
        return y

    def push(self, T_in: float, T_g: float) -> None:
        k = self.k
        if k >= self.horizon:
            raise HorizonExhausted(
                f"ROM horizon of {self.horizon} steps exhausted; rebuild the state with a longer horizon"
            )
        rel_in = T_in - self.T0
        rel_g = T_g - self.T0
        self.d_in[k] = rel_in - self.last_in
        dg = rel_g - self.last_g
        self.d_g[k] = dg
        if k > 0 and dg != 0.0:
            self.g_constant = False
        self.last_in, self.last_g = rel_in, rel_g
        self.k = k + 1


def rom_step(state: RomState, T_in_k: float, T_g_k: float) -> tuple[RomState, float]:
    """Return the relative outlet temperature at ``t_k`` and record the inputs at ``t_k``."""
    y = state.output()
    state.push(T_in_k, T_g_k)
    return state, y


def simulate_rom(F1: TransferFunction, F2: TransferFunction, T_in, T_g, dt: float, t_end: float,
                 T0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Rolling propagation with zero-order-hold inputs; returns ``(t, T_out)`` in absolute units."""
    n = int(math.floor(t_end / dt + 1e-9))
    state = RomState.create(F1, F2, dt, max(n, 1), T0)
    t = dt * np.arange(n + 1)
    fin = T_in if callable(T_in) else (lambda _t, v=float(T_in): v)
    fg = T_g if callable(T_g) else (lambda _t, v=float(T_g): v)
    y = np.empty(n + 1)
    for k in range(n + 1):
        y[k] = state.output() + T0
        if k < n:
            state.push(fin(t[k]), fg(t[k]))
    return t, y


@dataclass
class StepResponses:
    """Unit step responses of one pipe, generated by the full-order model."""

    t_inlet: np.ndarray
    inlet: np.ndarray
    t_ground: np.ndarray
    ground: np.ndarray
    fingerprint: str = ""


def default_horizons(config) -> tuple[float, float]:
    """Training horizons ``(t_max_F1, t_max_F2)`` in seconds.

    ``F1`` needs many transit times to capture the slow warm-up of the
    insulation behind the thermal front; ``F2`` settles on the ground time
    scale, which hardly depends on the pipe length.
    """
    transit = config.geometry.length / config.velocity
    return 15.0 * transit, 8000.0


def step_responses(config, dx: float = 0.5, t_max: Optional[tuple[float, float]] = None,
                   dt: Optional[float] = None, record_dt: Optional[float] = None) -> StepResponses:
    """Simulate both unit step responses with the full-order model.

    The default time step is half the positivity bound of the explicit
    scheme, well inside the explicit stability limit.
    """
    from . import fom

    t1, t2 = t_max or default_horizons(config)
    disc = fom.Discretization.from_dx(config.geometry.length, dx)
    sys_ = fom.assemble(config, disc)
    if dt is None:
        dt = 0.5 * positive_dt(sys_)
    every = 1 if record_dt is None else max(1, int(round(record_dt / dt)))
    x0 = fom.StateVector.uniform(sys_, 0.0)
    r1 = fom.simulate(sys_, x0, 1.0, 0.0, dt, t1, every=every)
    r2 = fom.simulate(sys_, x0, 0.0, 1.0, dt, t2, every=max(every, int(round(2.0 / dt))))
    return StepResponses(r1.t, r1.outlet, r2.t, r2.outlet, config.fingerprint())


def positive_dt(sys_) -> float:
    """Largest step keeping every coefficient of ``I + dt*A`` non-negative."""
    return float(1.0 / np.max(-sys_.A.diagonal()))


def identify_pair(responses: StepResponses, n1: int, n2: int) -> tuple[TransferFunction, TransferFunction]:
    F1 = identify(responses.t_inlet, responses.inlet, n1, kind=INLET, fingerprint=responses.fingerprint)
    F2 = identify(responses.t_ground, responses.ground, n2, kind=GROUND, fingerprint=responses.fingerprint)
    return F1, F2
