"""Chebyshev expansions on the semi-infinite time axis.

Time ``t >= 0`` is mapped onto ``theta = 1 - 2 exp(-t/tau)`` in ``[-1, 1)``,
so ``t = 0`` sits at ``theta = -1`` and the asymptote ``t -> inf`` at
``theta = 1``. A function sampled at the Gauss-Lobatto nodes is turned into
Chebyshev coefficients by a discrete transform and evaluated with Clenshaw's
recurrence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ALPHA_REF = 0.9


@dataclass(frozen=True)
class TimeMap:
    tau: float
    t_max: float
    order: int
    alpha_ref: float = ALPHA_REF

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def theta(self, t):
        return 1.0 - 2.0 * np.exp(-np.asarray(t, dtype=float) / self.tau)

    def time(self, theta):
        """Inverse map; ``theta = 1`` gives ``inf``."""
        theta = np.asarray(theta, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.tau * np.log((1.0 - theta) / 2.0)


def make_time_map(t_max: float, order: int, alpha_ref: float = ALPHA_REF) -> TimeMap:
    """Choose ``tau`` so that the first interior Lobatto node lands at ``alpha_ref * t_max``."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if order < 2:
        raise ValueError("order must be at least 2")
    theta_ref = math.cos(math.pi / order)
    t_ref = alpha_ref * t_max
    tau = -t_ref / math.log((1.0 - theta_ref) / 2.0)
    return TimeMap(tau, t_max, order, alpha_ref)


def lobatto_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto nodes ``cos(pi k / N)`` (descending) and quadrature weights."""
    if order < 2:
        raise ValueError("order must be at least 2")
    k = np.arange(order + 1)
    nodes = np.cos(np.pi * k / order)
    weights = np.full(order + 1, np.pi / order)
    weights[0] = weights[-1] = np.pi / (2 * order)
    return nodes, weights


@dataclass(frozen=True)
class ChebSpectrum:
    coefficients: np.ndarray
    time_map: TimeMap

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        return evaluate(self, t)

    @property
    def asymptote(self) -> float:
        """Value at ``theta = 1`` (``t -> inf``)."""
        return float(np.sum(self.coefficients))

    def save(self, path, extra: dict | None = None) -> None:
        lines = [f"N {self.order}", f"tau {self.time_map.tau!r}",
                 f"t_max {self.time_map.t_max!r}", f"alpha_ref {self.time_map.alpha_ref!r}"]
        for key, value in (extra or {}).items():
            lines.append(f"{key} {value}")
        lines.append("coefficients")
        lines.extend(f"{c:.17g}" for c in self.coefficients)
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> tuple["ChebSpectrum", dict]:
        header: dict[str, str] = {}
        coeffs: list[float] = []
        in_coeffs = False
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            if in_coeffs:
                coeffs.append(float(line))
            elif line == "coefficients":
                in_coeffs = True
            else:
                key, _, value = line.partition(" ")
                header[key] = value
        n = int(header.pop("N"))
        if len(coeffs) != n + 1:
            raise ValueError(f"{path}: expected {n + 1} coefficients, found {len(coeffs)}")
        tmap = TimeMap(float(header.pop("tau")), float(header.pop("t_max")), n,
                       float(header.pop("alpha_ref", ALPHA_REF)))
        return cls(np.array(coeffs), tmap), header


def transform(samples, time_map: TimeMap) -> ChebSpectrum:
    """Discrete Chebyshev transform of values at the Lobatto nodes (node order as ``lobatto_nodes``)."""
    samples = np.asarray(samples, dtype=float)
    n = time_map.order
    if samples.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} samples, got {samples.shape}")
    k = np.arange(n + 1)
    _, w = lobatto_nodes(n)
    # phi_n(theta_k) = cos(pi n k / N), exact without arccos round-off
    basis = np.cos(np.pi * np.outer(k, k) / n)
    gamma = np.full(n + 1, np.pi / 2)
    gamma[0] = gamma[n] = np.pi
    coeffs = basis @ (samples * w) / gamma
    return ChebSpectrum(coeffs, time_map)


def clenshaw(coefficients: np.ndarray, theta):
    """Sum ``c_n T_n(theta)`` by Clenshaw's recurrence."""
    theta = np.asarray(theta, dtype=float)
    b1 = np.zeros_like(theta)
    b2 = np.zeros_like(theta)
    two_x = 2.0 * theta
    for c in coefficients[:0:-1]:
        b1, b2 = two_x * b1 - b2 + c, b1
    return theta * b1 - b2 + coefficients[0]


def evaluate(spec: ChebSpectrum, t):
    """Evaluate the expansion at times ``t >= 0`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("Chebyshev time expansions are defined for t >= 0 only")
    value = clenshaw(spec.coefficients, spec.time_map.theta(t_arr))
    return float(value) if np.ndim(value) == 0 else value


def fit_samples(fn, time_map: TimeMap) -> ChebSpectrum:
    """Sample ``fn(theta)`` at the Lobatto nodes and transform."""
    nodes, _ = lobatto_nodes(time_map.order)
    return transform(np.array([fn(x) for x in nodes]), time_map)
