"""Sampled vector signals on ``[0, T]`` with the L2 inner product.

Samples are treated as a piecewise-linear function of time and integrated
with the composite trapezoid rule on the stored grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, OutOfDomainError

__all__ = [
    "Signal",
    "l2_norm",
    "inner_product",
    "normalize",
    "resample",
    "trapezoid_weights",
    "analysis_grid",
    "random_signal",
]

MIN_STEPS = 2000
STEPS_PER_TIMESCALE = 40


def trapezoid_weights(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    dt = np.diff(times)
    w = np.zeros_like(times)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    return w


@dataclass(frozen=True, eq=False)
class Signal:
    """``samples[k]`` is the value at ``times[k]``; shape ``(len(times), dim)``."""

    times: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if len(times) < 2:
            raise ValueError("a signal needs at least two time points")
        if samples.shape[0] != len(times):
            raise ValueError(f"{samples.shape[0]} samples for {len(times)} times")
        if np.any(np.diff(times) <= 0):
            raise ValueError("signal times must be strictly increasing")
        times.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", samples)

    @classmethod
    def zeros(cls, times, dim: int) -> "Signal":
        return cls(times, np.zeros((len(times), dim)))

    @classmethod
    def from_function(cls, fn, times) -> "Signal":
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([np.atleast_1d(fn(t)) for t in times]))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def scaled(self, c: float) -> "Signal":
        return Signal(self.times, c * self.samples)

    def __add__(self, other: "Signal") -> "Signal":
        _check_compatible(self, other)
        return Signal(self.times, self.samples + other.samples)

    def __sub__(self, other: "Signal") -> "Signal":
        _check_compatible(self, other)
        return Signal(self.times, self.samples - other.samples)

    def __repr__(self):
        return f"Signal(dim={self.dim}, points={len(self.times)}, span=[{self.times[0]:g}, {self.times[-1]:g}])"


def _check_compatible(a: Signal, b: Signal):
    if a.dim != b.dim:
        raise ValueError(f"signal dimensions differ: {a.dim} vs {b.dim}")
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise ValueError("signals live on different time grids")


def inner_product(a: Signal, b: Signal) -> float:
    _check_compatible(a, b)
    pointwise = np.einsum("ki,ki->k", a.samples, b.samples)
    return float(trapezoid_weights(a.times) @ pointwise)


def l2_norm(sig: Signal) -> float:
    pointwise = np.einsum("ki,ki->k", sig.samples, sig.samples)
    return math.sqrt(max(float(trapezoid_weights(sig.times) @ pointwise), 0.0))


def normalize(sig: Signal) -> Signal:
    norm = l2_norm(sig)
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateSignalError(f"cannot normalize a signal of norm {norm}")
    return sig.scaled(1.0 / norm)


def resample(sig: Signal, times) -> Signal:
    """Linear interpolation of ``sig`` onto ``times`` (no extrapolation)."""
    times = np.asarray(times, dtype=float)
    if times[0] < sig.times[0] or times[-1] > sig.times[-1]:
        raise OutOfDomainError(
            f"target grid [{times[0]:g}, {times[-1]:g}] exceeds signal span "
            f"[{sig.times[0]:g}, {sig.times[-1]:g}]"
        )
    cols = [np.interp(times, sig.times, sig.samples[:, i]) for i in range(sig.dim)]
    return Signal(times, np.stack(cols, axis=1) if cols else np.zeros((len(times), 0)))


def analysis_grid(sys, steps: int | None = None) -> np.ndarray:
    """Uniform grid on ``[0, T]``.

    With ``steps=None`` the step count is ``max(2000, ceil(40 T / tau))``
    where ``tau = 1 / max_t ||A(t)||_2`` bounds the fastest system timescale.
    """
    T = sys.horizon
    if steps is None:
        tau = sys.shortest_timescale()
        steps = MIN_STEPS if math.isinf(tau) else max(MIN_STEPS, math.ceil(STEPS_PER_TIMESCALE * T / tau))
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    return np.linspace(0.0, T, int(steps) + 1)


def random_signal(times, dim: int, seed: int = 0) -> Signal:
    """Unit-norm signal with i.i.d. standard normal samples from a seeded generator."""
    rng = np.random.default_rng(seed)
    return normalize(Signal(times, rng.standard_normal((len(times), dim))))
