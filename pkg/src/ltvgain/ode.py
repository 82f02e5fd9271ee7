"""Fixed-step classical Runge-Kutta integration on a given time grid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import math

import numpy as np

from .errors import NonFiniteDerivativeError

__all__ = ["OdeTrace", "rk4_step", "rk4_integrate", "integrate_matrix", "DEFAULT_DIVERGENCE_THRESHOLD"]

DEFAULT_DIVERGENCE_THRESHOLD = 1e9
MAX_REFINE_DEPTH = 12


def rk4_step(rhs, t0, t1, x, k1=None):
    """One classical RK4 step from ``t0`` to ``t1`` (either direction)."""
    h = t1 - t0
    tm = 0.5 * (t0 + t1)
    if k1 is None:
        k1 = rhs(t0, x)
    k2 = rhs(tm, x + (0.5 * h) * k1)
    k3 = rhs(tm, x + (0.5 * h) * k2)
    k4 = rhs(t1, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _peak(x):
    return np.max(np.abs(x)) if x.size else 0.0


def _refined_step(rhs, t0, t1, x, threshold, max_growth, depth):
    """Redo one step as two halves, recursively while a half still grows too fast.

    Returns the new state, or None when a sub-step crosses the threshold.
    """
    tm = 0.5 * (t0 + t1)
    for a, b in ((t0, tm), (tm, t1)):
        y = rk4_step(rhs, a, b, x)
        peak = _peak(y)
        if not np.isfinite(peak) or peak > threshold:
            return None
        if depth < MAX_REFINE_DEPTH and peak > max_growth * max(_peak(x), 1.0):
            y = _refined_step(rhs, a, b, x, threshold, max_growth, depth + 1)
            if y is None:
                return None
        x = y
    return x


@dataclass
class OdeTrace:
    """Result of an integration sweep.

    ``times`` is always ascending and ``states[k]`` belongs to ``times[k]``,
    whatever the integration direction. On divergence only the part of the
    grid reached before the threshold was crossed is stored, and ``t_star``
    is the grid time at which the crossing was detected. When the sweep ran
    with ``keep="last"`` only the final state is stored.
    """

    times: np.ndarray
    states: np.ndarray
    diverged: bool = False
    t_star: Optional[float] = None
    final: Optional[np.ndarray] = None  # last state reached, in integration order


def rk4_integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0,
    grid,
    direction: str = "forward",
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    keep: str = "all",
    max_growth: float = math.inf,
) -> OdeTrace:
    """Integrate ``xdot = rhs(t, x)`` with classical RK4 between adjacent grid points.

    Args:
        rhs: Derivative function. Stage times are ``t_k``, ``0.5*(t_k+t_{k+1})``
            and ``t_{k+1}``, computed exactly that way.
        x0: Initial state, at ``grid[0]`` going forward or ``grid[-1]`` going backward.
        grid: Strictly increasing times.
        direction: ``"forward"`` or ``"backward"``.
        divergence_threshold: A state with a non-finite entry or max-abs entry
            above this value ends the sweep with ``diverged=True``.
        keep: ``"all"`` stores every state, ``"last"`` only the final one.
        max_growth: A step whose max-abs entry grows by more than this factor
            (relative to ``max(peak, 1)``) is redone with recursive halving, so
            a pole inside one step is not stepped over. ``rhs`` must then accept
            times off the stage set.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-D array with at least two points")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if keep not in ("all", "last"):
        raise ValueError(f"keep must be 'all' or 'last', got {keep!r}")
    order = grid if direction == "forward" else grid[::-1]
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state has non-finite entries")

    k1 = np.asarray(rhs(float(order[0]), x), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise NonFiniteDerivativeError(f"rhs is non-finite at the initial point t={order[0]}")

    store = keep == "all"
    states = [x] if store else None
    reached = 1
    diverged = False
    t_star = None
    for k in range(len(order) - 1):
        t0 = float(order[k])
        t1 = float(order[k + 1])
        x_next = rk4_step(rhs, t0, t1, x, None if k else k1)
        peak = _peak(x_next)
        if np.isfinite(peak) and peak <= divergence_threshold and peak > max_growth * max(_peak(x), 1.0):
            x_next = _refined_step(rhs, t0, t1, x, divergence_threshold, max_growth, 1)
            peak = math.inf if x_next is None else _peak(x_next)
        if not np.isfinite(peak) or peak > divergence_threshold:
            diverged = True
            t_star = t1
            break
        x = x_next
        reached += 1
        if store:
            states.append(x)

    covered = order[:reached]
    if store:
        stacked = np.array(states)
    else:
        stacked = x[None, ...]
        covered = covered[-1:]
    if direction == "backward":
        covered = covered[::-1]
        stacked = stacked[::-1]
    return OdeTrace(times=np.array(covered), states=stacked, diverged=diverged, t_star=t_star, final=x)


def integrate_matrix(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    P_T,
    grid,
    direction: str = "forward",
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    keep: str = "all",
    max_growth: float = math.inf,
) -> OdeTrace:
    """RK4 on a symmetric-matrix ODE, integrating only the upper triangle.

    ``rhs(t, P)`` receives an exactly symmetric matrix and returns dP/dt; only
    its upper triangle is used. The returned trace holds full matrices
    rebuilt from the upper triangle, so every stored state is exactly symmetric.
    """
    P_T = np.asarray(P_T, dtype=float)
    n = P_T.shape[0]
    if P_T.shape != (n, n):
        raise ValueError(f"initial matrix must be square, got {P_T.shape}")
    if not np.array_equal(P_T, P_T.T):
        raise ValueError("initial matrix must be symmetric")
    iu = np.triu_indices(n)

    def unpack(v):
        P = np.empty((n, n))
        P[iu] = v
        P.T[iu] = v
        return P

    def flat_rhs(t, v):
        return rhs(t, unpack(v))[iu]

    trace = rk4_integrate(flat_rhs, P_T[iu], grid, direction, divergence_threshold, keep, max_growth)
    full = np.empty((len(trace.states), n, n))
    full[:, iu[0], iu[1]] = trace.states
    full[:, iu[1], iu[0]] = trace.states
    return OdeTrace(trace.times, full, trace.diverged, trace.t_star, final=unpack(trace.final))
