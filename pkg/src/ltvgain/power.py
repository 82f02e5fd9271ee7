"""Forward and adjoint simulation, and the power iteration built on them.

One iteration applies the plant and then its adjoint to the current unit
disturbance. The norm of the adjoint output ``r`` converges to the *squared*
induced gain; the forward performance of the iterate converges to the gain.
The stopping test compares ``sqrt(||r||)`` between iterations, so the
tolerance is in gain units.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSignalError, DivergenceError
from .model import LtvSystem
from .ode import DEFAULT_DIVERGENCE_THRESHOLD, rk4_integrate
from .signal import Signal, analysis_grid, l2_norm, normalize, random_signal

logger = logging.getLogger(__name__)

__all__ = [
    "simulate",
    "forward_gain",
    "adjoint_response",
    "power_iterate",
    "PowerIterResult",
    "NonmonotoneWarning",
    "DEFAULT_MAX_ITERS",
]

DEFAULT_MAX_ITERS = 50


class NonmonotoneWarning(RuntimeWarning):
    """The iteration decreased; the integration step is probably too coarse."""


def _check_grid(sys: LtvSystem, times: np.ndarray):
    T = sys.horizon
    if times[0] != 0.0 or abs(times[-1] - T) > 1e-12 * T:
        raise ValueError(f"signal spans [{times[0]:g}, {times[-1]:g}], analysis needs [0, {T:g}]")


def _batch(mats, vecs, transpose=False, grid_only=False):
    """Row-wise ``M_k v_k`` (or ``M_k^T v_k``) for tabulated ``mats``.

    ``vecs`` holds one vector per node, or per grid point with ``grid_only``.
    """
    if mats.is_constant:
        M = mats.const.T if transpose else mats.const
        return vecs @ M.T
    table = mats.table[0::2] if grid_only else mats.table
    return np.einsum("kji,kj->ki" if transpose else "kij,kj->ki", table, vecs)


def simulate(sys: LtvSystem, d: Signal, divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD):
    """Run the plant from ``x(0) = 0`` under ``d``.

    Returns:
        ``(x, e_I, e_E_T)``: state samples on ``d.times``, the L2 output as a
        Signal, and the terminal Euclidean output vector.
    """
    sys.check()
    if d.dim != sys.n_d:
        raise ValueError(f"disturbance has dimension {d.dim}, system expects {sys.n_d}")
    _check_grid(sys, d.times)
    table, src = sys.node_table(d.times)
    forcing = _batch(src["B"], table.on_nodes(d.samples))
    index = table.lookup
    A = src["A"]
    if A.is_constant:
        Am = A.const

        def rhs(t, x):
            return Am @ x + forcing[index[t]]
    else:
        At = A.table

        def rhs(t, x):
            i = index[t]
            return At[i] @ x + forcing[i]

    trace = rk4_integrate(rhs, np.zeros(sys.n_x), d.times, "forward", divergence_threshold)
    if trace.diverged:
        raise DivergenceError(f"forward simulation diverged at t={trace.t_star:g}")
    x = trace.states
    e_I = _batch(src["C_I"], x, grid_only=True) + _batch(src["D_I"], d.samples, grid_only=True)
    e_E_T = sys.C_E(sys.horizon) @ x[-1]
    return x, Signal(d.times, e_I), e_E_T


def forward_gain(sys: LtvSystem, d: Signal, divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD):
    """Forward performance ``sqrt(|e_E(T)|^2 + ||e_I||^2)`` of ``d``.

    The value is the achieved gain only when ``d`` has unit norm; it is
    returned unnormalized so callers can also use it on raw inputs.

    Returns:
        ``(gamma_f, e_I, e_E_T)``.
    """
    _, e_I, e_E_T = simulate(sys, d, divergence_threshold)
    gamma_f = math.sqrt(float(e_E_T @ e_E_T) + l2_norm(e_I) ** 2)
    return gamma_f, e_I, e_E_T


def adjoint_response(
    sys: LtvSystem,
    w,
    q: Signal,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> Signal:
    """Adjoint output ``r = B^T p + D_I^T q`` on ``q.times``.

    The costate runs backward from ``p(T) = C_E(T)^T w`` under
    ``pdot = -A^T p - C_I^T q``.
    """
    sys.check()
    w = np.asarray(w, dtype=float).reshape(sys.n_E)
    if q.dim != sys.n_I:
        raise ValueError(f"adjoint input has dimension {q.dim}, system has n_I={sys.n_I}")
    _check_grid(sys, q.times)
    table, src = sys.node_table(q.times)
    forcing = -_batch(src["C_I"], table.on_nodes(q.samples), transpose=True)
    index = table.lookup
    A = src["A"]
    if A.is_constant:
        AmT = -A.const.T

        def rhs(t, p):
            return AmT @ p + forcing[index[t]]
    else:
        At = A.table

        def rhs(t, p):
            i = index[t]
            return -(At[i].T @ p) + forcing[i]

    p_T = sys.C_E(sys.horizon).T @ w
    trace = rk4_integrate(rhs, p_T, q.times, "backward", divergence_threshold)
    if trace.diverged:
        raise DivergenceError(f"adjoint simulation diverged at t={trace.t_star:g}")
    r = _batch(src["B"], trace.states, transpose=True, grid_only=True)
    r = r + _batch(src["D_I"], q.samples, transpose=True, grid_only=True)
    return Signal(q.times, r)


@dataclass
class PowerIterResult:
    """Outcome of :func:`power_iterate`.

    ``history`` holds ``(gamma_f, gamma)`` per iteration, where ``gamma_f`` is
    the forward performance of the iterate and ``gamma`` the adjoint output
    norm (squared-gain scale). ``d_star`` is the aligned next iterate.
    """

    gamma_star: float
    d_star: Signal
    history: list = field(default_factory=list)
    iterations: int = 0
    termination: str = "tolerance_met"

    @property
    def gammas(self) -> list:
        return [g for _, g in self.history]


def _nonmonotone(gamma, previous):
    return gamma < previous - max(1e-8, 1e-6 * previous)


def power_iterate(
    sys: LtvSystem,
    d1: Optional[Signal] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = 1e-3,
    *,
    seed: int = 0,
    steps: Optional[int] = None,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> PowerIterResult:
    """Power iteration on ``G~G`` with alignment.

    Args:
        sys: Plant to analyse.
        d1: Starting disturbance; normalized here. Defaults to seeded noise on
            the analysis grid.
        max_iters: Iteration cap.
        tol: Stop once ``sqrt(||r||)``, the gain estimate, grows by less than ``tol``.
        seed: Seed for the default starting disturbance.
        steps: Grid steps for the default starting disturbance.

    Raises:
        DegenerateSignalError: the plant maps the current iterate to zero.
    """
    sys.check()
    if d1 is None:
        d1 = random_signal(analysis_grid(sys, steps), sys.n_d, seed)
    d = normalize(d1)
    gamma_prev = -math.inf
    gamma_f = 0.0
    history = []
    termination = "max_iters"
    for i in range(1, max_iters + 1):
        gamma_f, e_I, e_E_T = forward_gain(sys, d, divergence_threshold)
        r = adjoint_response(sys, e_E_T, e_I, divergence_threshold)
        gamma = l2_norm(r)
        if gamma == 0.0:
            raise DegenerateSignalError(
                "the plant maps this disturbance to zero output; re-seed with a different disturbance"
            )
        history.append((gamma_f, gamma))
        d = r.scaled(1.0 / gamma)
        logger.debug("power iteration %d: gamma_f=%.6g gamma=%.6g", i, gamma_f, gamma)
        if _nonmonotone(gamma, gamma_prev):
            warnings.warn(
                f"power iteration decreased at step {i} ({gamma_prev:.8g} -> {gamma:.8g}); "
                "reduce the integration step",
                NonmonotoneWarning,
                stacklevel=2,
            )
            termination = "nonmonotone_detected"
            break
        if i > 1 and math.sqrt(gamma) - math.sqrt(gamma_prev) < tol:
            termination = "tolerance_met"
            break
        gamma_prev = gamma
    return PowerIterResult(gamma_star=gamma_f, d_star=d, history=history, iterations=len(history), termination=termination)
