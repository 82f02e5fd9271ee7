"""L2-to-Euclidean gain from the controllability Gramian.

With no L2 output channel the gain over ``[0, tau]`` is
``sqrt(lambda_1(C_E(tau) X(tau) C_E(tau)^T))``, where ``X`` solves the
Lyapunov differential equation ``Xdot = A X + X A^T + B B^T``, ``X(0) = 0``.
One forward sweep therefore gives the gain for every ``tau`` on the grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LtvGainError, UnreachableOutputError
from .linalg import sym_eig
from .model import LtvSystem
from .ode import OdeTrace, integrate_matrix, rk4_integrate
from .signal import Signal, analysis_grid

__all__ = [
    "GramianTrace",
    "controllability_gramian",
    "solve_lde",
    "l2e_gain",
    "wc_disturbance_l2e",
    "fix_sign",
]


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first non-negligible component is positive."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return v
    big = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    if big.size and v[big[0]] < 0:
        return -v
    return v


def controllability_gramian(sys: LtvSystem, grid, keep: str = "all") -> OdeTrace:
    """Forward sweep of ``Xdot = A X + X A^T + B B^T`` from ``X(0) = 0``."""
    table, src = sys.node_table(grid)
    lookup = table.lookup
    A, B = src["A"], src["B"]
    if B.is_constant:
        BBt = B.const @ B.const.T

        def forcing(i):
            return BBt
    else:
        BBt_nodes = np.einsum("kij,klj->kil", B.table, B.table)

        def forcing(i):
            return BBt_nodes[i]

    def rhs(t, X):
        i = lookup[t]
        Ai = A[i]
        AX = Ai @ X
        return AX + AX.T + forcing(i)

    return integrate_matrix(rhs, np.zeros((sys.n_x, sys.n_x)), grid, "forward", math.inf, keep)


@dataclass
class GramianTrace:
    """Gramian sweep on a grid.

    ``X[k]`` is the state Gramian, ``Y[k] = C_E X C_E^T`` the output Gramian,
    ``lambda1[k]`` its largest eigenvalue and ``v1[k]`` the matching unit
    eigenvector with its first non-negligible entry positive.
    """

    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    lambda1: np.ndarray
    v1: np.ndarray
    n_I: int = 0

    def index_of(self, tau: float) -> int:
        T = self.times[-1]
        if not -1e-12 * T <= tau <= T * (1 + 1e-12):
            raise ValueError(f"tau={tau!r} outside [0, {T:g}]")
        k = int(np.argmin(np.abs(self.times - tau)))
        if abs(self.times[k] - tau) > 1e-9 * max(T, 1.0):
            warnings.warn(f"tau={tau!r} is not on the grid; using t={self.times[k]!r}", stacklevel=3)
        return k


def solve_lde(sys: LtvSystem, steps: Optional[int] = None, grid=None) -> GramianTrace:
    sys.check()
    if sys.n_E < 1:
        raise LtvGainError("the Gramian analysis needs a terminal Euclidean output (n_E >= 1)")
    grid = analysis_grid(sys, steps) if grid is None else np.asarray(grid, dtype=float)
    X = controllability_gramian(sys, grid).states
    C_E = sys.C_E.at(grid)
    Y = np.einsum("kij,kjl,kml->kim", C_E, X, C_E)
    # symmetrize exactly; the triple product is symmetric only up to rounding
    Y = 0.5 * (Y + np.swapaxes(Y, 1, 2))
    lambda1 = np.empty(len(grid))
    v1 = np.empty((len(grid), sys.n_E))
    for k, Yk in enumerate(Y):
        w, V = sym_eig(Yk)
        lambda1[k] = max(w[0], 0.0)
        v1[k] = fix_sign(V[:, 0])
    return GramianTrace(times=grid, X=X, Y=Y, lambda1=lambda1, v1=v1, n_I=sys.n_I)


def l2e_gain(trace: GramianTrace, tau: float):
    """Gain over ``[0, tau]`` and its output direction ``v1``."""
    if trace.n_I != 0:
        raise LtvGainError(
            f"the Gramian formula covers only systems without an L2 output channel (n_I = 0), got n_I={trace.n_I}"
        )
    k = trace.index_of(tau)
    return math.sqrt(trace.lambda1[k]), trace.v1[k]


def wc_disturbance_l2e(sys: LtvSystem, trace: GramianTrace, tau: float) -> Signal:
    """Unit-energy disturbance on ``[0, tau]`` that maximizes ``|e_E(tau)|``.

    Computed as ``B(t)^T p(t)`` with ``pdot = -A^T p`` run backward from
    ``p(tau) = C_E(tau)^T v1 / sqrt(lambda1)``. The signal is zero after ``tau``.
    """
    gain, v1 = l2e_gain(trace, tau)
    k = trace.index_of(tau)
    lam = trace.lambda1[k]
    if lam <= 1e-12:
        raise UnreachableOutputError(f"output Gramian vanishes at tau={trace.times[k]:g}; nothing is reachable")
    grid = trace.times
    samples = np.zeros((len(grid), sys.n_d))
    if k > 0:
        table, src = sys.node_table(grid)
        lookup = table.lookup
        A = src["A"]

        def rhs(t, p):
            return -(A[lookup[t]].T @ p)

        p_tau = sys.C_E(grid[k]).T @ v1 / math.sqrt(lam)
        p = rk4_integrate(rhs, p_tau, grid[: k + 1], "backward", math.inf).states
        Bk = sys.B.at(grid[: k + 1])
        samples[: k + 1] = np.einsum("kji,kj->ki", Bk, p)
    return Signal(grid, samples)
