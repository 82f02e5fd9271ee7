"""Riccati differential equation certificate and bisection on it.

For ``gamma > 0`` with ``R(t) = D_I^T D_I - gamma^2 I`` negative definite,
the gain is below ``gamma`` exactly when

    Pdot + A^T P + P A + Q - (P B + S) R^{-1} (P B + S)^T = 0,   P(T) = F

has a solution on all of ``[0, T]`` (``Q = C_I^T C_I``, ``S = C_I^T D_I``,
``F = C_E(T)^T C_E(T)``). The solution is integrated backward from ``T``;
if it blows up at some ``t* > 0`` then ``gamma`` is a lower bound.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConstructionFailedError, InfeasibleGammaError, UnboundedGainError
from .gramian import controllability_gramian
from .linalg import solve, sym_eig
from .model import LtvSystem
from .ode import DEFAULT_DIVERGENCE_THRESHOLD, OdeTrace, rk4_step, integrate_matrix, rk4_integrate
from .power import forward_gain, power_iterate
from .signal import Signal, analysis_grid, normalize, random_signal

logger = logging.getLogger(__name__)

__all__ = [
    "RdeCoefficients",
    "RdeSolution",
    "GainBounds",
    "LowerBoundWitness",
    "rde_coefficients",
    "solve_rde",
    "initial_bounds",
    "bisect",
    "construct_lower_bound",
    "disturbance_from_incomplete_rde",
    "feedthrough_bound",
]

GAMMA_CAP = 2.0**60
# per-step growth of max|P| that triggers local step halving near a pole
RDE_MAX_GROWTH = 2.0


def _gram(D: np.ndarray) -> np.ndarray:
    return D.T @ D


def feedthrough_profile(sys: LtvSystem, grid) -> np.ndarray:
    """``sigma_max(D_I(t_k))`` on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    n_d = sys.n_d
    if sys.n_I == 0:
        return np.zeros(len(grid))
    if sys.D_I.is_constant:
        w, _ = sym_eig(_gram(sys.D_I.samples))
        return np.full(len(grid), math.sqrt(max(w[0], 0.0)) if n_d else 0.0)
    out = np.empty(len(grid))
    for k, D in enumerate(sys.D_I.at(grid)):
        w, _ = sym_eig(_gram(D))
        out[k] = math.sqrt(max(w[0], 0.0))
    return out


def feedthrough_bound(sys: LtvSystem, grid=None) -> float:
    """``max_t sigma_max(D_I(t))`` over the analysis grid; a lower bound on the gain."""
    grid = analysis_grid(sys) if grid is None else grid
    profile = feedthrough_profile(sys, grid)
    return float(profile.max()) if profile.size else 0.0


@dataclass(frozen=True)
class RdeCoefficients:
    """Riccati coefficients for one ``gamma``; ``feasible`` is False when R(t) is not negative definite on the grid."""

    system: LtvSystem
    gamma: float
    F: np.ndarray
    feasible: bool
    infeasible_at: Optional[float] = None

    def Q(self, t):
        C = self.system.C_I(t)
        return C.T @ C

    def S(self, t):
        return self.system.C_I(t).T @ self.system.D_I(t)

    def R(self, t):
        return _gram(self.system.D_I(t)) - self.gamma**2 * np.eye(self.system.n_d)


def rde_coefficients(sys: LtvSystem, gamma: float, grid=None, steps: Optional[int] = None) -> RdeCoefficients:
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    sys.check()
    grid = analysis_grid(sys, steps) if grid is None else np.asarray(grid, dtype=float)
    C_T = sys.C_E(sys.horizon)
    F = C_T.T @ C_T
    profile = feedthrough_profile(sys, grid)
    # lambda_max(R) = sigma_max(D_I)^2 - gamma^2
    bad = np.flatnonzero(profile**2 - gamma**2 >= 0.0)
    if bad.size:
        return RdeCoefficients(sys, float(gamma), F, False, float(grid[bad[0]]))
    return RdeCoefficients(sys, float(gamma), F, True, None)


class _NodeCoefficients:
    """Riccati coefficients tabulated on the integrator nodes of one grid."""

    def __init__(self, sys: LtvSystem, gamma: float, grid):
        self.system = sys
        self.gamma = gamma
        table, src = sys.node_table(grid)
        self.table = table
        self.A = src["A"]
        self.B = src["B"]
        n_d = sys.n_d
        n_nodes = len(table.nodes)
        C, D = src["C_I"], src["D_I"]
        eye = np.eye(n_d)
        if C.is_constant and D.is_constant:
            self.const = True
            self.Q = C.const.T @ C.const
            self.S = C.const.T @ D.const
            self.Rinv = solve(_gram(D.const) - gamma**2 * eye, eye)
        else:
            self.const = False
            Cn, Dn = C.all(n_nodes), D.all(n_nodes)
            self.Q = np.einsum("kji,kjl->kil", Cn, Cn)
            self.S = np.einsum("kji,kjl->kil", Cn, Dn)
            Rn = np.einsum("kji,kjl->kil", Dn, Dn) - gamma**2 * eye
            if not D.is_constant:
                # stage midpoints are not covered by the grid scan
                for i in range(1, n_nodes, 2):
                    if abs(sym_eig(Rn[i])[0][0]) <= 1e-12:
                        raise InfeasibleGammaError(gamma, float(table.nodes[i]))
            if D.is_constant:
                self.Rinv = np.broadcast_to(solve(Rn[0], eye), (n_nodes, n_d, n_d))
            else:
                self.Rinv = np.stack([solve(R, eye) for R in Rn])

    def at(self, i):
        if self.const:
            return self.A[i], self.B[i], self.Q, self.S, self.Rinv
        return self.A[i], self.B[i], self.Q[i], self.S[i], self.Rinv[i]

    def off_grid(self, t):
        """Coefficients at a time outside the node set (used by refined steps)."""
        sys = self.system
        A, B, C, D = sys.A(t), sys.B(t), sys.C_I(t), sys.D_I(t)
        eye = np.eye(sys.n_d)
        return A, B, C.T @ C, C.T @ D, solve(_gram(D) - self.gamma**2 * eye, eye)

    def rhs(self):
        lookup = self.table.lookup
        at = self.at
        off_grid = self.off_grid

        def rhs(t, P):
            i = lookup.get(t)
            A, B, Q, S, Rinv = at(i) if i is not None else off_grid(t)
            PA = P @ A
            G = P @ B + S
            return -(PA + PA.T + Q - G @ Rinv @ G.T)

        return rhs


@dataclass
class RdeSolution:
    """Backward Riccati sweep at one ``gamma``.

    ``trace.times`` covers ``(t_star, T]`` when the solution blew up and all of
    ``[0, T]`` when it exists.
    """

    trace: OdeTrace
    exists: bool
    gamma: float
    grid: np.ndarray
    t_star: Optional[float] = None

    @property
    def P0(self) -> Optional[np.ndarray]:
        return self.trace.final if self.exists else None


def solve_rde(
    sys: LtvSystem,
    gamma: float,
    steps: Optional[int] = None,
    *,
    grid=None,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    keep: str = "all",
) -> RdeSolution:
    """Integrate the Riccati equation backward from ``P(T) = F``.

    Raises:
        InfeasibleGammaError: ``R(t)`` is not negative definite at some grid time.
    """
    grid = analysis_grid(sys, steps) if grid is None else np.asarray(grid, dtype=float)
    coeffs = rde_coefficients(sys, gamma, grid)
    if not coeffs.feasible:
        raise InfeasibleGammaError(gamma, coeffs.infeasible_at)
    nodes = _NodeCoefficients(sys, gamma, grid)
    trace = integrate_matrix(
        nodes.rhs(), coeffs.F, grid, "backward", divergence_threshold, keep, max_growth=RDE_MAX_GROWTH
    )
    return RdeSolution(trace=trace, exists=not trace.diverged, gamma=float(gamma), grid=grid, t_star=trace.t_star)


@dataclass
class GainBounds:
    """Certified bracket ``[gamma_lb, gamma_ub]`` on the induced gain.

    ``gamma_ub`` certifies ``||G|| < gamma_ub``; ``d_lb`` (when present) is a
    unit disturbance whose forward performance is ``achieved_gain``.
    """

    gamma_lb: float
    gamma_ub: float
    d_lb: Optional[Signal] = None
    achieved_gain: Optional[float] = None
    iterations: int = 0
    rde_solves: int = 0
    power_iterations: int = 0
    wall_time: float = 0.0
    converged: bool = True
    termination: str = "tolerance_met"
    algorithm: str = ""
    tolerance: float = 0.0
    history: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.gamma_ub - self.gamma_lb


def _initial_bounds(sys, grid, divergence_threshold):
    lb = feedthrough_bound(sys, grid)
    gamma = max(2.0 * lb, 1.0)
    solves = 0
    last_failure = None
    while gamma <= GAMMA_CAP:
        sol = solve_rde(sys, gamma, grid=grid, divergence_threshold=divergence_threshold)
        solves += 1
        if sol.exists:
            return lb, gamma, solves, last_failure
        last_failure = sol
        gamma *= 2.0
    raise UnboundedGainError("no Riccati solution up to gamma = 2^60; the gain looks unbounded")


def initial_bounds(
    sys: LtvSystem,
    steps: Optional[int] = None,
    *,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> tuple[float, float]:
    """Starting bracket: the peak feedthrough singular value below, and the first
    of ``max(2 lb, 1) * 2^k`` whose Riccati solution exists above."""
    grid = analysis_grid(sys, steps)
    lb, ub, _, _ = _initial_bounds(sys, grid, divergence_threshold)
    return lb, ub


@dataclass
class LowerBoundWitness:
    d: Signal
    achieved: float
    fallback_used: bool = False


def _uniform_step(grid, k):
    return grid[k + 1] - grid[k] if k + 1 < len(grid) else grid[k] - grid[k - 1]


def _reach_then_feedback(sys: LtvSystem, sol: RdeSolution, max_candidates: int = 24):
    """Disturbance that steers the state into the blow-up direction, then plays the Riccati feedback.

    On ``[0, t0]`` the input ``B^T Phi(t0, t)^T v`` reaches ``x(t0) = W(t0) v``
    with energy ``v^T W v`` (``W`` the controllability Gramian). On
    ``[t0, T]`` the maximizing feedback ``d = -R^{-1} (P B + S)^T x`` collects
    ``x(t0)^T P(t0) x(t0)`` more output energy than ``gamma^2`` times its own.
    The overall ratio exceeds ``gamma`` when
    ``lambda_max(W^{1/2} P(t0) W^{1/2}) > gamma^2``; ``t0`` is picked among grid
    points after the blow-up where the closed loop is still resolvable by the step.
    """
    grid = sol.grid
    gamma = sol.gamma
    P_trace = sol.trace.states
    first = int(np.searchsorted(grid, sol.trace.times[0]))
    if len(P_trace) != len(grid) - first:
        raise ValueError("the construction needs the full Riccati trace (solve with keep='all')")
    last = len(grid) - 2
    if first > last:
        return None
    nodes = _NodeCoefficients(sys, gamma, grid)
    W_all = controllability_gramian(sys, grid).states

    span = last - first
    offsets = np.unique(np.round(np.geomspace(1, span + 1, num=min(4 * max_candidates, span + 1))).astype(int) - 1)
    best = None
    evaluated = 0
    for off in offsets:
        j = first + int(off)
        A, B, _, S, Rinv = nodes.at(2 * j)
        P = P_trace[j - first]
        K = -Rinv @ (P @ B + S).T
        h = _uniform_step(grid, j)
        if h * np.linalg.norm(A + B @ K) > 0.5:
            continue
        w, V = sym_eig(W_all[j])
        keep = w > 1e-12 * max(w[0], 1e-300)
        if not np.any(keep):
            continue
        L = V[:, keep] * np.sqrt(w[keep])
        mu, U = sym_eig(L.T @ P @ L)
        if best is None or mu[0] > best[0]:
            best = (mu[0], j, V[:, keep] / np.sqrt(w[keep]) @ U[:, 0])
        evaluated += 1
        if evaluated >= max_candidates:
            break
    if best is None or best[0] <= gamma**2:
        return None
    _, j, v = best

    table = nodes.table
    lookup = table.lookup
    # reach phase: costate backward from v on [0, t0]
    p = rk4_integrate(lambda t, p: -(nodes.A[lookup[t]].T @ p), v, grid[: j + 1], "backward", math.inf).states
    reach = np.zeros((len(grid), sys.n_d))
    reach[: j + 1] = np.einsum("kji,kj->ki", sys.B.at(grid[: j + 1]), p)
    reach_nodes = table.on_nodes(reach)  # only nodes up to 2j are read

    n_nodes = len(table.nodes)
    P_nodes = np.empty((n_nodes - 2 * j,) + P_trace.shape[1:])
    P_nodes[0::2] = P_trace[j - first:]
    P_nodes[1::2] = 0.5 * (P_trace[j - first:-1] + P_trace[j - first + 1:])
    gains = []
    for i in range(2 * j, n_nodes):
        _, B, _, S, Rinv = nodes.at(i)
        P = P_nodes[i - 2 * j]
        gains.append(-Rinv @ (P @ B + S).T)
    def reach_rhs(t, x):
        i = lookup[t]
        return nodes.A[i] @ x + nodes.B[i] @ reach_nodes[i]

    def feedback_rhs(t, x):
        i = lookup[t]
        return nodes.A[i] @ x + nodes.B[i] @ (gains[i - 2 * j] @ x)

    # one forward sweep; the step ending at t0 still uses the reach input
    x = np.zeros(sys.n_x)
    states = [x]
    for k in range(len(grid) - 1):
        x = rk4_step(reach_rhs if k < j else feedback_rhs, float(grid[k]), float(grid[k + 1]), x)
        states.append(x)
    states = np.array(states)
    d = np.empty((len(grid), sys.n_d))
    d[:j] = reach[:j]
    for k in range(j, len(grid)):
        d[k] = gains[2 * (k - j)] @ states[k]
    return Signal(grid, d)


def construct_lower_bound(
    sys: LtvSystem,
    sol: RdeSolution,
    *,
    check_tol: float = 1e-3,
    fallback: Optional[Signal] = None,
) -> LowerBoundWitness:
    """Unit disturbance certifying ``gain >= sol.gamma`` from a blown-up Riccati sweep.

    The construction is verified by forward simulation; it must reach
    ``sol.gamma - 10 * check_tol``. Otherwise ``fallback`` is returned if it
    passes the same test.

    Raises:
        ValueError: the solution exists on the whole horizon.
        ConstructionFailedError: neither the construction nor the fallback passes.
    """
    if sol.exists:
        raise ValueError("the Riccati solution exists on [0, T]; there is no blow-up to exploit")
    if not sol.t_star > 0:
        raise ValueError("blow-up time must be positive")
    target = sol.gamma - 10.0 * check_tol
    achieved = None
    try:
        raw = _reach_then_feedback(sys, sol)
    except (ArithmeticError, ValueError) as exc:  # numerical trouble counts as a failed attempt
        logger.debug("lower-bound construction raised %s", exc)
        raw = None
    if raw is not None:
        d = normalize(raw)
        achieved, _, _ = forward_gain(sys, d)
        if achieved >= target:
            return LowerBoundWitness(d, achieved)
        logger.info("constructed disturbance reaches %.6g < %.6g; trying fallback", achieved, target)
    if fallback is not None:
        d = normalize(fallback)
        fb_gain, _, _ = forward_gain(sys, d)
        if fb_gain >= target:
            return LowerBoundWitness(d, fb_gain, fallback_used=True)
        achieved = max(achieved or 0.0, fb_gain)
    raise ConstructionFailedError(
        f"no disturbance reaching {target:.6g} (best {achieved if achieved is not None else float('nan'):.6g})",
        achieved=achieved,
    )


def disturbance_from_incomplete_rde(
    sys: LtvSystem,
    sol: RdeSolution,
    *,
    check_tol: float = 1e-3,
    fallback: Optional[Signal] = None,
) -> Signal:
    return construct_lower_bound(sys, sol, check_tol=check_tol, fallback=fallback).d


def _witness_for_bisection(sys, lb, tol, failure, grid, seed, divergence_threshold):
    """Best-effort witness for a bisection lower bound; ``(witness or None, power iterations)``."""
    if lb == 0.0:
        return None, 0
    if failure is not None:
        try:
            return construct_lower_bound(sys, failure, check_tol=tol), 0
        except Exception as exc:  # fall through to the power iteration
            logger.info("Riccati-based witness failed: %s", exc)
    pi = power_iterate(
        sys, random_signal(grid, sys.n_d, seed), tol=tol / 5.0, divergence_threshold=divergence_threshold
    )
    achieved, _, _ = forward_gain(sys, pi.d_star)
    if achieved >= lb - 10.0 * tol:
        return LowerBoundWitness(pi.d_star, achieved, fallback_used=True), pi.iterations
    return None, pi.iterations


def bisect(
    sys: LtvSystem,
    tol: float,
    bounds: Optional[tuple[float, float]] = None,
    *,
    steps: Optional[int] = None,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
    seed: int = 0,
    witness: bool = True,
) -> GainBounds:
    """Bisection on Riccati existence until ``gamma_ub - gamma_lb <= tol``.

    With ``bounds=None`` the bracket comes from :func:`initial_bounds` and its
    solves are included in ``rde_solves``; ``iterations`` counts only the
    bisection steps.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    start = time.perf_counter()
    sys.check()
    grid = analysis_grid(sys, steps)
    failure = None
    solves = 0
    if bounds is None:
        lb, ub, solves, failure = _initial_bounds(sys, grid, divergence_threshold)
        failure = None  # the bracket keeps the feedthrough lower bound
    else:
        lb, ub = map(float, bounds)
        if lb > ub:
            raise ValueError(f"empty bracket [{lb}, {ub}]")
    history = []
    bisections = 0
    while ub - lb > tol:
        gamma = 0.5 * (ub + lb)
        sol = solve_rde(sys, gamma, grid=grid, divergence_threshold=divergence_threshold)
        solves += 1
        bisections += 1
        history.append((gamma, sol.exists, sol.t_star))
        if sol.exists:
            ub = gamma
        else:
            lb = gamma
            failure = sol
        logger.debug("bisection %d: gamma=%.6g exists=%s", bisections, gamma, sol.exists)

    found, pis = (None, 0)
    if witness:
        found, pis = _witness_for_bisection(sys, lb, tol, failure, grid, seed, divergence_threshold)
    return GainBounds(
        gamma_lb=lb,
        gamma_ub=ub,
        d_lb=found.d if found else None,
        achieved_gain=found.achieved if found else None,
        iterations=bisections,
        rde_solves=solves,
        power_iterations=pis,
        wall_time=time.perf_counter() - start,
        algorithm="bisect",
        tolerance=tol,
        history=history,
    )
