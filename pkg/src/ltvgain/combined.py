"""Power iteration for the estimate, one Riccati solve to certify it."""

from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np

from .errors import ConstructionFailedError
from .model import LtvSystem
from .ode import DEFAULT_DIVERGENCE_THRESHOLD
from .power import DEFAULT_MAX_ITERS, forward_gain, power_iterate
from .rde import GainBounds, construct_lower_bound, feedthrough_bound, solve_rde
from .signal import Signal, analysis_grid, normalize, random_signal

logger = logging.getLogger(__name__)

__all__ = ["combined_gain", "DEFAULT_MAX_OUTER"]

DEFAULT_MAX_OUTER = 10
RESEED_NOISE = 0.01


def _perturb(d: Signal, seed: int) -> Signal:
    noise = random_signal(d.times, d.dim, seed)
    return normalize(d + noise.scaled(RESEED_NOISE))


def combined_gain(
    sys: LtvSystem,
    tol: float,
    max_outer: int = DEFAULT_MAX_OUTER,
    seed: int = 0,
    *,
    inner_tol: Optional[float] = None,
    steps: Optional[int] = None,
    max_inner_iters: int = DEFAULT_MAX_ITERS,
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD,
) -> GainBounds:
    """Certified gain bounds from alternating power iterations and Riccati checks.

    Each outer step runs the power iteration to ``inner_tol`` (default
    ``tol / 5``) and solves the Riccati equation once at
    ``gamma_try = max(gamma*, gamma_lb) + tol``. If the solution exists the
    bracket ``[max(gamma_lb, gamma*), gamma_try]`` is returned. Otherwise
    ``gamma_try`` becomes the lower bound and the disturbance built from the
    blow-up seeds the next power iteration.

    Args:
        sys: Plant to analyse.
        tol: Absolute bracket width.
        max_outer: Cap on Riccati solves; when reached the best bracket so far
            is returned with ``converged=False``.
        seed: Seed of the first starting disturbance and of reseeding noise.
        inner_tol: Power-iteration tolerance.
        steps: Analysis grid steps.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    if max_outer < 1:
        raise ValueError(f"max_outer must be at least 1, got {max_outer}")
    inner_tol = tol / 5.0 if inner_tol is None else inner_tol
    start = time.perf_counter()
    sys.check()
    grid = analysis_grid(sys, steps)

    lb = feedthrough_bound(sys, grid)
    ub = np.inf
    d_lb: Optional[Signal] = None
    achieved: Optional[float] = None
    seed_signal = random_signal(grid, sys.n_d, seed)
    solves = 0
    power_its = 0
    history = []
    converged = False
    for outer in range(1, max_outer + 1):
        pi = power_iterate(
            sys, seed_signal, max_iters=max_inner_iters, tol=inner_tol, divergence_threshold=divergence_threshold
        )
        power_its += pi.iterations
        gamma_star = pi.gamma_star
        # the estimate may stall below a lower bound already certified
        gamma_try = max(gamma_star, lb) + tol
        sol = solve_rde(sys, gamma_try, grid=grid, divergence_threshold=divergence_threshold)
        solves += 1
        history.append((gamma_star, gamma_try, sol.exists, sol.t_star))
        logger.debug("outer %d: gamma*=%.6g try=%.6g exists=%s", outer, gamma_star, gamma_try, sol.exists)

        star_gain, _, _ = forward_gain(sys, pi.d_star, divergence_threshold)
        if star_gain >= lb:
            lb_candidate, cand_signal, cand_gain = max(gamma_star, lb), pi.d_star, star_gain
        else:
            lb_candidate, cand_signal, cand_gain = lb, d_lb, achieved

        if sol.exists:
            ub = gamma_try
            lb = lb_candidate
            if cand_signal is not None:
                d_lb, achieved = cand_signal, cand_gain
            converged = True
            break

        lb = gamma_try
        try:
            witness = construct_lower_bound(sys, sol, check_tol=tol, fallback=pi.d_star)
        except ConstructionFailedError as exc:
            logger.info("outer %d: no lower-bound disturbance (%s)", outer, exc)
            witness = None
        if witness is not None and not witness.fallback_used:
            d_lb, achieved = witness.d, witness.achieved
            seed_signal = witness.d
        else:
            if witness is not None:
                d_lb, achieved = witness.d, witness.achieved
            seed_signal = _perturb(pi.d_star, seed + outer)

    if not converged:
        logger.warning("combined algorithm stopped after %d Riccati solves without certifying", solves)
    if d_lb is not None and achieved is not None and achieved < lb - 10.0 * tol:
        d_lb, achieved = None, None
    return GainBounds(
        gamma_lb=float(lb),
        gamma_ub=float(ub),
        d_lb=d_lb,
        achieved_gain=achieved,
        iterations=len(history),
        rde_solves=solves,
        power_iterations=power_its,
        wall_time=time.perf_counter() - start,
        converged=converged,
        termination="tolerance_met" if converged else "max_outer",
        algorithm="combined",
        tolerance=tol,
        history=history,
    )
