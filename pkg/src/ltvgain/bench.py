"""Timing study: one Riccati sweep against one power-iteration step, by system order."""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .combined import combined_gain
from .model import LtvSystem
from .power import power_iterate
from .rde import bisect, solve_rde
from .signal import analysis_grid, random_signal

logger = logging.getLogger(__name__)

__all__ = ["random_stable_system", "BenchRow", "time_sample", "run_bench", "write_bench_csv"]

BENCH_STEPS = 2000
CERTIFY_GAMMA = 2.0  # comfortably above the normalized gain of about one


def _orthogonal(n: int, rng) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_stable_system(order: int, horizon: float = 10.0, seed: int = 0, steps: int = BENCH_STEPS) -> LtvSystem:
    """Random stable SISO LTI plant with gain close to one.

    Eigenvalues have real parts uniform in ``[-2, -0.1]``; about half come in
    complex pairs. ``B`` and ``C_I`` are standard normal and ``C_I`` is then
    divided by a coarse power-iteration estimate of the gain.
    """
    rng = np.random.default_rng(seed)
    A = np.zeros((order, order))
    k = 0
    while k < order:
        re = rng.uniform(-2.0, -0.1)
        if k + 1 < order and rng.random() < 0.5:
            im = rng.uniform(0.1, 2.0)
            A[k : k + 2, k : k + 2] = [[re, im], [-im, re]]
            k += 2
        else:
            A[k, k] = re
            k += 1
    Q = _orthogonal(order, rng)
    A = Q @ A @ Q.T
    B = rng.standard_normal((order, 1))
    C = rng.standard_normal((1, order))
    sys = LtvSystem.create(A, B, C, np.zeros((1, 1)), horizon=horizon)
    coarse = power_iterate(sys, random_signal(analysis_grid(sys, steps), 1, seed), max_iters=15, tol=1e-2)
    return LtvSystem.create(A, B, C / coarse.gamma_star, np.zeros((1, 1)), horizon=horizon)


@dataclass
class SampleTiming:
    order: int
    t_rde: float
    t_pi: float
    t_power: Optional[float] = None
    t_bisect: Optional[float] = None
    t_combined: Optional[float] = None


@dataclass
class BenchRow:
    order: int
    t_rde: float
    t_pi: float
    t_power: Optional[float] = None
    t_bisect: Optional[float] = None
    t_combined: Optional[float] = None

    @property
    def ratio(self) -> float:
        return self.t_rde / self.t_pi


def time_sample(order: int, seed: int, horizon: float = 10.0, tol: Optional[float] = None, steps: int = BENCH_STEPS):
    """Time one Riccati sweep and one power-iteration step on a random plant.

    With ``tol`` set, also time the three full algorithms at that tolerance.
    """
    sys = random_stable_system(order, horizon, seed, steps)
    grid = analysis_grid(sys, steps)
    d = random_signal(grid, sys.n_d, seed)
    power_iterate(sys, d, max_iters=1)  # warm the node-table cache
    t0 = time.perf_counter()
    power_iterate(sys, d, max_iters=1)
    t_pi = time.perf_counter() - t0
    t0 = time.perf_counter()
    solve_rde(sys, CERTIFY_GAMMA, grid=grid, keep="last")
    t_rde = time.perf_counter() - t0
    out = SampleTiming(order, t_rde, t_pi)
    if tol is not None:
        t0 = time.perf_counter()
        power_iterate(sys, d, tol=tol)
        out.t_power = time.perf_counter() - t0
        out.t_bisect = bisect(sys, tol, steps=steps).wall_time
        out.t_combined = combined_gain(sys, tol, seed=seed, steps=steps).wall_time
    logger.info("order %d seed %d: T_RDE=%.4gs T_PI=%.4gs", order, seed, t_rde, t_pi)
    return out


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def run_bench(
    orders: Sequence[int],
    samples: int = 3,
    horizon: float = 10.0,
    seed: int = 0,
    tol: Optional[float] = None,
    jobs: int = 1,
    steps: int = BENCH_STEPS,
) -> list[BenchRow]:
    """Average timings over ``samples`` random plants per order.

    Sample ``i`` of order ``n`` uses seed ``seed + 1000 * n + i``. With
    ``jobs > 1`` samples run in separate processes, which perturbs the
    timings on machines with few cores.
    """
    tasks = [(n, seed + 1000 * n + i) for n in orders for i in range(samples)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(time_sample, n, s, horizon, tol, steps) for n, s in tasks]
            timings = [f.result() for f in futures]
    else:
        timings = [time_sample(n, s, horizon, tol, steps) for n, s in tasks]
    rows = []
    for n in orders:
        mine = [t for t in timings if t.order == n]
        rows.append(
            BenchRow(
                order=n,
                t_rde=_mean(t.t_rde for t in mine),
                t_pi=_mean(t.t_pi for t in mine),
                t_power=_mean(t.t_power for t in mine),
                t_bisect=_mean(t.t_bisect for t in mine),
                t_combined=_mean(t.t_combined for t in mine),
            )
        )
    return rows


def write_bench_csv(path, rows: Iterable[BenchRow]) -> None:
    rows = list(rows)
    compare = any(r.t_bisect is not None for r in rows)
    header = ["n_x", "mean_T_RDE", "mean_T_PI", "ratio"]
    if compare:
        header += ["mean_T_power", "mean_T_bisect", "mean_T_combined"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            line = [r.order, f"{r.t_rde:.17g}", f"{r.t_pi:.17g}", f"{r.ratio:.17g}"]
            if compare:
                line += [f"{v:.17g}" for v in (r.t_power, r.t_bisect, r.t_combined)]
            writer.writerow(line)
