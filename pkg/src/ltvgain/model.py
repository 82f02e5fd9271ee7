"""Finite-horizon LTV plants and their adjoints.

A plant is

    xdot = A(t) x + B(t) d
    e_I  = C_I(t) x + D_I(t) d
    e_E  = C_E(t) x

on ``[0, T]`` with ``x(0) = 0``. There is deliberately no D_E: the terminal
Euclidean channel never has feedthrough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import OutOfDomainError, ValidationError
from .linalg import max_singular_value

__all__ = ["TvMatrixFn", "LtvSystem", "AdjointSystem", "NodeTable", "adjoint", "validate", "evaluate"]


class TvMatrixFn:
    """A matrix-valued function of time, constant or sampled on a grid.

    Gridded sources are linearly interpolated between samples; evaluating at a
    grid time returns the stored sample unchanged. There is no extrapolation.
    """

    def __init__(self, samples, times=None):
        samples = np.array(samples, dtype=float)
        if times is None:
            if samples.ndim != 2:
                raise ValueError(f"constant source needs a 2-D matrix, got shape {samples.shape}")
            self.times = None
        else:
            self.times = np.asarray(times, dtype=float).ravel()
            if samples.ndim != 3:
                raise ValueError(f"gridded source needs a stack of matrices, got shape {samples.shape}")
        samples.setflags(write=False)
        self.samples = samples

    @classmethod
    def constant(cls, matrix) -> "TvMatrixFn":
        return cls(np.atleast_2d(np.asarray(matrix, dtype=float)))

    @classmethod
    def gridded(cls, times, samples) -> "TvMatrixFn":
        return cls(samples, times)

    @classmethod
    def from_function(cls, fn: Callable[[float], np.ndarray], times) -> "TvMatrixFn":
        """Sample ``fn`` on ``times``; the result interpolates linearly in between."""
        times = np.asarray(times, dtype=float)
        return cls(np.stack([np.atleast_2d(fn(t)) for t in times]), times)

    @property
    def is_constant(self) -> bool:
        return self.times is None

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.samples.shape[-2:])

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def span(self) -> tuple[float, float]:
        if self.is_constant:
            return (-math.inf, math.inf)
        return (float(self.times[0]), float(self.times[-1]))

    def __call__(self, t: float) -> np.ndarray:
        if self.is_constant:
            return self.samples
        times = self.times
        if not times[0] <= t <= times[-1]:
            raise OutOfDomainError(f"t={t!r} outside sampled range [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        if times[k] == t:
            return self.samples[k]
        w = (t - times[k]) / (times[k + 1] - times[k])
        return (1.0 - w) * self.samples[k] + w * self.samples[k + 1]

    def at(self, ts) -> np.ndarray:
        """Vectorized evaluation, shape ``(len(ts), rows, cols)``."""
        ts = np.asarray(ts, dtype=float)
        if self.is_constant:
            return np.broadcast_to(self.samples, (ts.size,) + self.shape)
        times = self.times
        if ts.size and (ts.min() < times[0] or ts.max() > times[-1]):
            raise OutOfDomainError(f"evaluation times leave sampled range [{times[0]}, {times[-1]}]")
        k = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
        w = ((ts - times[k]) / (times[k + 1] - times[k]))[:, None, None]
        out = (1.0 - w) * self.samples[k] + w * self.samples[k + 1]
        exact = times[k] == ts
        out[exact] = self.samples[k[exact]]
        return out

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "TvMatrixFn":
        """Apply a linear map samplewise; the grid is shared with the parent."""
        if self.is_constant:
            return TvMatrixFn(fn(self.samples))
        return TvMatrixFn(np.stack([fn(s) for s in self.samples]), self.times)

    def violations(self, name: str, shape: Optional[tuple[int, int]] = None, horizon: Optional[float] = None):
        out = []
        if not np.all(np.isfinite(self.samples)):
            out.append(f"{name}: non-finite entries")
        if not self.is_constant:
            times = self.times
            if len(times) != len(self.samples):
                out.append(f"{name}.times: {len(times)} times but {len(self.samples)} samples")
            if len(times) < 2:
                out.append(f"{name}.times: need at least two grid points")
            elif np.any(np.diff(times) <= 0):
                out.append(f"{name}.times: times not strictly increasing")
            if horizon is not None and len(times) and (times[0] > 0.0 or times[-1] < horizon):
                out.append(f"{name}.times: grid [{times[0]:g}, {times[-1]:g}] does not cover [0, {horizon:g}]")
        if shape is not None and self.shape != tuple(shape):
            out.append(
                f"{name}: dimension mismatch, expected {shape[0]}x{shape[1]}, got {self.rows}x{self.cols}"
            )
        return out

    def __repr__(self):
        kind = "constant" if self.is_constant else f"gridded[{len(self.times)}]"
        return f"TvMatrixFn({kind}, {self.rows}x{self.cols})"


def _rows(value) -> int:
    if value is None:
        return 0
    if isinstance(value, TvMatrixFn):
        return value.rows
    return np.atleast_2d(np.asarray(value, dtype=float)).shape[0]


def _as_source(value, rows=None, cols=None) -> TvMatrixFn:
    if isinstance(value, TvMatrixFn):
        return value
    if value is None:
        return TvMatrixFn(np.zeros((rows, cols)))
    return TvMatrixFn.constant(value)


class NodeTable:
    """Coefficient lookup at the points a fixed-step RK4 sweep touches.

    For a grid ``t_0 < ... < t_N`` the nodes are the grid times and the step
    midpoints, interleaved: node ``2k`` is ``t_k`` and node ``2k+1`` is
    ``0.5 * (t_k + t_{k+1})``. Midpoints are computed exactly as the
    integrator computes them, so float keys match bit for bit.
    """

    def __init__(self, grid):
        grid = np.asarray(grid, dtype=float)
        nodes = np.empty(2 * len(grid) - 1)
        nodes[0::2] = grid
        nodes[1::2] = 0.5 * (grid[:-1] + grid[1:])
        self.grid = grid
        self.nodes = nodes
        # float time -> node number, for integrator callbacks
        self.lookup = {float(t): i for i, t in enumerate(nodes)}

    def index(self, t: float) -> int:
        return self.lookup[t]

    def tabulate(self, source: TvMatrixFn) -> "NodeValues":
        if source.is_constant:
            return NodeValues(source.samples, None)
        return NodeValues(None, source.at(self.nodes))

    def on_nodes(self, values: np.ndarray) -> np.ndarray:
        """Grid samples (first axis) to node values by linear interpolation."""
        values = np.asarray(values, dtype=float)
        out = np.empty((len(self.nodes),) + values.shape[1:])
        out[0::2] = values
        out[1::2] = 0.5 * (values[:-1] + values[1:])
        return out


class NodeValues:
    """A source tabulated on a :class:`NodeTable`; indexing by node returns the matrix."""

    __slots__ = ("const", "table")

    def __init__(self, const, table):
        self.const = const
        self.table = table

    @property
    def is_constant(self):
        return self.const is not None

    def __getitem__(self, i):
        return self.const if self.const is not None else self.table[i]

    def grid_values(self, n_grid):
        """Values at the grid points only, shape ``(n_grid, r, c)``."""
        if self.const is not None:
            return np.broadcast_to(self.const, (n_grid,) + self.const.shape)
        return self.table[0::2]

    def all(self, n_nodes):
        if self.const is not None:
            return np.broadcast_to(self.const, (n_nodes,) + self.const.shape)
        return self.table


@dataclass(frozen=True, eq=False)
class LtvSystem:
    """Plant with an L2 output channel ``e_I`` and a terminal Euclidean channel ``e_E``.

    Missing channels are given as ``None`` and become zero-row matrices.
    Construction never raises on bad data; call :func:`validate` (or
    :meth:`check`) to get the list of problems.
    """

    A: TvMatrixFn
    B: TvMatrixFn
    C_I: TvMatrixFn
    D_I: TvMatrixFn
    C_E: TvMatrixFn
    horizon: float
    dims: Optional[dict] = None
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def create(cls, A, B, C_I=None, D_I=None, C_E=None, *, horizon, dims=None) -> "LtvSystem":
        A = _as_source(A)
        B = _as_source(B)
        dims = dict(dims or {})
        n_x = dims.get("n_x", A.rows)
        n_d = dims.get("n_d", B.cols)
        n_I = dims.get("n_I", _rows(C_I) if C_I is not None else _rows(D_I))
        n_E = dims.get("n_E", _rows(C_E))
        return cls(
            A=A,
            B=B,
            C_I=_as_source(C_I, n_I, n_x),
            D_I=_as_source(D_I, n_I, n_d),
            C_E=_as_source(C_E, n_E, n_x),
            horizon=float(horizon),
            dims=dims or None,
        )

    @property
    def n_x(self) -> int:
        return int(self.dims["n_x"]) if self.dims and "n_x" in self.dims else self.A.rows

    @property
    def n_d(self) -> int:
        return int(self.dims["n_d"]) if self.dims and "n_d" in self.dims else self.B.cols

    @property
    def n_I(self) -> int:
        return int(self.dims["n_I"]) if self.dims and "n_I" in self.dims else self.C_I.rows

    @property
    def n_E(self) -> int:
        return int(self.dims["n_E"]) if self.dims and "n_E" in self.dims else self.C_E.rows

    def sources(self):
        return {"A": self.A, "B": self.B, "C_I": self.C_I, "D_I": self.D_I, "C_E": self.C_E}

    def check(self) -> "LtvSystem":
        problems = validate(self)
        if problems:
            raise ValidationError(problems)
        return self

    def node_table(self, grid) -> tuple[NodeTable, dict]:
        """Node table for ``grid`` plus every source tabulated on it (cached)."""
        grid = np.asarray(grid, dtype=float)
        key = (len(grid), float(grid[0]), float(grid[-1]), hash(grid.tobytes()))
        hit = self._tables.get(key)
        if hit is None:
            table = NodeTable(grid)
            hit = (table, {name: table.tabulate(src) for name, src in self.sources().items()})
            self._tables.clear()
            self._tables[key] = hit
        return hit

    def shortest_timescale(self) -> float:
        """``1 / max_t ||A(t)||_2`` over the stored samples (inf when A vanishes)."""
        stack = [self.A.samples] if self.A.is_constant else self.A.samples
        rate = max((max_singular_value(M) for M in stack), default=0.0)
        return math.inf if rate == 0.0 else 1.0 / rate


def evaluate(sys: LtvSystem, t: float):
    """``(A, B, C_I, D_I, C_E)`` at time ``t`` in ``[0, T]``."""
    if not 0.0 <= t <= sys.horizon:
        raise OutOfDomainError(f"t={t!r} outside horizon [0, {sys.horizon}]")
    return tuple(src(t) for src in sys.sources().values())


def validate(sys: LtvSystem) -> list[str]:
    """Every invariant violation of ``sys`` as a path-qualified message."""
    problems = []
    T = sys.horizon
    if not (math.isfinite(T) and T > 0):
        problems.append(f"horizon: must be finite and > 0, got {T!r}")
        T = None
    n_x, n_d, n_I, n_E = sys.n_x, sys.n_d, sys.n_I, sys.n_E
    for name, value in (("n_x", n_x), ("n_d", n_d), ("n_I", n_I), ("n_E", n_E)):
        if value < 0:
            problems.append(f"dims.{name}: must be nonnegative, got {value}")
    if n_I + n_E < 1:
        problems.append("dims: need at least one output channel (n_I + n_E >= 1)")
    expected = {"A": (n_x, n_x), "B": (n_x, n_d), "C_I": (n_I, n_x), "D_I": (n_I, n_d), "C_E": (n_E, n_x)}
    for name, src in sys.sources().items():
        problems.extend(src.violations(name, expected[name], T))
    return problems


@dataclass(frozen=True)
class AdjointSystem:
    """Costate dynamics ``pdot = -A^T p - C_I^T q``, ``r = B^T p + D_I^T q``, ``p(T) = C_E(T)^T w``."""

    A: TvMatrixFn
    B: TvMatrixFn
    C: TvMatrixFn
    D: TvMatrixFn
    terminal: np.ndarray
    horizon: float

    def evaluate(self, t):
        if not 0.0 <= t <= self.horizon:
            raise OutOfDomainError(f"t={t!r} outside horizon [0, {self.horizon}]")
        return self.A(t), self.B(t), self.C(t), self.D(t)


def adjoint(sys: LtvSystem) -> AdjointSystem:
    sys.check()
    return AdjointSystem(
        A=sys.A.map(lambda M: -M.T),
        B=sys.C_I.map(lambda M: -M.T),
        C=sys.B.map(lambda M: M.T),
        D=sys.D_I.map(lambda M: M.T),
        terminal=np.array(sys.C_E(sys.horizon).T),
        horizon=sys.horizon,
    )
