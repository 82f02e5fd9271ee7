"""Reference systems used in the test suite and shipped as JSON fixtures."""

from __future__ import annotations

import math

import numpy as np

from .model import LtvSystem, TvMatrixFn

__all__ = ["g1", "g2", "sine_ltv", "scalar_decay", "memoryless", "SINE_LTV_SAMPLES"]

SINE_LTV_SAMPLES = 2001

_G1_A = np.array([[-0.1, 0.4], [-0.5, 0.0]])
_G1_B = np.array([[2.0], [0.0]])
_G1_C = np.array([[0.0, 1.0]])


def g1(horizon: float = 10.0) -> LtvSystem:
    """Lightly damped second-order SISO plant with pure L2 output."""
    return LtvSystem.create(_G1_A, _G1_B, _G1_C, np.zeros((1, 1)), horizon=horizon)


def g2(horizon: float = 10.0) -> LtvSystem:
    """Block-diagonal ``diag(G1, 0.95 G1)``; same gain as :func:`g1`, nearly repeated top singular value."""
    Z = np.zeros((2, 2))
    A = np.block([[_G1_A, Z], [Z, _G1_A]])
    B = np.block([[_G1_B, np.zeros((2, 1))], [np.zeros((2, 1)), _G1_B]])
    C = np.block([[_G1_C, np.zeros((1, 2))], [np.zeros((1, 2)), 0.95 * _G1_C]])
    return LtvSystem.create(A, B, C, np.zeros((2, 2)), horizon=horizon)


def sine_ltv(horizon: float = 10.0, samples: int = SINE_LTV_SAMPLES) -> LtvSystem:
    """Two-state LTV plant with ``A(t) = [[-1 + sin t, 1], [0, -4]]`` sampled on a uniform grid."""
    times = np.linspace(0.0, horizon, samples)
    A = np.zeros((samples, 2, 2))
    A[:, 0, 0] = -1.0 + np.sin(times)
    A[:, 0, 1] = 1.0
    A[:, 1, 1] = -4.0
    return LtvSystem.create(
        TvMatrixFn.gridded(times, A), np.eye(2), np.eye(2), np.zeros((2, 2)), horizon=horizon
    )


def scalar_decay(horizon: float = 1.0) -> LtvSystem:
    """``xdot = -x + d`` with terminal output ``x(T)``; gain ``sqrt((1 - e^{-2T}) / 2)``."""
    return LtvSystem.create([[-1.0]], [[1.0]], C_E=[[1.0]], horizon=horizon)


def scalar_decay_gain(horizon: float = 1.0) -> float:
    return math.sqrt((1.0 - math.exp(-2.0 * horizon)) / 2.0)


def memoryless(gain: float = 3.0, horizon: float = 1.0) -> LtvSystem:
    """Pure feedthrough ``e_I = gain * d`` with a trivial one-state dynamics."""
    return LtvSystem.create([[0.0]], [[0.0]], [[0.0]], [[gain]], horizon=horizon)
