import math

import numpy as np
import pytest

from helpers import random_ltv
from ltvgain import LtvSystem, combined_gain, forward_gain, l2e_gain, solve_lde, wc_disturbance_l2e
from ltvgain.errors import LtvGainError, UnreachableOutputError
from ltvgain.examples import scalar_decay_gain
from ltvgain.linalg import sym_eig
from ltvgain.signal import l2_norm


def integrator_bank(C_E, horizon=2.0):
    return LtvSystem.create(np.zeros((2, 2)), np.eye(2), C_E=C_E, horizon=horizon)


def test_scalar_gramian_and_gain(scalar):
    trace = solve_lde(scalar)
    assert trace.X[-1, 0, 0] == pytest.approx((1 - math.exp(-2)) / 2, abs=1e-6)
    gain, v1 = l2e_gain(trace, 1.0)
    assert gain == pytest.approx(0.65752, abs=1e-5)
    assert gain == pytest.approx(scalar_decay_gain(1.0), abs=1e-9)
    assert v1.tolist() == [1.0]


def test_scalar_worst_case_kernel(scalar):
    trace = solve_lde(scalar)
    d = wc_disturbance_l2e(scalar, trace, 1.0)
    t = d.times
    kernel = np.exp(-(1 - t)) / scalar_decay_gain(1.0)
    assert np.max(np.abs(d.samples[:, 0] - kernel)) <= 1e-4
    assert l2_norm(d) == pytest.approx(1.0, abs=1e-4)
    assert forward_gain(scalar, d)[0] == pytest.approx(scalar_decay_gain(1.0), rel=2e-3)


def test_zero_input_matrix():
    sys = LtvSystem.create([[-1.0]], [[0.0]], C_E=[[1.0]], horizon=1.0)
    trace = solve_lde(sys)
    assert np.all(trace.X == 0.0) and np.all(trace.lambda1 == 0.0)
    with pytest.raises(UnreachableOutputError):
        wc_disturbance_l2e(sys, trace, 1.0)


def test_integrators_grow_linearly():
    trace = solve_lde(integrator_bank(np.eye(2)))
    assert np.allclose(trace.X, trace.times[:, None, None] * np.eye(2), atol=1e-12)
    assert np.allclose(trace.lambda1, trace.times, atol=1e-12)
    assert l2e_gain(trace, 0.0)[0] == 0.0


def test_partial_output():
    trace = solve_lde(integrator_bank(np.diag([1.0, 0.0])))
    gain, v1 = l2e_gain(trace, 2.0)
    assert gain == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert np.allclose(v1, [1.0, 0.0])


def test_identity_worst_case_is_constant():
    sys = integrator_bank(np.eye(2), horizon=1.0)
    trace = solve_lde(sys)
    d = wc_disturbance_l2e(sys, trace, 1.0)
    _, v1 = l2e_gain(trace, 1.0)
    assert np.allclose(d.samples, v1, atol=1e-12)
    assert l2_norm(d) == pytest.approx(1.0, abs=1e-12)


def test_trace_invariants():
    sys = random_ltv(4, n_I=0, n_E=2)
    trace = solve_lde(sys)
    assert np.all(trace.X[0] == 0.0)
    assert all(sym_eig(X)[0][-1] >= -1e-8 for X in trace.X[::100])
    C = sys.C_E.at(trace.times)
    Y = np.einsum("kij,kjl,kml->kim", C, trace.X, C)
    assert np.array_equal(0.5 * (Y + np.swapaxes(Y, 1, 2)), trace.Y)
    assert np.all(trace.lambda1 >= 0.0)


def test_needs_terminal_output_and_no_l2_channel(g1):
    with pytest.raises(LtvGainError):
        solve_lde(g1)
    mixed = LtvSystem.create([[-1.0]], [[1.0]], [[1.0]], [[0.0]], [[1.0]], horizon=1.0)
    with pytest.raises(LtvGainError):
        l2e_gain(solve_lde(mixed), 1.0)


def test_off_grid_tau_snaps_with_warning(scalar):
    trace = solve_lde(scalar)
    with pytest.warns(UserWarning):
        gain, _ = l2e_gain(trace, 0.50001)
    assert gain == pytest.approx(l2e_gain(trace, 0.5)[0])


def test_interior_tau_matches_truncated_horizon():
    sys = random_ltv(7, n_I=0, n_E=1, horizon=3.0)
    trace = solve_lde(sys)
    for tau in (0.9, 1.8, 2.4):
        short = LtvSystem.create(sys.A, sys.B, sys.C_I, sys.D_I, sys.C_E, horizon=tau, dims=sys.dims)
        res = combined_gain(short, 1e-3)
        assert res.gamma_lb - 2e-3 <= l2e_gain(trace, tau)[0] <= res.gamma_ub + 2e-3


def test_worst_case_optimal_on_random_system():
    sys = random_ltv(11, n_I=0, n_E=2)
    trace = solve_lde(sys)
    gain, _ = l2e_gain(trace, sys.horizon)
    d = wc_disturbance_l2e(sys, trace, sys.horizon)
    assert forward_gain(sys, d)[0] == pytest.approx(gain, rel=2e-3)
