import math

import numpy as np
import pytest

from ltvgain import LtvSystem, TvMatrixFn, adjoint, evaluate, validate
from ltvgain.errors import OutOfDomainError, ValidationError
from ltvgain.examples import g1, sine_ltv
from ltvgain.model import NodeTable


def test_constant_source_everywhere():
    sys = LtvSystem.create([[-1.0]], [[1.0]], [[1.0]], horizon=1.0)
    A, B, C_I, D_I, C_E = evaluate(sys, 0.5)
    assert A.tolist() == [[-1.0]]
    assert D_I.shape == (1, 1) and C_E.shape == (0, 1)


def test_gridded_midpoint_interpolation():
    src = TvMatrixFn.gridded([0.0, 1.0], [[[0.0]], [[2.0]]])
    assert src(0.5).tolist() == [[1.0]]
    assert src(1.0).tolist() == [[2.0]]
    assert np.allclose(src.at([0.0, 0.25, 1.0])[:, 0, 0], [0.0, 0.5, 2.0])


def test_sine_ltv_matrix_at_quarter_period():
    sys = sine_ltv()
    A = evaluate(sys, math.pi / 2)[0]
    assert np.allclose(A, [[0.0, 1.0], [0.0, -4.0]], atol=1e-5)


def test_evaluate_outside_horizon():
    with pytest.raises(OutOfDomainError):
        evaluate(g1(), 10.5)
    with pytest.raises(OutOfDomainError):
        TvMatrixFn.gridded([0.0, 1.0], np.zeros((2, 1, 1)))(1.5)


def test_sources_are_copies():
    A = np.array([[-1.0]])
    src = TvMatrixFn.constant(A)
    A[0, 0] = 5.0
    assert src(0.0)[0, 0] == -1.0
    assert A.flags.writeable


def test_adjoint_scalar():
    adj = adjoint(LtvSystem.create([[-1.0]], [[2.0]], [[1.0]], [[0.0]], horizon=1.0))
    A, B, C, D = adj.evaluate(0.3)
    assert A.tolist() == [[1.0]] and C.tolist() == [[2.0]] and B.tolist() == [[-1.0]]


def test_adjoint_g1_state_matrix():
    A = adjoint(g1()).evaluate(0.0)[0]
    assert np.allclose(A, [[0.1, 0.5], [-0.4, 0.0]])


def test_adjoint_output_rows_follow_disturbance():
    sys = LtvSystem.create(np.zeros((3, 3)), np.ones((3, 2)), np.ones((1, 3)), np.ones((1, 2)), horizon=1.0)
    _, B, C, D = adjoint(sys).evaluate(0.0)
    assert C.shape == (2, 3) and D.shape == (2, 1) and B.shape == (3, 1)


def test_validate_good_and_bad():
    assert validate(g1()) == []
    bad_grid = LtvSystem.create(
        TvMatrixFn.gridded([0.0, 0.0, 1.0], np.zeros((3, 1, 1))), [[1.0]], [[1.0]], horizon=1.0
    )
    assert any("times not strictly increasing" in v for v in validate(bad_grid))
    bad_dims = LtvSystem.create(np.zeros((2, 2)), np.zeros((3, 1)), [[1.0, 0.0]], horizon=1.0)
    problems = validate(bad_dims)
    assert any(p.startswith("B:") and "dimension mismatch" in p for p in problems)
    with pytest.raises(ValidationError):
        bad_dims.check()


def test_validate_coverage_and_horizon():
    short = LtvSystem.create(TvMatrixFn.gridded([0.0, 0.5], np.zeros((2, 1, 1))), [[1.0]], [[1.0]], horizon=1.0)
    assert any("does not cover" in v for v in validate(short))
    assert any(v.startswith("horizon") for v in validate(LtvSystem.create([[0.0]], [[1.0]], [[1.0]], horizon=-1)))
    no_output = LtvSystem.create([[0.0]], [[1.0]], horizon=1.0)
    assert any("output channel" in v for v in validate(no_output))


def test_node_table_matches_integrator_midpoints():
    grid = np.linspace(0.0, 3.3, 7)
    table = NodeTable(grid)
    for a, b in zip(grid[:-1], grid[1:]):
        assert table.index(0.5 * (float(a) + float(b))) % 2 == 1
    assert table.index(float(grid[3])) == 6
