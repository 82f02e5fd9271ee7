import math

import pytest

from helpers import random_ltv
from ltvgain import bisect, combined_gain, forward_gain, power_iterate


@pytest.fixture(scope="module")
def g1_result(g1):
    return combined_gain(g1, 5e-3)


@pytest.fixture(scope="module")
def sine_ltv_result(sine_ltv):
    return combined_gain(sine_ltv, 0.01)


def test_g1_bounds(g1_result):
    assert g1_result.converged
    assert g1_result.gamma_ub - g1_result.gamma_lb <= 5e-3 * (1 + 1e-12)
    assert g1_result.gamma_lb - 5e-3 <= 7.159 <= g1_result.gamma_ub + 5e-3
    assert g1_result.rde_solves <= 3


def test_sine_ltv_bounds(sine_ltv_result):
    assert sine_ltv_result.gamma_lb == pytest.approx(1.799, abs=0.01)
    assert sine_ltv_result.gamma_ub == pytest.approx(1.809, abs=0.01)
    assert sine_ltv_result.iterations <= 3


def test_memoryless_exact(memoryless):
    res = combined_gain(memoryless, 1e-3)
    assert res.gamma_lb == pytest.approx(3.0, abs=1e-12)
    assert res.gamma_ub == pytest.approx(3.001, abs=1e-12)


def test_witness_reaches_lower_bound(g1, g1_result, sine_ltv, sine_ltv_result):
    for sys, res in ((g1, g1_result), (sine_ltv, sine_ltv_result)):
        assert forward_gain(sys, res.d_lb)[0] >= res.gamma_lb - 10 * res.tolerance


def test_fewer_solves_than_bisection(g1, g1_result):
    assert g1_result.rde_solves < bisect(g1, 5e-3, witness=False).rde_solves


@pytest.mark.parametrize("seed", range(3))
def test_agrees_with_bisection(seed):
    sys = random_ltv(seed)
    c = combined_gain(sys, 1e-2)
    b = bisect(sys, 1e-2)
    assert max(c.gamma_lb, b.gamma_lb) <= min(c.gamma_ub, b.gamma_ub) + 1e-12
    for d in (c.d_lb, b.d_lb):
        if d is not None:
            assert forward_gain(sys, d)[0] <= min(c.gamma_ub, b.gamma_ub) + 1e-9
    assert power_iterate(sys, tol=1e-3).gamma_star <= min(c.gamma_ub, b.gamma_ub)


def test_outer_cap_reports_not_converged(sine_ltv):
    res = combined_gain(sine_ltv, 0.01, max_outer=1)
    assert not res.converged and res.termination == "max_outer"
    assert math.isinf(res.gamma_ub) and res.gamma_lb > 1.7


def test_deterministic(g1, g1_result):
    again = combined_gain(g1, 5e-3)
    assert (again.gamma_lb, again.gamma_ub) == (g1_result.gamma_lb, g1_result.gamma_ub)


def test_rejects_bad_tolerance(g1):
    with pytest.raises(ValueError):
        combined_gain(g1, -1.0)
