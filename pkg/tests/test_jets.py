import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exsphere import jets
from exsphere.jets import Jet, JetDomainError

from helpers import random_expression


def test_lift_coordinate_examples():
    a = jets.lift_coordinate(0, (2, 5), 2)
    assert a.value == 2
    np.testing.assert_array_equal(a.d1, [1, 0])
    np.testing.assert_array_equal(a.d2, np.zeros((2, 2)))

    b = jets.lift_coordinate(1, (0, 0, 0), 1)
    assert b.value == 0 and b.order == 1
    np.testing.assert_array_equal(b.d1, [0, 1, 0])


def test_lift_coordinate_errors():
    with pytest.raises(IndexError):
        jets.lift_coordinate(2, (0.0, 1.0), 1)
    with pytest.raises(ValueError):
        jets.lift_coordinate(0, (0.0,), 4)


def test_sine_taylor_coefficients_at_zero():
    s = jets.sin(jets.lift_coordinate(0, (0.0,), 3))
    assert s.value == 0
    assert s.d1[0] == 1
    assert s.d2[0, 0] == 0
    assert s.d3[0, 0, 0] == -1


def test_square_and_reciprocal():
    x = jets.lift_coordinate(0, (3.0,), 2)
    sq = x * x
    assert (sq.value, sq.d1[0], sq.d2[0, 0]) == (9, 6, 2)

    y = jets.lift_coordinate(0, (2.0,), 2)
    r = 1.0 / y
    assert r.value == pytest.approx(0.5)
    assert r.d1[0] == pytest.approx(-0.25)
    assert r.d2[0, 0] == pytest.approx(0.25)


def test_exp_of_zero_jet_keeps_direction():
    z = jets.variables(np.array([0.0, 0.0]), 2)
    u = z[0] * 0.3 - z[1] * 1.7
    e = jets.exp(u)
    assert e.value == 1
    np.testing.assert_allclose(e.d1, u.d1)


def test_domain_errors_carry_the_point():
    x = jets.lift_coordinate(0, (0.0, 1.0), 1)
    with pytest.raises(JetDomainError) as info:
        1.0 / x
    assert info.value.point is not None
    with pytest.raises(JetDomainError):
        jets.sqrt(x - 1.0)
    with pytest.raises(JetDomainError):
        jets.log(x * 0.0)


def test_mixed_order_truncates():
    a = jets.lift_coordinate(0, (0.5, 0.2), 3)
    b = jets.lift_coordinate(1, (0.5, 0.2), 1)
    c = a * b + jets.sin(a)
    assert c.order == 1
    assert c.d2 is None and c.d3 is None


def test_higher_coefficients_symmetric():
    x = jets.variables(np.array([0.3, -0.5, 0.7]), 3)
    f = jets.sin(x[0] * x[1]) * jets.exp(x[2]) + x[0] * x[1] * x[2]
    np.testing.assert_allclose(f.d2, f.d2.T, atol=1e-15)
    for perm in [(1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0)]:
        np.testing.assert_allclose(f.d3, f.d3.transpose(perm), atol=1e-14)


def test_mixed_third_derivative_against_closed_form():
    x0 = np.array([0.3, -0.5])
    x = jets.variables(x0, 3)
    w = jets.sin(x[0]) * jets.cos(x[1])
    # ∂x∂x∂y (sin x cos y) = sin x sin y
    assert w.d3[0, 0, 1] == pytest.approx(math.sin(0.3) * math.sin(-0.5), rel=1e-13)
    assert w.d3[0, 1, 0] == w.d3[0, 0, 1]


def test_finite_difference_examples():
    rep = jets.finite_difference_check(lambda x: jets.sin(x[0]) * jets.exp(x[1]), (0.3, 0.7), 1e-4)
    assert rep.d1.max < 1e-6

    rep = jets.finite_difference_check(lambda x: 2.5 + 0.0 * x[0], (0.1, 0.2, 0.3))
    assert rep.d1.max == 0.0

    rep = jets.finite_difference_check(lambda x: x[0] * x[0], (1.0,), 1e-3)
    assert rep.d2.max < 1e-5


def test_finite_difference_rejects_bad_step():
    with pytest.raises(ValueError):
        jets.finite_difference_check(lambda x: x[0], (1.0,), 0.0)


@pytest.mark.parametrize("seed", range(100))
def test_random_expressions_match_central_differences(seed):
    f = random_expression(seed)
    x0 = np.random.default_rng(1000 + seed).uniform(-0.8, 0.8, 3)
    rep = jets.finite_difference_check(f, x0)
    assert rep.d1.max < 1e-6
    assert rep.d2.max < 1e-4


def _random_jet(rng, n, order):
    coeffs = [np.array(rng.normal())]
    for m in range(1, order + 1):
        c = rng.normal(size=(n,) * m)
        # symmetrise
        c = sum(np.transpose(c, p) for p in __import__("itertools").permutations(range(m))) / math.factorial(m)
        coeffs.append(c)
    return Jet(coeffs, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_leibniz_rule(seed, n):
    rng = np.random.default_rng(seed)
    a, b = _random_jet(rng, n, 3), _random_jet(rng, n, 3)
    p = a * b
    a0, a1, a2, a3 = a.coeffs
    b0, b1, b2, b3 = b.coeffs
    e1 = a1 * b0 + a0 * b1
    e2 = a2 * b0 + np.multiply.outer(a1, b1) + np.multiply.outer(b1, a1) + a0 * b2
    sym = lambda t: t + t.transpose(1, 2, 0) + t.transpose(2, 0, 1)
    e3 = a3 * b0 + sym(np.multiply.outer(a2, b1)) + sym(np.multiply.outer(b2, a1)) + a0 * b3
    for got, want in [(p.d1, e1), (p.d2, e2), (p.d3, e3)]:
        scale = max(1.0, float(np.max(np.abs(want))))
        assert np.max(np.abs(got - want)) / scale < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_chain_rule_elementary(x, y):
    v = jets.variables(np.array([x, y]), 2)
    f = jets.atan(v[0] * v[1])
    t = x * y
    d = 1.0 / (1 + t * t)
    np.testing.assert_allclose(f.d1, [y * d, x * d], rtol=1e-12, atol=1e-14)
    dd = -2 * t / (1 + t * t) ** 2
    np.testing.assert_allclose(f.d2[0, 0], y * y * dd, rtol=1e-11, atol=1e-14)
    np.testing.assert_allclose(f.d2[0, 1], d + x * y * dd, rtol=1e-11, atol=1e-14)


def test_array_valued_jets_and_compose():
    x = jets.variables(np.array([0.4, -0.2]), 2)
    m = jets.stack([jets.stack([x[0], x[1]]), jets.stack([x[1] * x[1], jets.sin(x[0])])])
    assert m.shape == (2, 2)
    inv = jets.inv(m)
    ident = jets.einsum("ij,jk->ik", m, inv)
    np.testing.assert_allclose(ident.value, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(ident.d1, 0, atol=1e-13)
    np.testing.assert_allclose(ident.d2, 0, atol=1e-12)
