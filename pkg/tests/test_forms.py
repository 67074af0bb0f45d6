import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exsphere import jets, zoo
from exsphere.forms import (FormField, basis_form, codifferential, constant_form, covariant_derivative_form,
                            exterior_derivative, form_inner, hodge_star, hodge_star_field, interior_product,
                            interior_values, nabla_field_jet, volume_form, wedge, wedge_values)


def polynomial_form(n, k, seed, metric=None):
    """Random k-form whose components are quadratic polynomials times basis forms."""
    rng = np.random.default_rng(seed)
    terms = []
    for idx in itertools.combinations(range(n), k):
        c0, c1, c2 = rng.normal(), rng.normal(size=n), rng.normal(size=(n, n))
        terms.append((c0, c1, c2, basis_form(n, idx)))

    def comp(x):
        out = 0.0
        for c0, c1, c2, b in terms:
            p = x @ c1 + (x @ c2) @ x + c0 if not jets.is_jet(x) else \
                jets.einsum("i,i->", x, c1) + jets.einsum("j,j->", jets.einsum("i,ij->j", x, c2), x) + c0
            out = out + jets.outer(p, b) if jets.is_jet(p) else out + p * b
        return out

    return FormField(k, n, comp, metric=metric, label=f"random {k}-form")


def test_d_of_x_dy():
    f = FormField(1, 2, lambda x: jets.stack([x[0] * 0.0, x[0]]))
    np.testing.assert_array_equal(exterior_derivative(f).at(np.array([0.4, -1.0])), basis_form(2, (0, 1)))


def test_top_degree_derivative_is_flagged_zero():
    f = volume_form(zoo.sphere_metric(2))
    d = exterior_derivative(f)
    assert d.trivially_zero and d.degree == 3
    assert np.all(d.at(np.zeros(2)) == 0.0)


@pytest.mark.parametrize("seed", range(100))
def test_d_squared_vanishes(seed):
    n = 3 + seed % 2
    k = seed % (n - 1)
    f = polynomial_form(n, k, seed)
    x = np.random.default_rng(seed).uniform(-1, 1, n)
    assert np.max(np.abs(exterior_derivative(exterior_derivative(f)).at(x))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 10**6))
def test_graded_leibniz(p, q, seed):
    n = 5
    a, b = polynomial_form(n, p, seed), polynomial_form(n, q, seed + 1)
    x = np.random.default_rng(seed).uniform(-1, 1, n)
    lhs = exterior_derivative(wedge(a, b)).at(x)
    da, db = exterior_derivative(a).at(x), exterior_derivative(b).at(x)
    rhs = wedge_values(da, p + 1, b.at(x), q) + (-1) ** p * wedge_values(a.at(x), p, db, q + 1)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_wedge_normalization_and_square():
    dx, dy = constant_form(np.eye(3)[0]), constant_form(np.eye(3)[1])
    x = np.zeros(3)
    assert np.all(wedge(dx, dx).at(x) == 0.0)
    assert wedge(dx, dy).at(x)[0, 1] == 1.0
    np.testing.assert_array_equal(wedge(dx, dy).at(x), basis_form(3, (0, 1)))


def test_wedge_degree_overflow():
    a = constant_form(basis_form(3, (0, 1)))
    with pytest.raises(ValueError, match="overflow"):
        wedge(a, a)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_graded_commutativity(p, q, seed):
    n = 6
    a, b = polynomial_form(n, p, seed), polynomial_form(n, q, seed + 7)
    x = np.random.default_rng(seed).uniform(-1, 1, n)
    ab, ba = wedge(a, b).at(x), wedge(b, a).at(x)
    assert np.max(np.abs(ab - (-1) ** (p * q) * ba)) < 1e-12 * max(1.0, np.max(np.abs(ab)))


def test_interior_product_basic():
    f = constant_form(basis_form(2, (0, 1)))
    np.testing.assert_array_equal(interior_product([1.0, 0.0], f, np.zeros(2)), [0.0, 1.0])


def test_interior_product_of_function_is_an_error():
    f = FormField(0, 2, lambda x: x[0])
    with pytest.raises(ValueError):
        interior_product([1.0, 0.0], f, np.zeros(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_double_interior_product_vanishes(k, seed):
    rng = np.random.default_rng(seed)
    s = polynomial_form(5, k, seed).at(rng.uniform(-1, 1, 5))
    v = rng.normal(size=5)
    once = interior_values(v, s, k)
    if k >= 2:
        assert np.max(np.abs(interior_values(v, once, k - 1))) < 1e-12 * max(1.0, np.max(np.abs(s)))


def test_radial_contraction_of_g2_form_is_nearly_kahler():
    omega = zoo.nearly_kahler_form_s6()
    phi = zoo.g2_form()
    v = np.array([0.2, -0.1, 0.3, 0.05, -0.4, 0.15])
    # independent route: finite-difference Jacobian of the parametrization, then pull back x⌟φ
    h = 1e-6
    jac = np.stack([(zoo.inverse_stereographic(v + h * e) - zoo.inverse_stereographic(v - h * e)) / (2 * h)
                    for e in np.eye(6)], axis=1)
    x = zoo.inverse_stereographic(v)
    expected = jac.T @ np.einsum("i,ijk->jk", x, phi) @ jac
    got = omega.at(v)
    np.testing.assert_allclose(got, expected, atol=1e-8)
    assert abs(np.linalg.det(got)) > 1e-3


def test_hodge_of_one_on_plane():
    one = FormField(0, 2, lambda x: x[0] * 0.0 + 1.0, metric=zoo.flat_metric(2))
    np.testing.assert_array_equal(hodge_star(one, np.zeros(2)), basis_form(2, (0, 1)))


@pytest.mark.parametrize("n,k", [(n, k) for n in (2, 3, 4, 5) for k in range(n + 1)])
def test_double_hodge_sign(n, k):
    g = zoo.sphere_metric(n)
    f = polynomial_form(n, k, 10 * n + k, metric=g)
    x = g.sample(1)[0]
    twice = hodge_star_field(hodge_star_field(f)).at(x)
    sigma = f.at(x)
    assert np.max(np.abs(twice - (-1) ** (k * (n - k)) * sigma)) < 1e-11 * max(1.0, np.max(np.abs(sigma)))


def test_hodge_orientation_flips_sign():
    g = zoo.sphere_metric(3)
    f = polynomial_form(3, 1, 0, metric=g)
    x = g.sample(1)[0]
    np.testing.assert_allclose(hodge_star(f, x, orientation=-1), -hodge_star(f, x, orientation=1))


def test_hodge_of_contact_form_is_half_its_differential():
    spec = zoo.build("sasakian_sphere")
    eta = spec.distinguished_forms["contact"]
    for x in spec.metric.sample(5):
        assert np.max(np.abs(hodge_star(eta, x) - 0.5 * exterior_derivative(eta).at(x))) < 1e-8


def test_contact_differential_is_twice_kahler_pullback():
    eta = zoo.contact_form_s3()
    v = np.array([0.1, 0.3, -0.2])
    h = 1e-6
    jac = np.stack([(zoo.inverse_stereographic(v + h * e) - zoo.inverse_stereographic(v - h * e)) / (2 * h)
                    for e in np.eye(3)], axis=1)
    omega = zoo.kahler_form_flat(4)
    np.testing.assert_allclose(exterior_derivative(eta).at(v), 2 * jac.T @ omega @ jac, atol=1e-8)


def test_parallel_constant_form_on_flat_chart():
    g = zoo.flat_metric(4)
    f = constant_form(zoo.kahler_form_flat(4), metric=g)
    x = np.array([0.1, 0.2, -0.3, 0.4])
    assert np.all(nabla_field_jet(f, x, 0).value == 0.0)
    assert np.all(codifferential(f, x) == 0.0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_volume_form_parallel_on_sphere(n):
    g = zoo.sphere_metric(n)
    vol = volume_form(g)
    for x in g.sample(5):
        assert np.max(np.abs(nabla_field_jet(vol, x, 0).value)) < 1e-9


def test_contact_form_killing_equation():
    spec = zoo.build("sasakian_sphere")
    eta = spec.distinguished_forms["contact"]
    rng = np.random.default_rng(0)
    for x in spec.metric.sample(5):
        X = rng.normal(size=3)
        lhs = covariant_derivative_form(eta, X, x)
        rhs = 0.5 * interior_values(X, exterior_derivative(eta).at(x), 2)
        assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_codifferential_of_x_dx_dy():
    g = zoo.flat_metric(3)
    f = FormField(2, 3, lambda x: jets.outer(x[0], basis_form(3, (0, 1))), metric=g)
    np.testing.assert_allclose(codifferential(f, np.array([0.3, 0.1, 0.2])), [0.0, -1.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("n,k", [(3, 1), (3, 2), (4, 2), (4, 3), (5, 2)])
def test_codifferential_matches_star_d_star(n, k):
    g = zoo.sphere_metric(n)
    f = polynomial_form(n, k, n + k, metric=g)
    sign = (-1) ** (n * (k + 1) + 1)
    other = hodge_star_field(exterior_derivative(hodge_star_field(f)))
    for x in g.sample(4):
        a, b = codifferential(f, x), sign * other.at(x)
        assert np.max(np.abs(a - b)) < 1e-8 * max(1.0, np.max(np.abs(a)))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_antisymmetrized_covariant_derivative_is_d(k):
    g = zoo.fubini_study_metric()
    f = polynomial_form(4, k, k, metric=g)
    for x in g.sample(3):
        nab = nabla_field_jet(f, x, 0).value
        alt = sum((-1) ** j * np.moveaxis(nab, 0, j) for j in range(k + 1))
        assert np.max(np.abs(alt - exterior_derivative(f).at(x))) < 1e-8


@pytest.mark.parametrize("k", [1, 2])
def test_covariant_derivative_metric_compatible(k):
    g = zoo.fubini_study_metric()
    a, b = polynomial_form(4, k, 3, metric=g), polynomial_form(4, k, 4, metric=g)
    rng = np.random.default_rng(k)
    h = 1e-5
    for x in g.sample(3):
        X = rng.normal(size=4)
        inner = lambda y: form_inner(g.at(y), a.at(y), b.at(y))
        lhs = (inner(x + h * X) - inner(x - h * X)) / (2 * h)
        rhs = form_inner(g.at(x), covariant_derivative_form(a, X, x), b.at(x)) \
            + form_inner(g.at(x), a.at(x), covariant_derivative_form(b, X, x))
        assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(lhs))


def test_form_inner_of_basis_is_one():
    assert form_inner(np.eye(4), basis_form(4, (0, 2)), basis_form(4, (0, 2))) == 1.0
    assert math.isclose(form_inner(4 * np.eye(2), basis_form(2, (0, 1)), basis_form(2, (0, 1))), 1 / 16)


def test_missing_metric_is_reported():
    f = polynomial_form(3, 1, 0)
    with pytest.raises(ValueError, match="metric"):
        codifferential(f, np.zeros(3))


def test_degree_validation():
    with pytest.raises(ValueError):
        FormField(4, 3, lambda x: 0.0)
