import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exsphere import cones, jets, zoo
from exsphere.charts import ChartDomain
from exsphere.forms import constant_form, volume_form
from exsphere.riemann import curvature, sectional_curvature
from exsphere.hypersurface import (DegenerateParametrizationError, Embedding, NotEinsteinError, NotUmbilicalError,
                                   codazzi_residual, decomposition_residual, einstein_lambda_check,
                                   first_fundamental_form, gauss_residual, gauss_weingarten_residual,
                                   pullback_forms, second_fundamental_form, shape_duality_residual,
                                   umbilicity_residual)


def spherical(radius=1.0):
    def f(u):
        st_, ct = jets.sin(u[0]), jets.cos(u[0])
        return jets.stack([st_ * jets.cos(u[1]), st_ * jets.sin(u[1]), ct]) * radius
    return Embedding(zoo.flat_metric(3), f, domain=ChartDomain.box([0.3, -3.0], [2.8, 3.0]), label="spherical")


def ellipsoid():
    def f(u):
        s = jets.sin(u[0])
        return jets.stack([s * jets.cos(u[1]), s * jets.sin(u[1]), jets.cos(u[0]) * 0.5])
    return Embedding(zoo.flat_metric(3), f, domain=ChartDomain.box([0.3, -3.0], [2.8, 3.0]), label="ellipsoid")


def cylinder():
    return Embedding(zoo.flat_metric(3), lambda u: jets.stack([jets.cos(u[0]), jets.sin(u[0]), u[1]]),
                     domain=ChartDomain.box(-1.0, 1.0, 2), label="cylinder")


def test_graph_of_hyperplane_has_identity_metric_and_zero_second_form():
    e = zoo.hyperplane(4)
    u = np.array([0.1, -0.3, 0.7])
    np.testing.assert_array_equal(first_fundamental_form(e, u), np.eye(3))
    assert np.all(second_fundamental_form(e, u).second_fundamental == 0.0)
    assert umbilicity_residual(e, u) == 0.0


def test_spherical_parametrization_on_the_equator():
    np.testing.assert_allclose(first_fundamental_form(spherical(), [math.pi / 2, 0.4]), np.eye(2), atol=1e-15)


@pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
def test_radius_scaling_of_first_form(r):
    u = [1.1, 0.2]
    np.testing.assert_allclose(first_fundamental_form(spherical(r), u),
                               r * r * first_fundamental_form(spherical(), u), rtol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_unit_sphere_second_form_equals_metric(n):
    e = zoo.sphere_in_flat(n + 1)
    for u in e.sample(5):
        d = second_fundamental_form(e, u)
        np.testing.assert_allclose(d.second_fundamental, d.induced_metric, atol=1e-10)
        assert d.lambda_estimate == pytest.approx(1.0, abs=1e-12)


def test_point_data_invariants():
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 3)
    d = second_fundamental_form(e, e.sample(1)[0])
    gbar = zoo.sphere_metric(4).at(d.position)
    assert d.normal @ gbar @ d.normal == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(d.jacobian.T @ gbar @ d.normal)) < 1e-10
    assert np.max(np.abs(d.second_fundamental - d.second_fundamental.T)) < 1e-12


@pytest.mark.parametrize("rho", [math.pi / 6, math.pi / 3, math.pi / 2, 2.0])
def test_geodesic_sphere_lambda_is_cot(rho):
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), rho)
    for u in e.sample(5):
        assert second_fundamental_form(e, u).lambda_estimate == pytest.approx(abs(1 / math.tan(rho)), abs=1e-7)
        assert umbilicity_residual(e, u) < 1e-10


def test_ellipsoid_is_not_umbilical():
    assert umbilicity_residual(ellipsoid(), [0.9, 0.4]) > 0.1


def test_cylinder_residual():
    e = cylinder()
    u = [0.3, 0.2]
    w = np.sort(np.abs(np.linalg.eigvals(second_fundamental_form(e, u).shape_operator)))
    np.testing.assert_allclose(w, [0.0, 1.0], atol=1e-14)
    assert umbilicity_residual(e, u) == pytest.approx(1 / math.sqrt(2), abs=1e-14)


def test_degenerate_parametrization_is_located():
    e = Embedding(zoo.flat_metric(3), lambda u: jets.stack([u[0], u[0], u[1] * 0.0]))
    with pytest.raises(DegenerateParametrizationError, match="u ="):
        first_fundamental_form(e, [0.1, 0.2])


@pytest.mark.parametrize("name", ["unit_sphere", "geodesic_pi3", "cp2_distance", "ellipsoid", "cone_slice"])
def test_shape_operator_duality(name):
    e = {"unit_sphere": lambda: zoo.sphere_in_flat(4),
         "geodesic_pi3": lambda: zoo.geodesic_sphere(zoo.sphere_metric(3), math.pi / 3),
         "cp2_distance": lambda: zoo.cp2_geodesic_sphere(math.atan(0.3)),
         "ellipsoid": ellipsoid,
         "cone_slice": lambda: cones.cone_slice(cones.cone(zoo.sphere_metric(2)))}[name]()
    for u in e.sample(4):
        assert shape_duality_residual(e, u) < 1e-10


@pytest.mark.parametrize("e", [zoo.sphere_in_flat(4), zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 3),
                               zoo.geodesic_sphere(zoo.sphere_metric(3), math.pi / 2)], ids=["flat", "pi3", "equator"])
def test_gauss_weingarten_reconstruction(e):
    for u in e.sample(4):
        r1, r2 = gauss_weingarten_residual(e, u)
        assert r1 < 1e-8 and r2 < 1e-8


def test_gauss_unit_sphere_in_flat_space():
    e = zoo.sphere_in_flat(4)
    for u in e.sample(3):
        assert gauss_residual(e, u).max < 1e-8


def test_gauss_equator_and_geodesic_sphere():
    amb = zoo.sphere_metric(4)
    eq = zoo.geodesic_sphere(amb, math.pi / 2)
    gs = zoo.geodesic_sphere(amb, math.pi / 3)
    for u in eq.sample(3):
        assert gauss_residual(eq, u).max < 1e-8
    for u in gs.sample(3):
        assert gauss_residual(gs, u).max < 1e-7
        c = curvature(gs.induced_metric(), u)
        assert sectional_curvature(c, [1, 0, 0], [0, 1, 0]) == pytest.approx(4 / 3, abs=1e-7)


def test_gauss_requires_umbilical_point():
    with pytest.raises(NotUmbilicalError):
        gauss_residual(ellipsoid(), [0.9, 0.4])
    with pytest.raises(NotUmbilicalError):
        codazzi_residual(cylinder(), [0.1, 0.1])


def test_codazzi_on_spheres():
    e = zoo.sphere_in_flat(4)
    for u in e.sample(3):
        res = codazzi_residual(e, u)
        assert res.codazzi.max < 1e-9 and res.traced.max < 1e-9
    g = zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 3)
    for u in g.sample(3):
        res = codazzi_residual(g, u)
        assert res.codazzi.max < 1e-7 and res.traced.max < 1e-7
        assert np.max(np.abs(res.dlambda)) < 1e-7


def test_einstein_lambda_unit_sphere():
    e = zoo.sphere_in_flat(4)
    rep = einstein_lambda_check(e, e.sample(5))
    assert rep.formula.max < 1e-8
    np.testing.assert_allclose(rep.lambda_values ** 2, 1.0, atol=1e-10)
    assert rep.inequality_holds and rep.constancy_note == "constant on samples"


def test_einstein_lambda_equality_case():
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 2)
    rep = einstein_lambda_check(e, e.sample(5))
    assert rep.formula.max < 1e-7 and rep.equality_gap < 1e-7
    assert np.max(np.abs(rep.lambda_values)) < 1e-7


def test_einstein_lambda_geodesic_sphere():
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 3)
    rep = einstein_lambda_check(e, e.sample(5))
    assert rep.formula.max < 1e-7
    np.testing.assert_allclose(rep.lambda_values ** 2, 1 / 3, atol=1e-7)
    np.testing.assert_allclose(rep.scal_values, 8.0, atol=1e-6)


def test_einstein_check_refuses_non_einstein_ambient():
    amb = cones.product_metric(zoo.sphere_metric(2), zoo.flat_metric(1))
    e = Embedding(amb, lambda u: jets.concatenate([u, jets.as_jet(np.zeros(1), 2, u.order, u.value)]),
                  domain=ChartDomain.box(-0.5, 0.5, 2))
    with pytest.raises(NotEinsteinError):
        einstein_lambda_check(e, e.sample(2))


def test_orientation_flip():
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), math.pi / 3)
    f = e.flipped()
    for u in e.sample(3):
        a, b = second_fundamental_form(e, u), second_fundamental_form(f, u)
        np.testing.assert_allclose(b.normal, -a.normal, atol=1e-14)
        assert b.lambda_estimate == pytest.approx(-a.lambda_estimate, abs=1e-14)
        assert umbilicity_residual(f, u) == pytest.approx(umbilicity_residual(e, u), abs=1e-14)
        assert gauss_residual(f, u).max == pytest.approx(gauss_residual(e, u).max, abs=1e-12)


@pytest.mark.parametrize("rho", [math.pi / 6, math.pi / 3])
def test_ambient_scaling_divides_lambda(rho):
    e = zoo.geodesic_sphere(zoo.sphere_metric(4), rho)
    big = e.with_ambient(zoo.sphere_metric(4, r=2.0))
    for u in e.sample(3):
        assert second_fundamental_form(big, u).lambda_estimate == pytest.approx(
            second_fundamental_form(e, u).lambda_estimate / 2, abs=1e-12)


def test_pullback_of_volume_is_intrinsic_volume():
    for n in (2, 3, 4):
        e = zoo.sphere_in_flat(n + 1)
        vol = volume_form(zoo.flat_metric(n + 1))
        ivol = volume_form(e.induced_metric())
        for u in e.sample(3):
            gamma, beta = pullback_forms(e, vol, u)
            assert np.all(beta == 0.0)
            ratio = gamma.ravel() @ ivol.at(u).ravel() / (ivol.at(u).ravel() @ ivol.at(u).ravel())
            assert abs(ratio) == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(gamma, ratio * ivol.at(u), atol=1e-12)


def test_contraction_with_kernel_vector_vanishes():
    # σ = dx1∧dx2 on ℝ³ with N = e3 on the hyperplane x3 = 0
    e = zoo.hyperplane(3)
    sigma = constant_form(zoo.basis_form(3, (0, 1)))
    gamma, beta = pullback_forms(e, sigma, [0.2, 0.1])
    assert np.all(gamma == 0.0)
    np.testing.assert_array_equal(beta, zoo.basis_form(2, (0, 1)))


def test_kahler_pullback_is_contact_form():
    e = zoo.sphere_in_flat(4)
    omega = constant_form(zoo.kahler_form_flat(4))
    eta = zoo.contact_form_s3()
    for u in e.sample(4):
        d = second_fundamental_form(e, u)
        gamma, _ = pullback_forms(e, omega, u)
        jn = np.array([-d.normal[1], d.normal[0], -d.normal[3], d.normal[2]])
        xi = np.linalg.lstsq(d.jacobian, jn, rcond=None)[0]
        assert np.linalg.norm(d.jacobian @ xi - jn) < 1e-12
        assert gamma @ xi == pytest.approx(1.0, abs=1e-12)
        # λ ≥ 0 picks the inward normal N = -x, so γ = -i*(x ⌟ ω) = -η
        np.testing.assert_allclose(gamma, -eta.at(u), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 10**6))
def test_decomposition_along_sphere(k, seed):
    rng = np.random.default_rng(seed)
    s = sum(rng.normal() * zoo.basis_form(4, idx) for idx in itertools.combinations(range(4), k))
    e = zoo.sphere_in_flat(4)
    u = e.sample(1, seed)[0]
    assert decomposition_residual(e, constant_form(s), u) < 1e-10


def test_pullback_degree_range():
    e = zoo.sphere_in_flat(3)
    with pytest.raises(ValueError, match="out of range"):
        pullback_forms(e, constant_form(np.ones(4)), [0.0, 0.0])
