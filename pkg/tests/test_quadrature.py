import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballinterp.functions import Poly, multi_indices
from ballinterp.geometry import moebius, uniform_ball
from ballinterp.quadrature import (QuadratureError, ball_moment, ball_weight_mass,
                                   build_ball_rule, build_sphere_rule, forelli_check,
                                   forelli_constant, integrate, integrate_ball,
                                   integrate_sphere, pseudo_ball_rule, simplex_rule,
                                   sphere_moment)


def test_simplex_rule_is_a_probability_rule():
    t, w = simplex_rule(3, 4)
    assert_allclose(w.sum(), 1.0)
    assert_allclose(t.sum(axis=1), 1.0)
    # E[t_1] = 1/3 and E[t_1 t_2] = 1/12 under the uniform simplex law
    assert_allclose(w @ t[:, 0], 1 / 3)
    assert_allclose(w @ (t[:, 0] * t[:, 1]), 1 / 12)


def test_sphere_constant_and_second_moment():
    rule = build_sphere_rule(2, 8)
    assert_allclose(integrate(lambda x: np.ones(len(x)), rule), 1.0, rtol=1e-14)
    assert_allclose(integrate(lambda x: np.abs(x[:, 0]) ** 2, rule), 0.5, rtol=1e-13)
    assert_allclose(integrate(lambda x: np.abs(x[:, 0]) ** 4, rule), 1 / 3, rtol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_rule_moments(n):
    rule = build_sphere_rule(n, 12)
    for theta in multi_indices(n, 6):
        val = integrate(lambda x: np.abs(np.prod(x ** np.array(theta), axis=1)) ** 2, rule)
        assert_allclose(val, sphere_moment(theta), rtol=1e-12)


def test_sphere_rule_kills_unbalanced_monomials():
    rule = build_sphere_rule(2, 8)
    val = integrate(lambda x: x[:, 0] ** 2 * np.conj(x[:, 1]) ** 2, rule)
    assert abs(val) < 1e-15


def test_sphere_moment_frozen_values():
    assert_allclose(sphere_moment((1, 0)), 0.5)
    assert_allclose(sphere_moment((1, 1)), 1 / 6)
    assert_allclose(sphere_moment((2, 1, 0)), 2 / 60)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("ap", [1, 2, 3])
def test_ball_mass_and_moments(n, ap):
    c = ap - 1
    rule = build_ball_rule(n, c, radial_count=16, angular_degree=12)
    mass = math.gamma(n + 1) * math.gamma(ap) / math.gamma(n + ap)
    assert_allclose(integrate(lambda x: np.ones(len(x)), rule), mass, rtol=1e-12)
    assert_allclose(rule.mass, mass, rtol=1e-14)
    for m in range(5):
        val = integrate(lambda x: np.abs(x[:, 0]) ** (2 * m), rule)
        theta = (m,) + (0,) * (n - 1)
        assert_allclose(val, ball_moment(theta, c), rtol=1e-12)


def test_ball_mass_frozen():
    # n = 2, rho^1: 2! Gamma(2) / Gamma(4) = 1/3
    assert_allclose(ball_weight_mass(2, 1.0), 1 / 3)
    rule = build_ball_rule(2, 1.0, 8, 6)
    assert_allclose(integrate_ball(lambda x: np.ones(len(x)), rule), 1 / 3, rtol=1e-13)


def test_fractional_weight_against_monte_carlo(rng):
    # independent check of the Jacobi radial rule for non-integer c
    rule = build_ball_rule(2, 0.5, 24, 8)
    z = uniform_ball(rng, 400000, 2)
    f = lambda x: np.abs(x[:, 0] - 0.3) ** 2 * (1 - np.sum(np.abs(x) ** 2, 1)) ** 0.5
    mc = np.mean(f(z))
    quad = integrate(lambda x: np.abs(x[:, 0] - 0.3) ** 2, rule)
    assert abs(quad - mc) < 5e-3


def test_forelli_identity_on_polynomials(rng):
    n, l = 2, 2
    sphere = build_sphere_rule(n + l, 10)
    ball = build_ball_rule(n, l - 1, 12, 10)
    for _ in range(3):
        f = Poly.random(rng, n, 2)
        g = lambda x: np.abs(f(x)) ** 2
        lhs, rhs = forelli_check(g, n, l, sphere, ball)
        assert abs(lhs - rhs) <= 1e-6 * (1 + abs(lhs))


def test_forelli_constant():
    assert forelli_constant(2, 2) == 3
    assert forelli_constant(2, 1) == 1
    with pytest.raises(QuadratureError):
        forelli_check(lambda x: x[:, 0], 2, 0, build_sphere_rule(2, 2),
                      build_ball_rule(2, 0, 2, 2))


def test_pseudo_ball_volume():
    a = np.array([0.6, 0.2j])
    r = 0.5
    base = build_ball_rule(2, 0.0, 24, 24)
    rule = pseudo_ball_rule(a, r, base)
    t2 = float(np.sum(np.abs(a) ** 2))
    exact = r ** 4 * (1 - t2) ** 3 / (1 - r * r * t2) ** 3
    assert_allclose(rule.weights.sum(), exact, rtol=1e-10)
    assert np.all(np.linalg.norm(moebius(a, rule.nodes), axis=1) < r + 1e-12)


def test_rule_type_errors():
    s = build_sphere_rule(2, 2)
    b = build_ball_rule(2, 0.0, 2, 2)
    with pytest.raises(QuadratureError):
        integrate_ball(np.sum, s)
    with pytest.raises(QuadratureError):
        integrate_sphere(np.sum, b)
    with pytest.raises(QuadratureError):
        build_ball_rule(2, -1.0)


def test_non_finite_integrand_reports_node():
    rule = build_sphere_rule(1, 3)
    with pytest.raises(QuadratureError, match="node"), np.errstate(all="ignore"):
        integrate(lambda x: 1.0 / (1.0 - x[:, 0]), rule)
