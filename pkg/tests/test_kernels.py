import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballinterp.functions import ParameterError, Poly, SpaceParams, norm_pa
from ballinterp.geometry import moebius, uniform_ball
from ballinterp.kernels import (KernelDomainError, KernelParams, bergman_kernel,
                                cauchy_kernel, gamma_const, k_a, kernel_sum,
                                reproducing_kernel, t_a)
from ballinterp.quadrature import build_ball_rule, build_sphere_rule, integrate


def test_gamma_constant():
    assert_allclose(gamma_const(2, 2.0, 1.0), 3.0)
    assert_allclose(gamma_const(2, 1.0, 1.0), 1.0)
    assert_allclose(gamma_const(3, 2.0, 1.5), math.gamma(6) / (math.gamma(3) * math.gamma(4)))
    with pytest.raises(ParameterError):
        gamma_const(2, 2.0, 0.0)
    assert KernelParams.of(2, 2.0, 0.0).gamma == 1.0
    assert KernelParams.of(2, 2.0, 0.0).exponent == 2


def test_cauchy_kernel_values():
    assert_allclose(cauchy_kernel(np.zeros(2), np.array([1.0, 0.0])), 1.0)
    z = np.array([0.5, 0.0])
    xi = np.array([1.0, 0.0])
    assert_allclose(cauchy_kernel(z, xi), 4.0)
    with pytest.raises(KernelDomainError):
        cauchy_kernel(xi, xi)


def test_cauchy_kernel_reproduces(rng):
    rule = build_sphere_rule(2, 40)
    h = Poly.monomial(2, (2, 0))
    for z in uniform_ball(rng, 10, 2, 0.6):
        val = integrate(lambda x: cauchy_kernel(z, x) * h(x), rule)
        assert_allclose(val, h(z), atol=1e-10)


def test_bergman_kernel_basics(rng):
    kp = KernelParams.of(2, 2.0, 1.0)
    w = uniform_ball(rng, 5, 2)
    assert_allclose(bergman_kernel(np.zeros(2), w, kp), 3.0)
    z = uniform_ball(rng, 1, 2)[0]
    assert_allclose(bergman_kernel(z, w, kp), np.conj(bergman_kernel(w, z, kp)), rtol=1e-13)
    with pytest.raises(ParameterError):
        bergman_kernel(z, w, KernelParams.of(2, 2.0, 0.0))


@pytest.mark.parametrize("ap", [1, 2, 3])
def test_bergman_kernel_reproduces(rng, ap):
    kp = KernelParams.of(2, 2.0, ap / 2)
    rule = build_ball_rule(2, ap - 1, 32, 32)
    f = Poly.random(rng, 2, 4)
    for z in uniform_ball(rng, 20, 2, 0.7):
        val = integrate(lambda w: f(w) * np.conj(bergman_kernel(z, w, kp)), rule)
        assert abs(val - f(z)) <= 1e-4 * (1 + abs(f(z)))


def test_reproducing_w1w2():
    kp = KernelParams.of(2, 3.0, 1.0)
    rule = build_ball_rule(2, 2.0, 24, 24)
    f = Poly.monomial(2, (1, 1))
    z = np.array([0.3 - 0.2j, 0.4j])
    val = integrate(lambda w: f(w) * np.conj(reproducing_kernel(z, w, kp)), rule)
    assert_allclose(val, f(z), atol=1e-9)


def test_kernel_sum(rng):
    kp = KernelParams.of(2, 2.0, 1.0)
    A = uniform_ball(rng, 3, 2, 0.8)
    c = rng.standard_normal(3) + 1j
    g = kernel_sum(A, c, kp)
    z = uniform_ball(rng, 4, 2)
    direct = sum(ck * bergman_kernel(a, z, kp) for a, ck in zip(A, c))
    assert_allclose(g(z), direct, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.25])
def test_k_a_inverse_identity(rng, alpha):
    kp = KernelParams.of(2, 2.0, alpha)
    for a in uniform_ball(rng, 5, 2, 0.95):
        ka = k_a(a, kp)
        z = uniform_ball(rng, 20, 2)
        assert_allclose(ka(moebius(a, z)) * ka(z), 1.0, atol=1e-10)


def test_t_a_at_origin(rng):
    kp = KernelParams.of(2, 2.0, 1.0)
    f = Poly.random(rng, 2, 3)
    z = uniform_ball(rng, 5, 2)
    assert_allclose(t_a(f, np.zeros(2), kp)(z), f(-z), atol=1e-14)


def test_t_a_involution(rng):
    kp = KernelParams.of(2, 3.0, 2 / 3)
    a = np.array([0.6, -0.3j])
    f = Poly.random(rng, 2, 4)
    z = uniform_ball(rng, 30, 2, 0.9)
    assert_allclose(t_a(t_a(f, a, kp), a, kp)(z), f(z), atol=1e-8)


@pytest.mark.parametrize("p,alpha", [(2.0, 1.0), (3.0, 1.0), (2.0, 0.0), (4.0, 0.0)])
def test_t_a_isometry(rng, p, alpha):
    params = SpaceParams(2, p, alpha)
    kp = KernelParams(params)
    if alpha == 0:
        rule = build_sphere_rule(2, 64)
    else:
        rule = build_ball_rule(2, params.weight_exponent, 32, 32)
    for _ in range(3):
        f = Poly.random(rng, 2, 3)
        a = uniform_ball(rng, 1, 2, 0.5)[0]
        nf = norm_pa(f, params, rule)
        assert abs(norm_pa(t_a(f, a, kp), params, rule) - nf) <= 1e-4 * nf
