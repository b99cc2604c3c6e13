"""Cauchy and weighted Bergman reproducing kernels and the isometries T_a."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _accel
from .functions import Fun, ParameterError, SpaceParams
from .geometry import as_points, herm, moebius, rho


class KernelDomainError(ValueError):
    pass


def gamma_const(n, p, alpha):
    """Gamma(n + alpha p) / (Gamma(alpha p) Gamma(n + 1))."""
    ap = alpha * p
    if not ap > 0:
        raise ParameterError(f"the Bergman constant needs alpha p > 0, got {ap}")
    return math.exp(gammaln(n + ap) - gammaln(ap) - gammaln(n + 1))


@dataclass(frozen=True)
class KernelParams:
    """Space index with the reproducing-kernel exponent and constant.

    For alpha = 0 the reproducing kernel is the Cauchy-Szego kernel, so the
    exponent is n and the constant is 1.
    """

    params: SpaceParams

    @classmethod
    def of(cls, n, p, alpha=0.0):
        return cls(SpaceParams(n, p, alpha))

    @property
    def n(self):
        return self.params.n

    @property
    def exponent(self):
        return self.params.kernel_exponent

    @property
    def gamma(self):
        if self.params.hardy:
            return 1.0
        return gamma_const(self.n, self.params.p, self.params.alpha)


def _check_re(one_minus, what):
    re = np.min(np.real(one_minus)) if np.size(one_minus) else 1.0
    if not re > 0:
        raise KernelDomainError(f"{what}: Re(1 - <z, w>) = {re:.3g} is not positive")


def cauchy_kernel(z, xi, n=None):
    """(1 - <z, xi>)^(-n) on the principal branch."""
    z = np.asarray(z, dtype=np.complex128)
    xi = np.asarray(xi, dtype=np.complex128)
    n = z.shape[-1] if n is None else n
    one_minus = 1.0 - herm(z, xi)
    _check_re(one_minus, "Cauchy kernel")
    return one_minus ** (-float(n))


def bergman_kernel(z, w, kp):
    """K_z(w) = gamma (1 - <w, z>)^(-(n + alpha p))."""
    if kp.params.ap <= 0:
        raise ParameterError("the weighted Bergman kernel needs alpha p > 0")
    one_minus = 1.0 - herm(w, z)
    _check_re(one_minus, "Bergman kernel")
    return kp.gamma * one_minus ** (-kp.exponent)


def reproducing_kernel(z, w, kp):
    """K_z(w) for the space of ``kp``; the Cauchy kernel when alpha = 0."""
    if kp.params.hardy:
        return cauchy_kernel(w, z, kp.n)
    return bergman_kernel(z, w, kp)


def kernel_sum(centers, coeffs, kp):
    """The holomorphic function z -> sum_k c_k K_{a_k}(z)."""
    centers = np.asarray(centers, dtype=np.complex128).reshape(-1, kp.n)
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    gamma = kp.gamma
    s = kp.exponent

    def fn(z):
        out, min_re = _accel.kernel_block(z, centers, coeffs, s)
        _check_re(np.array([min_re]), "kernel sum")
        return gamma * out

    return Fun(fn, kp.n, holomorphic=True, name="kernel_sum")


def k_a(a, kp):
    """z -> (rho(a) / (1 - <z, a>)^2)^(n/p + alpha)."""
    a = np.asarray(as_points(a), dtype=np.complex128)
    e = kp.params.seq_exponent
    ra = rho(a)

    def fn(z):
        one_minus = 1.0 - z @ a.conj()
        _check_re(one_minus, "k_a")
        # principal powers: (rho / (1-u)^2)^e = rho^e (1-u)^(-2e) as Re(1-u) > 0
        return ra ** e * one_minus ** (-2.0 * e)

    return Fun(fn, kp.n, holomorphic=True, name="k_a")


def t_a(f, a, kp):
    """T_a f = k_a * (f o phi_a), a norm-preserving involution of B^p_alpha."""
    a = np.asarray(as_points(a), dtype=np.complex128)
    ka = k_a(a, kp)

    def fn(z):
        return ka(z) * f(moebius(a, z))

    return Fun(fn, kp.n, holomorphic=f.holomorphic, name=f"T_a({f.name})")
