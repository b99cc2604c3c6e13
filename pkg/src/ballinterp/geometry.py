"""Exact geometry of the unit ball of C^n.

Points are complex numpy arrays whose last axis holds the n coordinates, so
every function here accepts a single point of shape (n,) or a batch (..., n).
"""
from dataclasses import dataclass, field

import numpy as np

from . import _accel

BOUNDARY_TOL = 1e-12


class DimensionError(ValueError):
    pass


class BallDomainError(ValueError):
    pass


def as_points(z, closed=False):
    """Coerce to complex128 and check membership in the (closed) ball."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 0:
        raise DimensionError("a point needs at least one coordinate")
    sq = np.sum(np.abs(z) ** 2, axis=-1)
    bound = 1.0 + BOUNDARY_TOL if closed else 1.0
    bad = sq >= bound if not closed else sq > bound
    if np.any(bad):
        raise BallDomainError(
            f"point outside the {'closed' if closed else 'open'} unit ball "
            f"(|z|^2 = {float(np.max(sq)):.16g})")
    return z


def _check_dims(z, w):
    if z.shape[-1] != w.shape[-1]:
        raise DimensionError(f"dimension mismatch: {z.shape[-1]} vs {w.shape[-1]}")


def rho(z):
    """Defining function 1 - |z|^2."""
    z = np.asarray(z, dtype=np.complex128)
    return 1.0 - np.sum(z.real ** 2 + z.imag ** 2, axis=-1)


def herm(z, w):
    """Hermitian product <z, w> = sum z_j conj(w_j)."""
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    _check_dims(z, w)
    return np.sum(z * np.conj(w), axis=-1)


def dot(z, w):
    """Bilinear product z.w = sum z_j w_j."""
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    _check_dims(z, w)
    return np.sum(z * w, axis=-1)


def moebius(a, z):
    """The involutive automorphism phi_a exchanging 0 and a.

    phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), s_a = sqrt(1 - |a|^2).
    Written as (a (1 - <z,a>/(1+s_a)) - s_a z) / (1 - <z,a>), which is the
    same map and stays finite at a = 0 where it reduces to -z.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionError("the centre a must be a single point")
    if rho(a) <= 0:
        raise BallDomainError("phi_a is undefined for |a| >= 1")
    z = as_points(z, closed=True)
    _check_dims(a, z)
    flat = z.reshape(-1, a.shape[0])
    out = _accel.moebius_rows(a, flat)
    return out.reshape(z.shape)


def pseudo_distance(a, b):
    """|phi_a(b)|, computed from 1 - |phi_a(b)|^2 = rho(a) rho(b) / |1 - <b,a>|^2."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    one_minus = rho(a) * rho(b) / np.abs(1.0 - herm(b, a)) ** 2
    return np.sqrt(np.clip(1.0 - one_minus, 0.0, None))


def moebius_derivative(a, z):
    """Holomorphic Jacobian matrix D phi_a(z)[i, k] = d phi_i / d z_k.

    Shape (..., n, n) for z of shape (..., n).
    """
    a = np.asarray(a, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    n = a.shape[0]
    s = np.sqrt(rho(a))
    u = herm(z, a)
    d = 1.0 - u
    num = a * (1.0 - u / (1.0 + s))[..., None] - s * z
    dnum = -np.outer(a, a.conj()) / (1.0 + s) - s * np.eye(n)
    return (dnum / d[..., None, None]
            + num[..., :, None] * a.conj()[None, :] / (d ** 2)[..., None, None])


def moebius_jacobian(a, z):
    """Complex Jacobian determinant of phi_a at z.

    Closed form (-1)^n (1 - |a|^2)^((n+1)/2) / (1 - <z, a>)^(n+1).
    """
    a = np.asarray(a, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    n = a.shape[0]
    if rho(a) <= 0:
        raise BallDomainError("phi_a is undefined for |a| >= 1")
    return (-1) ** n * rho(a) ** ((n + 1) / 2) / (1.0 - herm(z, a)) ** (n + 1)


def pseudo_ball_extent(a, r):
    """Largest |z| over the closed pseudo-hyperbolic ball {|phi_a| <= r}."""
    t = float(np.linalg.norm(a))
    return (t + r) / (1.0 + r * t)


def uniform_ball(rng, size, n, radius=1.0):
    """Uniform samples in the Euclidean ball of C^n of the given radius."""
    g = rng.standard_normal((size, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(size) ** (1.0 / (2 * n))
    g *= r[:, None]
    return g[:, :n] + 1j * g[:, n:]


def uniform_sphere(rng, size, n):
    g = rng.standard_normal((size, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, :n] + 1j * g[:, n:]


def sample_pseudo_ball(rng, a, r, size):
    """Samples of {|phi_a| < r}, the image of a Euclidean ball under phi_a."""
    a = np.asarray(a, dtype=np.complex128)
    return moebius(a, uniform_ball(rng, size, a.shape[0], radius=r))


@dataclass(frozen=True)
class Automorphism:
    """phi_a with its scalars cached; callable on points."""

    center: np.ndarray
    norm_sq: float = field(init=False)
    s: float = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.center, dtype=np.complex128)
        if a.ndim != 1:
            raise DimensionError("the centre a must be a single point")
        nsq = float(np.sum(np.abs(a) ** 2))
        if nsq >= 1.0:
            raise BallDomainError("phi_a is undefined for |a| >= 1")
        object.__setattr__(self, "center", a)
        object.__setattr__(self, "norm_sq", nsq)
        object.__setattr__(self, "s", float(np.sqrt(1.0 - nsq)))

    @property
    def n(self):
        return self.center.shape[0]

    def __call__(self, z):
        return moebius(self.center, z)

    def derivative(self, z):
        return moebius_derivative(self.center, z)

    def jacobian(self, z):
        return moebius_jacobian(self.center, z)
