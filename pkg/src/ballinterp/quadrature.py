"""Normalized integration over the ball (with radial weight rho^c) and the sphere.

The sphere rule uses the parametrization zeta_j = sqrt(t_j) exp(i theta_j) in
which (t_1, ..., t_n) is uniform on the simplex and the angles are uniform and
independent of it.  Angles get an equispaced rule of M points (exact for
trigonometric degree M - 1), the simplex gets a collapsed Gauss-Jacobi product.
The ball rule composes that with Gauss-Jacobi in s = |z|^2 against
n s^(n-1) (1 - s)^c, so the weight rho^c sits inside the weights.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .geometry import moebius, rho


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class SphereRule:
    """Nodes on the unit sphere of C^n with positive weights summing to one.

    ``t_nodes``/``t_weights`` and ``n_angles`` keep the tensor structure: node
    index = simplex index * n_angles**n + flattened angle multi-index.
    """

    n: int
    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    t_nodes: np.ndarray = field(repr=False)
    t_weights: np.ndarray = field(repr=False)
    n_angles: int = 0

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class BallRule:
    """Nodes in the unit ball of C^n; weights integrate against rho^c dnu_n."""

    n: int
    c: float
    nodes: np.ndarray
    weights: np.ndarray
    radial_count: int
    angular_degree: int
    # nodes are sqrt(s_r t_q) * (angle grid) blocks, as built by build_ball_rule
    tensor: bool = True

    def __len__(self):
        return len(self.weights)

    @property
    def mass(self):
        return ball_weight_mass(self.n, self.c)


def _unit_jacobi(q, m):
    """Gauss-Jacobi on [0, 1] for weight (1 - u)^m, normalized to total mass 1."""
    x, w = roots_jacobi(q, m, 0.0)
    return (1.0 + x) / 2.0, w / w.sum()


def simplex_rule(n, q):
    """Rule for the uniform probability measure on {t >= 0, sum t = 1} in R^n."""
    if n == 1:
        return np.ones((1, 1)), np.ones(1)
    factors = [_unit_jacobi(q, n - 1 - i) for i in range(1, n)]
    pts = []
    wts = []
    for combo in itertools.product(*[range(q)] * (n - 1)):
        u = [factors[i][0][combo[i]] for i in range(n - 1)]
        w = math.prod(factors[i][1][combo[i]] for i in range(n - 1))
        t = np.empty(n)
        rest = 1.0
        for i in range(n - 1):
            t[i] = rest * u[i]
            rest *= 1.0 - u[i]
        t[n - 1] = rest
        pts.append(t)
        wts.append(w)
    return np.array(pts), np.array(wts)


def build_sphere_rule(n, degree=32, simplex_count=None):
    """Product rule on the sphere of C^n exact for polynomials in zeta, conj(zeta)
    of total degree <= ``degree``."""
    if n < 1:
        raise QuadratureError(f"unsupported dimension n = {n}")
    if degree < 0:
        raise QuadratureError("degree must be nonnegative")
    M = degree + 1
    q = simplex_count if simplex_count is not None else degree // 4 + 1
    t, tw = simplex_rule(n, q)
    ang = 2.0 * np.pi * np.arange(M) / M
    phases = np.exp(1j * ang)
    # all angle multi-indices, last coordinate fastest
    grid = np.stack(np.meshgrid(*[phases] * n, indexing="ij"), axis=-1).reshape(-1, n)
    nodes = (np.sqrt(t)[:, None, :] * grid[None, :, :]).reshape(-1, n)
    weights = np.repeat(tw, M ** n) / M ** n
    return SphereRule(n=n, degree=degree, nodes=nodes, weights=weights,
                      t_nodes=t, t_weights=tw, n_angles=M)


def ball_weight_mass(n, c):
    """Integral of rho^c against normalized volume: Gamma(n+1)Gamma(c+1)/Gamma(n+c+1)."""
    return math.exp(gammaln(n + 1) + gammaln(c + 1) - gammaln(n + c + 1))


def radial_rule(n, c, count):
    """Nodes s = |z|^2 in (0, 1) and weights for n s^(n-1) (1-s)^c ds."""
    if c <= -1:
        raise QuadratureError(f"rho^c is not integrable for c = {c} <= -1")
    x, w = roots_jacobi(count, c, n - 1.0)
    s = (1.0 + x) / 2.0
    return s, n * w * 2.0 ** (-(c + n))


def build_ball_rule(n, c, radial_count=64, angular_degree=32, sphere=None):
    """Tensor rule for integral over the ball of f rho^c dnu_n."""
    if c <= -1:
        raise QuadratureError(f"rho^c is not integrable for c = {c} <= -1")
    if sphere is None:
        sphere = build_sphere_rule(n, angular_degree)
    s, ws = radial_rule(n, c, radial_count)
    nodes = (np.sqrt(s)[:, None, None] * sphere.nodes[None, :, :]).reshape(-1, n)
    weights = (ws[:, None] * sphere.weights[None, :]).reshape(-1)
    return BallRule(n=n, c=float(c), nodes=nodes, weights=weights,
                    radial_count=radial_count, angular_degree=sphere.degree)


def _evaluate(f, nodes):
    vals = np.asarray(f(nodes))
    if vals.shape[:1] != nodes.shape[:1]:
        vals = np.broadcast_to(vals, nodes.shape[:1] + vals.shape[1:])
    bad = ~np.isfinite(vals)
    if bad.ndim > 1:
        bad = bad.reshape(bad.shape[0], -1).any(axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(f"non-finite integrand at node {i}: {nodes[i]}")
    return vals


def weighted_sum(weights, vals):
    """sum_i w_i v_i with numpy's pairwise reduction (deterministic)."""
    vals = np.asarray(vals)
    w = weights.reshape((-1,) + (1,) * (vals.ndim - 1))
    out = np.sum(w * vals, axis=0)
    return out[()] if np.ndim(out) == 0 else out


def integrate(f, rule):
    """Integrate a vectorized callable against either kind of rule."""
    return weighted_sum(rule.weights, _evaluate(f, rule.nodes))


def integrate_ball(f, rule):
    if not isinstance(rule, BallRule):
        raise QuadratureError("integrate_ball needs a BallRule")
    return integrate(f, rule)


def integrate_sphere(f, rule):
    if not isinstance(rule, SphereRule):
        raise QuadratureError("integrate_sphere needs a SphereRule")
    return integrate(f, rule)


def forelli_constant(n, l):
    """(n+l-1)! / (n! (l-1)!)."""
    return math.comb(n + l - 1, n)


def forelli_check(g, n, l, sphere_rule, ball_rule):
    """Both sides of the Forelli identity
    int_{S^(n+l)} g o P_n dsigma = C int_{B^n} rho^(l-1) g dnu_n."""
    if int(l) != l or l < 1:
        raise QuadratureError("l must be an integer >= 1")
    if sphere_rule.n != n + l:
        raise QuadratureError(f"sphere rule must live in C^{n + l}")
    if ball_rule.n != n or not np.isclose(ball_rule.c, l - 1):
        raise QuadratureError(f"ball rule must be on B^{n} with weight exponent {l - 1}")
    lhs = integrate(lambda x: g(x[:, :n]), sphere_rule)
    rhs = forelli_constant(n, l) * integrate(g, ball_rule)
    return lhs, rhs


# closed-form monomial moments ----------------------------------------------

def _log_multi_factorial(theta):
    return float(sum(gammaln(np.asarray(theta, dtype=float) + 1)))


def sphere_moment(theta, n=None):
    """int |zeta^theta|^2 dsigma_n = (n-1)! theta! / (n-1+|theta|)!."""
    theta = tuple(int(t) for t in theta)
    n = len(theta) if n is None else n
    k = sum(theta)
    return math.exp(gammaln(n) + _log_multi_factorial(theta) - gammaln(n + k))


def ball_moment(theta, c, n=None):
    """int |w^theta|^2 rho^c dnu_n = n! theta! Gamma(c+1) / Gamma(n+|theta|+c+1)."""
    theta = tuple(int(t) for t in theta)
    n = len(theta) if n is None else n
    k = sum(theta)
    return math.exp(gammaln(n + 1) + _log_multi_factorial(theta)
                    + gammaln(c + 1) - gammaln(n + k + c + 1))


def pseudo_ball_rule(a, r, base):
    """Rule for Lebesgue measure nu_n restricted to {|phi_a| < r}.

    Pulls an unweighted unit-ball rule back through w -> phi_a(r w); the real
    Jacobian of phi_a is (rho(a) / |1 - <w, a>|^2)^(n+1).
    """
    if base.c != 0:
        raise QuadratureError("pseudo_ball_rule needs an unweighted (c = 0) base rule")
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    w = r * base.nodes
    jac = (rho(a) / np.abs(1.0 - w @ a.conj()) ** 2) ** (n + 1)
    return BallRule(n=n, c=0.0, nodes=moebius(a, w),
                    weights=base.weights * r ** (2 * n) * jac,
                    radial_count=base.radial_count, angular_degree=base.angular_degree,
                    tensor=False)
