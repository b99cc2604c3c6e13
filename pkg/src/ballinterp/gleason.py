"""Explicit solutions of the Gleason problem f = G_a . phi_a.

At the origin the weighted solution is the integral operator

    g_k(z) = gamma int rho(w)^(ap-1) [(1 - <z,w>)^-(n+ap) - 1] / <z,w> conj(w_k) f(w) dnu(w)

and for alpha = 0 the same with dsigma on the sphere, exponent n and gamma = 1.
Off the origin the solution is conjugated by T_a.  Three routes are offered:

* ``"quadrature"``: the operator applied with a quadrature rule (any Fun);
* ``"exact"``: the operator applied to a Poly term by term with closed-form
  monomial moments;
* ``"series"``: Taylor-project the input, then ``"exact"``.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _accel
from .functions import (Fun, ParameterError, Poly, boundary_values, multi_indices,
                        norm_pa, taylor_project, vector_norm)
from .geometry import as_points, moebius, uniform_ball
from .kernels import KernelParams, k_a, t_a
from .quadrature import (BallRule, SphereRule, ball_moment, build_ball_rule,
                         build_sphere_rule, sphere_moment)

ZERO_TOL = 1e-10
RESIDUAL_SAMPLES = 50
RESIDUAL_RADIUS = 0.7


class GleasonError(ValueError):
    pass


@dataclass
class GleasonSolution:
    """G with f(z) = G(z) . phi_a(z); ``residual`` is the max defect over
    ``test_points`` and ``norm_ratio`` is || |G| ||_{p,alpha} / ||f||_{p,alpha}."""

    a: np.ndarray
    G: list
    residual: float
    norm_ratio: float
    route: str
    test_points: np.ndarray = field(repr=False)
    info: dict = field(default_factory=dict, repr=False)

    def __call__(self, z):
        return np.stack([g(z) for g in self.G], axis=-1)


# rules --------------------------------------------------------------------

_RULES = {}


# (radial count, angular degree) per use: norms of closed forms, sources of
# the quadrature operator, norms of quadrature-route outputs
_SIZES = {"norm": (32, 32), "source": (24, 24), "coarse": (4, 6)}


def default_rule(params, kind="norm", radial_count=None, angular_degree=None):
    """Ball rule with c = alpha p - 1 (sphere rule when alpha = 0), cached."""
    n = params.n
    r0, d0 = _SIZES[kind]
    if n == 1:
        d0 *= 4
    elif n >= 3:
        r0, d0 = max(r0 // 2, 8), min(d0, 16)
    radial_count = r0 if radial_count is None else radial_count
    angular_degree = d0 if angular_degree is None else angular_degree
    key = (n, params.weight_exponent if not params.hardy else None,
           radial_count, angular_degree)
    if key not in _RULES:
        if params.hardy:
            _RULES[key] = build_sphere_rule(n, angular_degree)
        else:
            _RULES[key] = build_ball_rule(n, params.weight_exponent, radial_count,
                                          angular_degree)
    return _RULES[key]


def _check_params(kp):
    kp.params.check_gleason()


def _scale(f, n):
    probe = 0.5 * np.eye(n, dtype=np.complex128)
    return 1.0 + float(np.max(np.abs(f(np.vstack([probe, -probe])))))


def _check_vanishes(f, a):
    a = np.asarray(a, dtype=np.complex128)
    val = complex(f(a))
    if abs(val) > ZERO_TOL * _scale(f, a.shape[0]):
        raise GleasonError(f"f must vanish at the base point, |f(a)| = {abs(val):.3g}")


def _default_points(n, seed=0, radius=RESIDUAL_RADIUS):
    return uniform_ball(np.random.default_rng(seed), RESIDUAL_SAMPLES, n, radius=radius)


# exact operator on polynomials ----------------------------------------------

def _operator_on_poly(f, kp):
    """Apply the origin operator to a Poly via monomial moments.

    Expanding [(1-u)^-s - 1]/u = sum_m (s)_(m+1)/(m+1)! u^m and
    u^m = sum_{|d|=m} m!/d! z^d conj(w)^d, the coefficient of z^d in g_k is
    gamma (s)_(m+1)/(m+1)! m!/d! c_(d+e_k) int |w^(d+e_k)|^2 dmu.
    """
    n = f.n
    s = kp.exponent
    G = [Poly(n) for _ in range(n)]
    if not f.coeffs:
        return G
    thetas = f._exps
    coefs = f._coefs
    m1 = thetas.sum(axis=1)                 # |theta| = m + 1
    if kp.params.hardy:
        log_mom = gammaln(n) + np.sum(gammaln(thetas + 1.0), axis=1) - gammaln(n + m1)
    else:
        c = kp.params.weight_exponent
        log_mom = (gammaln(n + 1) + np.sum(gammaln(thetas + 1.0), axis=1)
                   + gammaln(c + 1) - gammaln(n + m1 + c + 1))
    # log[(s)_(m+1) / (m+1)!] + log[m!]
    log_head = math.log(kp.gamma) + gammaln(s + m1) - gammaln(s) - gammaln(m1 + 1) + gammaln(m1)
    for k in range(n):
        keep = thetas[:, k] > 0
        d = thetas[keep].copy()
        d[:, k] -= 1
        log_fac = log_head[keep] - np.sum(gammaln(d + 1.0), axis=1) + log_mom[keep]
        vals = coefs[keep] * np.exp(log_fac)
        G[k] = Poly(n, dict(zip(map(tuple, d), vals)))
    return G


# quadrature operator ---------------------------------------------------------

def _check_rule(kp, rule):
    if kp.params.hardy:
        if not isinstance(rule, SphereRule):
            raise ParameterError("the alpha = 0 operator needs a SphereRule")
    else:
        if not isinstance(rule, BallRule) or not np.isclose(rule.c, kp.params.weight_exponent):
            raise ParameterError("the weighted operator needs a BallRule with c = alpha p - 1")


def _operator_by_quadrature(f, kp, rule):
    _check_rule(kp, rule)
    n = kp.n
    W = rule.nodes
    fw = boundary_values(f, W) if kp.params.hardy else f(W)
    vals = (rule.weights * fw)[:, None] * W.conj()
    gamma = kp.gamma
    s = kp.exponent

    def component(k):
        def fn(z):
            out, _ = _accel.gleason_block(z, W, vals[:, k:k + 1], s)
            return gamma * out[:, 0]
        return Fun(fn, n, holomorphic=True, name=f"g_{k + 1}")

    return [component(k) for k in range(n)]


def _as_poly(f, n, tol=1e-13, max_degree=96):
    if isinstance(f, Poly):
        return f, {"degree": f.degree, "tail": 0.0, "converged": True}
    return taylor_project(f, n, tol=tol, max_degree=max_degree)


def _residual(f, G, phi, pts):
    lhs = f(pts)
    rhs = sum(g(pts) * phi[:, k] for k, g in enumerate(G))
    return float(np.max(np.abs(lhs - rhs))) if len(pts) else 0.0


def origin_operator(f, kp, route=None, rule=None):
    """(g_1, ..., g_n) for f with f(0) = 0, plus route info."""
    n = kp.n
    if route is None:
        route = "exact" if isinstance(f, Poly) else "quadrature"
    if route == "exact":
        if not isinstance(f, Poly):
            raise ParameterError("the exact route needs a Poly")
        return _operator_on_poly(f, kp), {}
    if route == "series":
        P, info = _as_poly(f, n)
        return _operator_on_poly(P, kp), {"taylor": info, "poly": P}
    if route == "quadrature":
        rule = default_rule(kp.params, "source") if rule is None else rule
        return _operator_by_quadrature(f, kp, rule), {"nodes": len(rule)}
    raise ParameterError(f"unknown route {route!r}")


def _norm_ratio(f, G, kp, norm_rule, route):
    if norm_rule is None:
        # quadrature-route outputs cost one rule sweep per evaluation point
        norm_rule = default_rule(kp.params, "coarse" if route == "quadrature" else "norm")
    nf = norm_pa(f, kp.params, norm_rule)
    if nf == 0:
        return 0.0
    return vector_norm(G, kp.params, norm_rule) / nf


def gleason_origin(f, kp, rule=None, route=None, test_points=None, norm_rule=None):
    """Solve f = G . z for f(0) = 0 in B^p_alpha (alpha >= 1/p) or H^p (alpha = 0)."""
    _check_params(kp)
    n = kp.n
    zero = np.zeros(n, dtype=np.complex128)
    _check_vanishes(f, zero)
    route = route or ("exact" if isinstance(f, Poly) else "quadrature")
    G, info = origin_operator(f, kp, route, rule)
    pts = _default_points(n) if test_points is None else as_points(test_points)
    res = _residual(f, G, pts, pts)
    ratio = _norm_ratio(f, G, kp, norm_rule, route)
    return GleasonSolution(zero, G, res, ratio, route, pts, info)


# alpha = 0 via the boundary operators W_(theta,k) -----------------------------

def hardy_coefficient(theta, n):
    """l_theta in [1 - (1-u)^n] / u = sum_theta l_theta z^theta conj(xi)^theta.

    From [1 - (1-u)^n]/u = sum_m (-1)^m C(n, m+1) u^m and the multinomial
    expansion of u^m = <z, xi>^m.
    """
    m = sum(theta)
    if m > n - 1:
        return 0.0
    multinom = math.factorial(m) / math.prod(math.factorial(t) for t in theta)
    return (-1) ** m * math.comb(n, m + 1) * multinom


def _szego_of_conj_monomial(f, gamma_idx):
    """Szego projection of conj(xi^gamma) f for a Poly f, in closed form."""
    n = f.n
    out = {}
    for beta, c in f.items():
        delta = tuple(b - g for b, g in zip(beta, gamma_idx))
        if min(delta) < 0:
            continue
        out[delta] = c * sphere_moment(beta) / sphere_moment(delta)
    return Poly(n, out)


def hardy_W(f, theta, k, rule=None):
    """W_(theta,k)(f)(z) = int C(z, xi) conj(xi^(theta + e_k)) f(xi) dsigma(xi).

    Exact for a Poly when ``rule`` is None; otherwise by the sphere rule.
    """
    n = f.n
    theta = tuple(int(t) for t in theta)
    if len(theta) != n or sum(theta) > n - 1:
        raise ParameterError(f"need a multi-index with |theta| <= n-1, got {theta}")
    gidx = tuple(t + (i == k) for i, t in enumerate(theta))
    if rule is None:
        if not isinstance(f, Poly):
            raise ParameterError("hardy_W without a rule needs a Poly")
        return _szego_of_conj_monomial(f, gidx)
    if not isinstance(rule, SphereRule):
        raise ParameterError("hardy_W needs a SphereRule")
    X = rule.nodes
    mono = np.prod(X.conj() ** np.array(gidx), axis=1)
    vals = rule.weights * mono * boundary_values(f, X)

    def fn(z):
        out, _ = _accel.kernel_block(z, X, vals, float(n))
        return out

    return Fun(fn, n, holomorphic=True, name=f"W_{theta},{k + 1}")


def gleason_origin_hardy(f, n, rule=None, test_points=None, norm_rule=None, p=2.0):
    """H^p solution g_k = sum_theta l_theta z^theta W_(theta,k)(f)."""
    if f.n != n:
        raise ParameterError("dimension mismatch")
    kp = KernelParams.of(n, p, 0.0)
    _check_params(kp)
    zero = np.zeros(n, dtype=np.complex128)
    _check_vanishes(f, zero)
    thetas = multi_indices(n, n - 1)
    G = []
    for k in range(n):
        terms = [(hardy_coefficient(t, n), Poly.monomial(n, t), hardy_W(f, t, k, rule))
                 for t in thetas]
        if all(isinstance(w, Poly) for _, _, w in terms):
            g = Poly(n)
            for lt, zt, w in terms:
                g = g + lt * (zt * w)
        else:
            def fn(z, terms=terms):
                return sum(lt * zt(z) * w(z) for lt, zt, w in terms)
            g = Fun(fn, n, holomorphic=True, name=f"g_{k + 1}")
        G.append(g)
    pts = _default_points(n) if test_points is None else as_points(test_points)
    res = _residual(f, G, pts, pts)
    route = "exact" if rule is None else "quadrature"
    ratio = _norm_ratio(f, G, kp, norm_rule, route)
    return GleasonSolution(zero, G, res, ratio, route, pts)


# off the origin ------------------------------------------------------------

def _transport(G0, a, kp):
    return [t_a(g, a, kp) for g in G0]


def gleason_at(f, a, kp, rule=None, route="series", test_points=None, norm_rule=None,
               max_degree=128):
    """G_a = T_a(G_0) where G_0 solves the problem at 0 for T_a f.

    The norm ratio is taken on (T_a f, G_0): T_a preserves both norms, and
    the transported functions are sharply peaked near a/|a| when |a| -> 1.
    """
    _check_params(kp)
    n = kp.n
    a = np.asarray(as_points(a), dtype=np.complex128)
    _check_vanishes(f, a)
    F = t_a(f, a, kp)
    info = {}
    if route == "series":
        F, tinfo = taylor_project(F, n, max_degree=max_degree)
        info["taylor"] = tinfo
        # T_a f(0) = k_a(0) f(a) vanishes up to the tolerance already checked
        F = F - F.at_zero()
        G0 = _operator_on_poly(F, kp)
    elif route == "quadrature":
        rule = default_rule(kp.params, "source") if rule is None else rule
        G0 = _operator_by_quadrature(F, kp, rule)
    else:
        raise ParameterError(f"unknown route {route!r}")
    Ga = _transport(G0, a, kp)
    pts = _default_points(n) if test_points is None else as_points(test_points)
    res = _residual(f, Ga, moebius(a, pts), pts)
    ratio = _norm_ratio(F, G0, kp, norm_rule, route)
    info["G0"] = G0
    info["F"] = F
    return GleasonSolution(a, Ga, res, ratio, route, pts, info)


def gleason_vector(fs, a, kp, rule=None, route="series", test_points=None, norm_rule=None):
    """Solve for each f_j and return (solutions, ratio) with

    ratio = || sum |G_j|^2 ||_{p/2, 2 alpha} / || sum |f_j|^2 ||_{p/2, 2 alpha},

    both taken at the origin after T_a (which preserves the two quantities).
    """
    if not kp.params.p >= 2:
        raise ParameterError("the vector estimate needs p >= 2")
    sols = [gleason_at(f, a, kp, rule, route, test_points, norm_rule) for f in fs]
    if norm_rule is None:
        norm_rule = default_rule(kp.params, "coarse" if route == "quadrature" else "norm")
    Fs = [s.info["F"] for s in sols]
    G0s = [g for s in sols for g in s.info["G0"]]
    nf = vector_norm(Fs, kp.params, norm_rule) if Fs else 0.0
    if nf == 0:
        return sols, 0.0
    ng = vector_norm(G0s, kp.params, norm_rule)
    return sols, (ng / nf) ** 2
