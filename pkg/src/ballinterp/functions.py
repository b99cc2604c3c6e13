"""Function representations on the ball, weighted norms and pairings.

``Fun`` wraps a vectorized callable; ``Poly`` is a holomorphic polynomial
stored as a map from multi-indices to complex coefficients.  Everything is
evaluated on arrays of points of shape (..., n).
"""
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln

from . import _accel
from .geometry import rho
from .quadrature import BallRule, SphereRule, simplex_rule, sphere_moment, weighted_sum

# radius at which Hardy norms of non-polynomial functions are taken
HARDY_RADIUS = 1.0 - 1e-6
PRUNE_TOL = 1e-15


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceParams:
    """Index (n, p, alpha) of B^p_alpha; alpha = 0 is the Hardy space H^p."""

    n: int
    p: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be >= 1")
        if not self.p > 0:
            raise ParameterError("p must be positive")
        if self.alpha < 0:
            raise ParameterError("alpha must be >= 0")

    @property
    def hardy(self):
        return self.alpha == 0

    @property
    def ap(self):
        return self.alpha * self.p

    @property
    def weight_exponent(self):
        """c in rho^c dnu; rho^(alpha p - 1)."""
        return self.ap - 1.0

    @property
    def kernel_exponent(self):
        return self.n + self.ap

    @property
    def seq_exponent(self):
        """n/p + alpha, the weight exponent of the target sequence space."""
        return self.n / self.p + self.alpha

    def conjugate(self):
        """(q, beta) with 1/p + 1/q = 1 and alpha p = beta q."""
        if not 1 < self.p < np.inf:
            raise ParameterError("the conjugate pair needs 1 < p < inf")
        q = self.p / (self.p - 1.0)
        return SpaceParams(self.n, q, self.ap / q)

    def squared(self):
        """(p/2, 2 alpha): the space holding |f|^2-type quantities."""
        return SpaceParams(self.n, self.p / 2.0, 2.0 * self.alpha)

    def check_gleason(self):
        if not self.p > 1:
            raise ParameterError(f"Gleason solver needs p > 1, got p = {self.p}")
        if 0 < self.alpha < 1.0 / self.p - 1e-15:
            raise ParameterError(
                f"Gleason solver needs alpha in {{0}} U [1/p, inf), got alpha = {self.alpha}")


def _flat(z, n):
    z = np.asarray(z, dtype=np.complex128)
    if z.shape[-1] != n:
        raise ValueError(f"expected points in C^{n}, got trailing dimension {z.shape[-1]}")
    return z.reshape(-1, n), z.shape[:-1]


class Fun:
    """A function on (a neighbourhood of) the ball, evaluated on point arrays.

    ``fn`` maps an (m, n) array to an (m,) array.  ``holomorphic`` is a tag
    checked by :func:`holomorphy_defect`, not enforced.
    """

    def __init__(self, fn, n, holomorphic=True, name=None):
        self.fn = fn
        self.n = int(n)
        self.holomorphic = bool(holomorphic)
        self.name = name or getattr(fn, "__name__", "fun")

    def __call__(self, z):
        flat, shape = _flat(z, self.n)
        out = np.asarray(self.fn(flat))
        if out.shape == ():
            out = np.full(flat.shape[0], out, dtype=np.complex128)
        return out.reshape(shape)

    def __repr__(self):
        kind = "holomorphic" if self.holomorphic else "smooth"
        return f"Fun({self.name}, n={self.n}, {kind})"

    # arithmetic builds closures; holomorphy is kept when both sides have it
    def _combine(self, other, op, name):
        if isinstance(other, Fun):
            return Fun(lambda z: op(self(z), other(z)), self.n,
                       self.holomorphic and other.holomorphic, name)
        return Fun(lambda z: op(self(z), other), self.n, self.holomorphic, name)

    def __add__(self, other):
        return self._combine(other, np.add, "sum")

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract, "difference")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._combine(other, np.multiply, "product")

    __rmul__ = __mul__

    def __neg__(self):
        return Fun(lambda z: -self(z), self.n, self.holomorphic, "negation")

    def compose(self, g):
        """self o g for a map g: (m, n) -> (m, n)."""
        return Fun(lambda z: self(g(z)), self.n, self.holomorphic, f"{self.name}∘map")

    def conj(self):
        return Fun(lambda z: np.conj(self(z)), self.n, False, f"conj({self.name})")

    def abs2(self):
        return Fun(lambda z: np.abs(self(z)) ** 2, self.n, False, f"|{self.name}|^2")


def coordinate(n, k):
    return Poly.monomial(n, tuple(int(i == k) for i in range(n)))


def sum_abs2(funs):
    """The smooth function sum_j |f_j|^2."""
    funs = list(funs)
    n = funs[0].n

    def fn(z):
        return sum(np.abs(f(z)) ** 2 for f in funs)

    return Fun(fn, n, holomorphic=False, name="sum|f_j|^2")


def eval_vec(funs, z):
    """Stack a vector function's components on the last axis."""
    return np.stack([f(z) for f in funs], axis=-1)


class Poly(Fun):
    """Holomorphic polynomial sum_theta c_theta z^theta."""

    def __init__(self, n, coeffs=None):
        coeffs = {} if coeffs is None else coeffs
        clean = {}
        for theta, c in coeffs.items():
            theta = tuple(int(t) for t in theta)
            if len(theta) != n or min(theta, default=0) < 0:
                raise ValueError(f"bad multi-index {theta} for n = {n}")
            c = complex(c)
            if c != 0:
                clean[theta] = clean.get(theta, 0) + c
        self.coeffs = clean
        exps = np.array(sorted(clean), dtype=np.int64).reshape(-1, n)
        self._exps = exps
        self._coefs = np.array([clean[tuple(e)] for e in exps], dtype=np.complex128)
        super().__init__(self._eval, n, holomorphic=True, name="poly")

    def _eval(self, z):
        return _accel.poly_eval(z, self._exps, self._coefs)

    @classmethod
    def monomial(cls, n, theta, c=1.0):
        return cls(n, {tuple(theta): c})

    @classmethod
    def constant(cls, n, c):
        return cls(n, {(0,) * n: c})

    @property
    def degree(self):
        return max((sum(t) for t in self.coeffs), default=-1)

    def __repr__(self):
        return f"Poly(n={self.n}, terms={len(self.coeffs)}, degree={self.degree})"

    def __eq__(self, other):
        return isinstance(other, Poly) and self.n == other.n and self.coeffs == other.coeffs

    __hash__ = None

    def items(self):
        return self.coeffs.items()

    def prune(self, tol=PRUNE_TOL):
        return Poly(self.n, {t: c for t, c in self.coeffs.items() if abs(c) > tol})

    def __add__(self, other):
        if isinstance(other, Poly):
            out = dict(self.coeffs)
            for t, c in other.coeffs.items():
                out[t] = out.get(t, 0) + c
            return Poly(self.n, out)
        if np.isscalar(other):
            return self + Poly.constant(self.n, other)
        return super().__add__(other)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n, {t: -c for t, c in self.coeffs.items()})

    def __sub__(self, other):
        if isinstance(other, Poly) or np.isscalar(other):
            return self + (-other)
        return super().__sub__(other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Poly):
            out = {}
            for t1, c1 in self.coeffs.items():
                for t2, c2 in other.coeffs.items():
                    t = tuple(a + b for a, b in zip(t1, t2))
                    out[t] = out.get(t, 0) + c1 * c2
            return Poly(self.n, out)
        if np.isscalar(other):
            return Poly(self.n, {t: c * other for t, c in self.coeffs.items()})
        return super().__mul__(other)

    __rmul__ = __mul__

    def derivative(self, k):
        out = {}
        for t, c in self.coeffs.items():
            if t[k]:
                s = list(t)
                s[k] -= 1
                out[tuple(s)] = c * t[k]
        return Poly(self.n, out)

    def at_zero(self):
        return self.coeffs.get((0,) * self.n, 0j)

    def hardy_norm_sq(self):
        """||f||^2 in H^2, from the orthogonality of monomials on the sphere."""
        return sum(abs(c) ** 2 * sphere_moment(t) for t, c in self.coeffs.items())

    def to_json(self):
        return {",".join(map(str, t)): [c.real, c.imag] for t, c in sorted(self.coeffs.items())}

    @classmethod
    def from_json(cls, data, n=None):
        if isinstance(data, str):
            data = json.loads(data)
        coeffs = {}
        for key, (re, im) in data.items():
            theta = tuple(int(s) for s in key.split(","))
            coeffs[theta] = complex(re, im)
            if n is None:
                n = len(theta)
        if n is None:
            raise ValueError("empty polynomial map needs an explicit n")
        return cls(n, coeffs)

    @classmethod
    def random(cls, rng, n, degree, vanish_at=None, min_degree=0):
        """Gaussian coefficients on all monomials of degree in [min_degree, degree];
        optionally shifted by a constant so that f(vanish_at) = 0."""
        coeffs = {}
        for theta in multi_indices(n, degree):
            if sum(theta) >= min_degree:
                coeffs[theta] = complex(*rng.standard_normal(2)) / math.sqrt(2)
        f = cls(n, coeffs)
        if vanish_at is not None:
            f = f - complex(f(np.asarray(vanish_at)))
        return f


def multi_indices(n, degree, exact=False):
    """All theta in N^n with |theta| <= degree (or == degree), graded order."""
    out = []
    for k in range(0 if not exact else degree, degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), k):
            theta = [0] * n
            for i in combo:
                theta[i] += 1
            out.append(tuple(theta))
    return out


def monomial_matrix(z, thetas):
    """V[i, q] = z_i^theta_q."""
    z = np.asarray(z, dtype=np.complex128)
    exps = np.asarray(thetas, dtype=np.int64).reshape(-1, z.shape[-1])
    V = np.ones((z.shape[0], len(exps)), dtype=np.complex128)
    for d in range(z.shape[-1]):
        V *= z[:, d][:, None] ** exps[:, d][None, :]
    return V


# Taylor projection ----------------------------------------------------------

def _taylor_at_degree(f, n, degree, simplex_count):
    M = 2 * degree + 2
    t, tw = simplex_rule(n, simplex_count)
    ang = np.exp(2j * np.pi * np.arange(M) / M)
    grid = np.stack(np.meshgrid(*[ang] * n, indexing="ij"), axis=-1).reshape(-1, n)
    nodes = (np.sqrt(t)[:, None, :] * grid[None, :, :]).reshape(-1, n)
    vals = np.asarray(f(nodes)).reshape((len(t),) + (M,) * n)
    spec = np.fft.fftn(vals, axes=tuple(range(1, n + 1))) / M ** n
    thetas = multi_indices(n, degree)
    T = np.array(thetas, dtype=np.int64)
    # spec[q, theta] = c_theta t_q^(theta/2) up to aliasing; weighted least squares in q
    picked = spec[(slice(None),) + tuple(T.T)]
    with np.errstate(under="ignore"):
        tp = np.prod(np.sqrt(t)[:, None, :] ** T[None, :, :], axis=2)
    c = np.sum(tw[:, None] * picked * tp, axis=0) / np.sum(tw[:, None] * tp * tp, axis=0)
    norms = np.exp(gammaln(n) + np.sum(gammaln(T + 1.0), axis=1) - gammaln(n + T.sum(axis=1)))
    shell = np.bincount(T.sum(axis=1), weights=np.abs(c) ** 2 * norms, minlength=degree + 1)
    coeffs = dict(zip(thetas, c))
    return coeffs, np.sqrt(shell)


def taylor_project(f, n, tol=1e-13, start_degree=8, max_degree=96, simplex_count=6):
    """Taylor polynomial of a function holomorphic across the closed ball.

    Coefficients are the Szego projections <f, zeta^theta> / ||zeta^theta||^2
    computed on the sphere with an FFT over the torus angles.  The degree
    grows by half until the top two homogeneous shells fall below ``tol`` relative
    to the H^2 norm.  Returns (Poly, info dict).
    """
    degree = start_degree
    while True:
        coeffs, shells = _taylor_at_degree(f, n, degree, simplex_count)
        total = float(np.sqrt(np.sum(shells ** 2)))
        tail = float(shells[-2:].max()) if degree >= 1 else 0.0
        if tail <= tol * max(total, 1e-300) or degree >= max_degree:
            break
        degree = min(degree + degree // 2, max_degree)
    poly = Poly(n, coeffs).prune(tol * max(total, 1.0) * 1e-3)
    return poly, {"degree": degree, "tail": tail, "norm": total,
                  "converged": tail <= tol * max(total, 1e-300)}


# norms and pairings --------------------------------------------------------

def _grid_eval(f, rule):
    """Exact values of a Poly on a tensor rule by folding exponents mod M and
    an inverse FFT over the angle grid; cost independent of the degree."""
    n = rule.n
    M = rule.n_angles if isinstance(rule, SphereRule) else rule.angular_degree + 1
    block = M ** n
    base = rule.nodes[::block].real          # the (sqrt(s t)) radii, phase 1
    exps = f._exps
    pw = np.ones((base.shape[0], len(exps)))
    with np.errstate(under="ignore"):
        for d in range(n):
            pw *= base[:, d][:, None] ** exps[:, d][None, :]
    idx = np.ravel_multi_index(tuple((exps % M).T), (M,) * n)
    fold = sparse.csr_matrix((np.ones(len(idx)), (idx, np.arange(len(idx)))),
                             shape=(block, len(idx)))
    C = fold @ (pw * f._coefs[None, :]).T
    C = np.asarray(C).T.reshape((-1,) + (M,) * n)
    vals = np.fft.ifftn(C, axes=tuple(range(1, n + 1))) * block
    return vals.reshape(-1)


def values_on_rule(f, rule, boundary=False):
    """f at the rule nodes (boundary values when ``boundary``)."""
    structured = isinstance(rule, SphereRule) or getattr(rule, "tensor", False)
    if isinstance(f, Poly):
        if structured and len(f.coeffs) > 32:
            return _grid_eval(f, rule)
        return f(rule.nodes)
    return f(HARDY_RADIUS * rule.nodes) if boundary else f(rule.nodes)


def boundary_values(f, nodes):
    """f on the sphere: exact for polynomials, at HARDY_RADIUS otherwise."""
    if isinstance(f, Poly):
        return f(nodes)
    return f(HARDY_RADIUS * nodes)


def _check_rule(params, rule):
    if params.hardy:
        if not isinstance(rule, SphereRule):
            raise ParameterError("alpha = 0 norms need a SphereRule")
    else:
        if not isinstance(rule, BallRule):
            raise ParameterError("alpha > 0 norms need a BallRule")
        if not np.isclose(rule.c, params.weight_exponent):
            raise ParameterError(
                f"rule weight exponent {rule.c} does not match alpha p - 1 = {params.weight_exponent}")


def lp_norm(absvals, weights, p):
    if np.isinf(p):
        return float(np.max(absvals)) if len(absvals) else 0.0
    return float(weighted_sum(weights, absvals ** p) ** (1.0 / p))


def norm_pa(f, params, rule):
    """||f||_{p,alpha}: L^p(rho^(alpha p - 1) dnu) for alpha > 0, L^p(sigma) of
    boundary values for alpha = 0."""
    _check_rule(params, rule)
    vals = values_on_rule(f, rule, boundary=params.hardy)
    return lp_norm(np.abs(vals), rule.weights, params.p)


def vector_norm(funs, params, rule):
    """||(sum_j |f_j|^2)^(1/2)||_{p,alpha}."""
    _check_rule(params, rule)
    total = 0.0
    for f in funs:
        vals = values_on_rule(f, rule, boundary=params.hardy)
        total = total + np.abs(vals) ** 2
    return lp_norm(np.sqrt(total), rule.weights, params.p)


def seq_norm(lam, points, params, sup=False):
    """||{lambda_k rho(a_k)^(n/p + alpha)}||_{l^p}; ``sup=True`` gives sup |lambda_k|."""
    lam = np.asarray(lam, dtype=np.complex128).reshape(-1)
    pts = np.asarray(points, dtype=np.complex128).reshape(-1, params.n)
    if len(lam) != len(pts):
        raise ValueError(f"length mismatch: {len(lam)} targets for {len(pts)} points")
    if len(lam) == 0:
        return 0.0
    if sup:
        return float(np.max(np.abs(lam)))
    vals = np.abs(lam) * rho(pts) ** params.seq_exponent
    if np.isinf(params.p):
        return float(vals.max())
    return float(np.sum(vals ** params.p) ** (1.0 / params.p))


def pairing_ball(U, V, params, rule):
    """<U, V>_N = sum_j int u_j conj(v_j) rho^(alpha p - 1) dnu."""
    if len(U) != len(V):
        raise ValueError("pairing needs lists of equal length")
    if not isinstance(rule, BallRule):
        raise ParameterError("pairing_ball needs a BallRule")
    if not params.hardy and not np.isclose(rule.c, params.weight_exponent):
        raise ParameterError(
            f"rule weight exponent {rule.c} does not match alpha p - 1 = {params.weight_exponent}")
    total = 0j
    for u, v in zip(U, V):
        total += weighted_sum(rule.weights, values_on_rule(u, rule)
                              * np.conj(values_on_rule(v, rule)))
    return complex(total)


def pairing_sphere(W, H, rule):
    """<W, H>*_N = sum_j int w_j* conj(h_j*) dsigma."""
    if len(W) != len(H):
        raise ValueError("pairing needs lists of equal length")
    if not isinstance(rule, SphereRule):
        raise ParameterError("pairing_sphere needs a SphereRule")
    total = 0j
    for w, h in zip(W, H):
        total += weighted_sum(rule.weights, values_on_rule(w, rule, True)
                              * np.conj(values_on_rule(h, rule, True)))
    return complex(total)


# finite-difference Wirtinger derivatives ------------------------------------

FD_STEP = 1e-4


def _fd_parts(f, z, h, margin_check):
    z = np.asarray(z, dtype=np.complex128)
    n = z.shape[-1]
    if margin_check and np.any(np.linalg.norm(z, axis=-1) > 1.0 - 2 * h):
        raise ValueError(f"FD stencil needs boundary margin >= 2h = {2 * h}")
    dx = []
    dy = []
    for k in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[k] = h
        dx.append((f(z + e) - f(z - e)) / (2 * h))
        dy.append((f(z + 1j * e) - f(z - 1j * e)) / (2 * h))
    return np.stack(dx, axis=-1), np.stack(dy, axis=-1)


def dbar_fd(f, z, h=FD_STEP, margin_check=True):
    """Central-difference d f / d conj(z_k) = (d_x + i d_y) f / 2, for each k.

    For scalar f the result has shape (..., n); for f returning (..., r) it is
    (..., r, n).
    """
    dx, dy = _fd_parts(f, z, h, margin_check)
    return 0.5 * (dx + 1j * dy)


def d_fd(f, z, h=FD_STEP, margin_check=True):
    """Central-difference d f / d z_k = (d_x - i d_y) f / 2."""
    dx, dy = _fd_parts(f, z, h, margin_check)
    return 0.5 * (dx - 1j * dy)


def holomorphy_defect(f, rng, samples=20, h=FD_STEP, radius=0.9):
    """max |dbar f| over random interior points (a Cauchy-Riemann spot check)."""
    from .geometry import uniform_ball

    z = uniform_ball(rng, samples, f.n, radius=radius)
    return float(np.max(np.abs(dbar_fd(f, z, h))))
