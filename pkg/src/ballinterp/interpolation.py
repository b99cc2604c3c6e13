"""Finite interpolation in B^p_alpha: minimum-norm interpolants, the
interpolation constant, the Carleson product and the roots-of-unity basis
with beta_j(a_k) = delta_jk."""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .functions import (Fun, ParameterError, Poly, monomial_matrix,
                        multi_indices, norm_pa, seq_norm, vector_norm)
from .geometry import as_points, moebius, pseudo_distance, rho, uniform_ball
from .gleason import default_rule
from .kernels import KernelParams, kernel_sum
from .quadrature import ball_moment, sphere_moment

COND_LIMIT = 1e12
EXACT_TOL = 1e-8


class InterpolationError(ValueError):
    pass


@dataclass(frozen=True)
class PointSeq:
    """Finite sequence of distinct points of the open ball."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_points(np.atleast_2d(np.asarray(self.points, dtype=np.complex128)))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("a point sequence needs shape (N, n) with N >= 1")
        object.__setattr__(self, "points", pts)
        i, j = closest_pair(pts)
        if i is not None and np.allclose(pts[i], pts[j], rtol=0, atol=0):
            raise ValueError(f"points {i} and {j} coincide")

    @property
    def n(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __getitem__(self, k):
        return self.points[k]

    def append(self, point):
        return PointSeq(np.vstack([self.points, np.asarray(point)[None, :]]))


@dataclass(frozen=True)
class TargetSeq:
    """Values lambda_k; ``mode`` selects the weighted l^p or the sup norm."""

    values: np.ndarray
    mode: str = "p"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("targets must be finite")
        if self.mode not in ("p", "sup"):
            raise ValueError("mode is 'p' or 'sup'")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def norm(self, A, params):
        return seq_norm(self.values, A.points, params, sup=self.mode == "sup")


def _points(A):
    return A.points if isinstance(A, PointSeq) else PointSeq(A).points


def _values(lam):
    return lam.values if isinstance(lam, TargetSeq) else TargetSeq(lam).values


def closest_pair(pts):
    """Indices of the pseudo-hyperbolically closest pair (None for one point)."""
    N = len(pts)
    if N < 2:
        return None, None
    D = pseudo_distance(pts[:, None, :], pts[None, :, :])
    D[np.diag_indices(N)] = np.inf
    i, j = np.unravel_index(np.argmin(D), D.shape)
    return int(min(i, j)), int(max(i, j))


# p = 2 kernel route ------------------------------------------------------------

class KernelSum(Fun):
    """f = sum_k c_k K_{a_k}; ``hilbert_norm`` is its norm in the space with
    reproducing kernel K (B^2 with the same kernel exponent)."""

    def __init__(self, centers, coeffs, kp):
        self.centers = np.asarray(centers, dtype=np.complex128)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)
        self.kp = kp
        inner = kernel_sum(self.centers, self.coeffs, kp)
        super().__init__(inner.fn, kp.n, holomorphic=True, name="kernel_sum")

    def hilbert_norm(self):
        G = gram_matrix(self.centers, self.kp)
        return float(np.sqrt(max(np.real(np.conj(self.coeffs) @ G @ self.coeffs), 0.0)))


def gram_matrix(points, kp):
    """Gram[j, k] = K_{a_k}(a_j) = gamma (1 - <a_j, a_k>)^-(kernel exponent)."""
    pts = np.asarray(points, dtype=np.complex128)
    one_minus = 1.0 - pts @ pts.conj().T
    return kp.gamma * one_minus ** (-kp.exponent)


def checked_gram(points, kp):
    """Gram matrix after asserting it is Hermitian positive definite and
    well-conditioned; returns (G, cho_factor)."""
    G = gram_matrix(points, kp)
    if not np.allclose(G, G.conj().T, rtol=1e-12, atol=0):
        raise InterpolationError("Gram matrix is not Hermitian")
    ev = np.linalg.eigvalsh(G)
    cond = ev[-1] / ev[0] if ev[0] > 0 else np.inf
    if not ev[0] > 0 or cond > COND_LIMIT:
        i, j = closest_pair(points)
        where = "" if i is None else (
            f"; nearest pair ({i}, {j}) at pseudo-distance "
            f"{float(pseudo_distance(points[i], points[j])):.3g}")
        raise InterpolationError(f"Gram matrix ill-conditioned (cond = {cond:.3g}){where}")
    return G, linalg.cho_factor(G, lower=True)


def _kernel_interpolant(pts, lam, kp):
    G, cho = checked_gram(pts, kp)
    c = linalg.cho_solve(cho, lam)
    return KernelSum(pts, c, kp)


# general p: IRLS over monomials -------------------------------------------------

def _irls_interpolant(pts, lam, params, rule, degree=None, tol=1e-8, max_iter=100):
    """Minimize the quadrature value of ||f||_{p,alpha}^p over polynomials of
    degree <= ``degree`` (default 2N) subject to f(a_k) = lambda_k."""
    n, N = params.n, len(pts)
    degree = 2 * N if degree is None else degree
    thetas = multi_indices(n, degree)
    if params.hardy:
        scale = np.array([sphere_moment(t) for t in thetas]) ** -0.5
    else:
        scale = np.array([ball_moment(t, params.weight_exponent) for t in thetas]) ** -0.5
    V = monomial_matrix(rule.nodes, thetas) * scale
    C = monomial_matrix(pts, thetas) * scale
    w = rule.weights
    p = params.p

    def kkt(weights):
        H = V.conj().T @ (weights[:, None] * V)
        H += 1e-14 * np.trace(H).real / len(H) * np.eye(len(H))
        Hi_Ch = linalg.solve(H, C.conj().T, assume_a="pos")
        mu = linalg.solve(C @ Hi_Ch, lam)
        return Hi_Ch @ mu

    c = kkt(w)
    iters = 0
    converged = p == 2
    # damped update c += (c_new - c) / (p - 1) keeps the iteration from
    # oscillating for p > 2 (a Newton step for the p-th power objective)
    step = 1.0 / (p - 1.0) if p > 2 else 1.0
    while not converged and iters < max_iter:
        iters += 1
        mag = np.abs(V @ c)
        floor = 1e-10 * max(mag.max(), 1e-300)
        c_new = c + step * (kkt(w * np.maximum(mag, floor) ** (p - 2)) - c)
        converged = np.linalg.norm(c_new - c) <= tol * max(np.linalg.norm(c_new), 1e-300)
        c = c_new
    f = Poly(n, dict(zip(thetas, c * scale)))
    f.irls_info = {"iterations": iters, "converged": bool(converged), "degree": degree}
    return f


def min_norm_interpolant(A, lam, params, rule=None, method=None, **irls_options):
    """Minimum-norm f with f(a_k) = lambda_k.

    ``method="kernel"`` (default) solves the Gram system of the reproducing
    kernel with exponent n + alpha p; for p = 2 this is the exact B^2_alpha
    (or H^2) minimizer.  ``method="irls"`` minimizes the quadrature L^p norm
    over polynomials of degree <= 2N.
    """
    pts = _points(A)
    lam = _values(lam)
    if len(lam) != len(pts):
        raise ValueError(f"{len(lam)} targets for {len(pts)} points")
    kp = KernelParams(params)
    method = method or "kernel"
    if method == "kernel":
        f = _kernel_interpolant(pts, lam, kp)
    elif method == "irls":
        rule = default_rule(params, "source") if rule is None else rule
        f = _irls_interpolant(pts, lam, params, rule, **irls_options)
    else:
        raise ParameterError(f"unknown method {method!r}")
    err = np.abs(f(pts) - lam)
    if np.any(err > EXACT_TOL * (1 + np.abs(lam))):
        k = int(np.argmax(err))
        raise InterpolationError(f"interpolation defect {err[k]:.3g} at node {k}")
    return f


# interpolation constant ---------------------------------------------------------

def _weights(pts, params):
    return rho(pts) ** params.seq_exponent


def interpolation_constant(A, params, trials=32, rule=None, seed=0, method=None):
    """Lower estimate of C_A: max over unit-norm targets of ||f||_{p,alpha}.

    Random unit targets are always tried.  On the p = 2 kernel path the norm
    is exact (c^H Gram c) and the maximizing target is added: the top
    eigenvalue of D^-1 Gram^-1 D^-1 with D = diag(rho(a_k)^(n/2 + alpha)).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pts = _points(A)
    N = len(pts)
    kp = KernelParams(params)
    hilbert = params.p == 2 and (method in (None, "kernel"))
    if not hilbert:
        rule = default_rule(params) if rule is None else rule
    rng = np.random.default_rng(seed)
    d = _weights(pts, params)
    best = 0.0
    for _ in range(trials):
        mu = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        mu /= np.linalg.norm(mu, ord=params.p)
        f = min_norm_interpolant(pts, mu / d, params, rule, method)
        val = f.hilbert_norm() if hilbert else norm_pa(f, params, rule)
        best = max(best, val)
    if hilbert:
        G, cho = checked_gram(pts, kp)
        Ginv = linalg.cho_solve(cho, np.eye(N))
        M = Ginv / np.outer(d, d)
        top = np.linalg.eigvalsh(0.5 * (M + M.conj().T))[-1]
        best = max(best, float(np.sqrt(top)))
    return best


def carleson_product(A):
    """min_k prod_{j != k} |phi_{a_j}(a_k)| (1 for a single point)."""
    pts = np.asarray(A.points if isinstance(A, PointSeq) else A, dtype=np.complex128)
    N = len(pts)
    if N < 2:
        return 1.0
    D = pseudo_distance(pts[:, None, :], pts[None, :, :])
    D[np.diag_indices(N)] = 1.0
    if np.any(D == 0):
        warnings.warn("coincident points in the sequence", RuntimeWarning)
        return 0.0
    return float(np.min(np.exp(np.sum(np.log(D), axis=0))))


# roots-of-unity basis ------------------------------------------------------------

@dataclass
class DruryBasis:
    """g_j interpolates lambda^(jk) on A; beta_j = (1/N) sum_m lambda^(-jm) g_m."""

    N: int
    root: complex
    g: list
    beta: list
    checks: dict = field(default_factory=dict)

    def beta_matrix(self, z):
        return np.stack([b(z) for b in self.beta], axis=-1)


def drury_extension(A, params, rule=None, check_points=100, seed=0, tol_delta=1e-8,
                    tol_plancherel=1e-10, constant=None, norm_rule=None):
    """Build (g_j, beta_j) and run the Kronecker, Plancherel and norm checks."""
    if params.p < 2:
        raise ParameterError("the construction needs p >= 2")
    pts = _points(A)
    N, n = pts.shape
    kp = KernelParams(params)
    lam = np.exp(2j * np.pi / N)
    k = np.arange(1, N + 1)
    g = [min_norm_interpolant(pts, lam ** (j * k), params, rule) for j in k]
    F = lam ** (-np.outer(k, k)) / N          # F[j, m] = lambda^(-jm) / N
    coeffs = F @ np.stack([gj.coeffs for gj in g])
    beta = [KernelSum(pts, coeffs[j], kp) for j in range(N)]
    basis = DruryBasis(N, complex(lam), g, beta)

    B = basis.beta_matrix(pts)
    delta = float(np.max(np.abs(B - np.eye(N))))
    z = uniform_ball(np.random.default_rng(seed), check_points, n)
    lhs = np.sum(np.abs(basis.beta_matrix(z)) ** 2, axis=1)
    rhs = np.sum(np.abs(np.stack([gj(z) for gj in g], axis=1)) ** 2, axis=1) / N
    planch = float(np.max(np.abs(lhs - rhs)))
    basis.checks.update(kronecker=delta, plancherel=planch)
    if delta > tol_delta:
        raise InterpolationError(f"beta_j(a_k) deviates from delta_jk by {delta:.3g}")
    if planch > tol_plancherel * max(1.0, float(np.max(np.abs(rhs)))):
        raise InterpolationError(f"Plancherel identity defect {planch:.3g}")

    # ||sum |beta_j|^2||_{p/2, 2 alpha} against C_1 = C_A^2 [sum rho^(n + ap)]^(2/p)
    norm_rule = default_rule(params) if norm_rule is None else norm_rule
    value = vector_norm(beta, params, norm_rule) ** 2
    CA = interpolation_constant(pts, params) if constant is None else constant
    C1 = CA ** 2 * float(np.sum(rho(pts) ** (n + params.ap))) ** (2.0 / params.p)
    basis.checks.update(norm=value, C1=C1, C_A=CA)
    return basis


def growth_probe(params, samples=1000, rule=None, seed=0, degree=3, radius=0.9):
    """Empirical max of |h(z) - h(a)| rho(a)^(n/p+alpha) / (||h|| |phi_a(z)|)
    over random polynomials h, centres a and z with |phi_a(z)| < 1/2."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = params.n
    rule = default_rule(params) if rule is None else rule
    rng = np.random.default_rng(seed)
    best = 0.0
    per_h = 50
    for _ in range(max(1, samples // per_h)):
        h = Poly.random(rng, n, degree)
        nh = norm_pa(h, params, rule)
        a = uniform_ball(rng, 1, n, radius)[0]
        w = uniform_ball(rng, per_h, n, 0.5)
        z = moebius(a, w)
        dist = np.linalg.norm(w, axis=1)
        ratio = np.abs(h(z) - h(a)) * rho(a) ** params.seq_exponent / (nh * dist)
        best = max(best, float(np.max(ratio)))
    return best
