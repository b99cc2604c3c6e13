"""Smooth interpolant F(z) = sum_j lambda_j chi(r_j^-2 |phi_j(Rz)|^2) on the ball of
C^2 and the forms that carry its dbar.

With w = Rz, u_j = |phi_j(w)|^2 and phi_j = A_j B (A_j the inverse of the local
matrix M_j), the chain rule gives dbar F = B_1(Rz) w^1 + B_2(Rz) w^2 where

    w^m = R sum_j lambda_j r_j^-2 chi'(u_j / r_j^2) sum_k E^j_mk(Rz) dzbar_k,
    E^j = A_j^T conj(D phi_j),

and, since the chi' terms cancel in the antisymmetrization,

    dbar w^1 = -B_2(Rz) w^3,  dbar w^2 = B_1(Rz) w^3,
    w^3 = R^2 sum_j lambda_j r_j^-4 chi''(u_j / r_j^2) det A_j conj(J phi_j) (Rz).
"""
from dataclasses import dataclass, field

import numpy as np

from .amar import build_amar, weak_separation
from .carleson import hyperball_radii
from .functions import Fun, ParameterError, dbar_fd
from .geometry import (moebius, moebius_derivative, moebius_jacobian, pseudo_ball_extent,
                       pseudo_distance, rho, uniform_sphere)

SAFETY_MARGIN = 1e-3
R_CEILING = 1.0 - 1e-6
_PSI_FLOOR = 1.0 / 700.0


class SmoothError(ValueError):
    pass


# cutoff ----------------------------------------------------------------------------

def _psi(u):
    """exp(-1/u) for u > 0, else 0, with its first two derivatives."""
    u = np.asarray(u, dtype=float)
    pos = u > _PSI_FLOOR
    safe = np.where(pos, u, 1.0)
    v = np.where(pos, np.exp(-1.0 / safe), 0.0)
    d1 = np.where(pos, v / safe ** 2, 0.0)
    d2 = np.where(pos, v * (1.0 / safe ** 4 - 2.0 / safe ** 3), 0.0)
    return v, d1, d2


def cutoff(x, order=0):
    """chi(x) = psi(2(1-|x|)) / [psi(2(1-|x|)) + psi(2|x|-1)] and its derivatives
    (``order`` 0, 1 or 2).  chi = 1 on |x| <= 1/2, 0 on |x| >= 1."""
    x = np.asarray(x, dtype=float)
    s = np.sign(x)
    ax = np.abs(x)
    a, a1, a2 = _psi(2.0 * (1.0 - ax))
    b, b1, b2 = _psi(2.0 * ax - 1.0)
    # derivatives in |x|
    a1, a2 = -2.0 * a1, 4.0 * a2
    b1, b2 = 2.0 * b1, 4.0 * b2
    S = a + b
    # written so that each derivative is exactly 0 off (1/2, 1)
    W1 = a1 * b - a * b1
    if order == 0:
        return a / S
    if order == 1:
        return s * W1 / S ** 2
    if order == 2:
        return (a2 * b - a * b2) / S ** 2 - 2.0 * W1 * (a1 + b1) / S ** 3
    raise ValueError("order must be 0, 1 or 2")


# shrink radius ---------------------------------------------------------------------

def _shell_samples(a, r, count, seed):
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    rad = np.r_[r / np.sqrt(2.0) * (1 + 1e-9), r * (1 - 1e-9),
                rng.uniform(r / np.sqrt(2.0), r, max(count - 2, 0))]
    zeta = rad[:, None] * uniform_sphere(rng, len(rad), n)
    return moebius(a, zeta)


def _shrink_ok(pts, r, R, shells):
    for a, w in zip(pts, shells):
        inner = w / R
        if np.any(np.linalg.norm(inner, axis=1) >= 1.0):
            return False
        if np.any(pseudo_distance(a[None, :], inner) >= 2.0 * pseudo_distance(a[None, :], w)):
            return False
    return True


def shrink_radius(A, eta, params, samples=256, seed=0, tol=1e-6):
    """Smallest R_N in (0, 1), moved up by 1e-3 of the gap 1 - R_N, such that

    a) every closed T_j(2 r_j) = {|phi_j| <= 2 r_j} lies in R_N B, and
    b) |phi_j(w / R)| < 2 |phi_j(w)| on the shell r_j/sqrt(2) < |phi_j(w)| < r_j
       for all R in (R_N, 1]  (checked on samples and a grid of R).
    """
    pts = np.atleast_2d(np.asarray(getattr(A, "points", A), dtype=np.complex128))
    r = hyperball_radii(pts, eta, params)
    contain = max(pseudo_ball_extent(a, 2 * rj) for a, rj in zip(pts, r))
    shells = [_shell_samples(a, rj, samples, seed + j) for j, (a, rj) in enumerate(zip(pts, r))]
    lo = contain
    if not _shrink_ok(pts, r, R_CEILING, shells):
        raise SmoothError("no admissible radius below 1 - 1e-6")
    if _shrink_ok(pts, r, lo, shells) and lo > 0:
        R = lo
    else:
        hi = R_CEILING
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _shrink_ok(pts, r, mid, shells):
                hi = mid
            else:
                lo = mid
        R = hi
    # b) must hold on the whole interval (R, 1]: move past any failing grid value
    for Rg in np.linspace(R, R_CEILING, 33)[::-1]:
        if not _shrink_ok(pts, r, Rg, shells):
            R = max(R, Rg + tol)
            break
    R = min(R + SAFETY_MARGIN * (1.0 - R), R_CEILING)
    if not R < 1.0:
        raise SmoothError("no admissible radius below 1")
    return float(R)


# the smooth interpolant --------------------------------------------------------------

@dataclass
class SmoothData:
    points: np.ndarray
    lam: np.ndarray
    R: float
    eta: float
    params: object
    radii: np.ndarray
    assemblies: list = field(repr=False)
    info: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.points.shape[1]

    def arguments(self, z):
        """x_j = r_j^-2 |phi_j(Rz)|^2, shape (m, N)."""
        w = self.R * np.atleast_2d(np.asarray(z, dtype=np.complex128))
        return np.stack([np.sum(np.abs(moebius(a, w)) ** 2, axis=-1) / rj ** 2
                         for a, rj in zip(self.points, self.radii)], axis=1)

    def F(self, z):
        return cutoff(self.arguments(z)) @ self.lam

    def as_fun(self):
        return Fun(self.F, self.n, holomorphic=False, name="F")

    def B_R(self, z):
        w = self.R * np.atleast_2d(np.asarray(z, dtype=np.complex128))
        return self.assemblies[0].B_at(w)

    def step(self, z):
        """lambda(z) = sum_j lambda_j [z in T_j(2 r_j)]."""
        z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
        out = np.zeros(len(z), dtype=np.complex128)
        for a, rj, lj in zip(self.points, self.radii, self.lam):
            out += lj * (pseudo_distance(a[None, :], z) < 2 * rj)
        return out

    def envelope(self, z):
        """m(z) = sum_j r_j^-4 rho(a_j)^-1 [z in T_j(2 r_j)]."""
        z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
        out = np.zeros(len(z))
        for a, rj in zip(self.points, self.radii):
            out += (pseudo_distance(a[None, :], z) < 2 * rj) / (rj ** 4 * rho(a))
        return out


def assemble_all(A, params, **options):
    """One local factorization per point (base index j for the j-th point)."""
    pts = np.atleast_2d(np.asarray(getattr(A, "points", A), dtype=np.complex128))
    return [build_amar(pts, params, base=j, **options) for j in range(len(pts))]


def build_F(A, lam, R, eta, params, assemblies, check_radius=True):
    """F(z) = sum_j lambda_j chi(r_j^-2 |phi_j(Rz)|^2).

    ``params`` is the space in which B is interpolating (the radii use its
    n/p + alpha); ``assemblies[j]`` is the factorization based at a_j.
    """
    pts = np.atleast_2d(np.asarray(getattr(A, "points", A), dtype=np.complex128))
    lam = np.asarray(getattr(lam, "values", lam), dtype=np.complex128).reshape(-1)
    if params.n != 2:
        raise ParameterError("the smooth interpolant is built on the ball of C^2")
    if len(lam) != len(pts) or len(assemblies) != len(pts):
        raise ValueError("need one target and one assembly per point")
    for j, asm in enumerate(assemblies):
        if int(asm.order[0]) != j or not np.allclose(asm.a, pts[j]):
            raise ValueError(f"assembly {j} is not based at point {j}")
    if not 0 < R < 1:
        raise SmoothError("R must lie in (0, 1)")
    if np.any(np.linalg.norm(pts, axis=1) >= R):
        raise SmoothError("R^-1 a_j must lie in the ball")
    ok, pair = weak_separation(pts, eta, params.p, params.alpha)
    if not ok:
        raise SmoothError(f"hyperballs T_j(2 r_j) overlap (pair {pair})")
    info = {}
    if check_radius:
        RN = shrink_radius(pts, eta, params)
        if R <= RN:
            raise SmoothError(f"R = {R} must exceed R_N = {RN:.6g}")
        info["R_N"] = RN
    return SmoothData(pts, lam, float(R), float(eta), params,
                      hyperball_radii(pts, eta, params), list(assemblies), info)


def omega_forms(sd, z):
    """Coefficients (w^1 (m, 2), w^2 (m, 2), w^3 (m,)): w^m[:, k] is the
    dzbar_k coefficient of w^m and w^3 that of dzbar_1 ^ dzbar_2.  Exactly 0
    where no chi' or chi'' is supported."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    w = sd.R * z
    m = len(z)
    w1 = np.zeros((m, 2), dtype=np.complex128)
    w2 = np.zeros((m, 2), dtype=np.complex128)
    w3 = np.zeros(m, dtype=np.complex128)
    x = sd.arguments(z)
    for j, (a, rj, lj, asm) in enumerate(zip(sd.points, sd.radii, sd.lam, sd.assemblies)):
        c1 = cutoff(x[:, j], 1)
        c2 = cutoff(x[:, j], 2)
        live = (c1 != 0) | (c2 != 0)
        if not np.any(live) or lj == 0:
            continue
        wl = w[live]
        M = asm.M_at(wl)
        det = np.linalg.det(M)
        bad = np.abs(det) < 1e-14
        if np.any(bad):
            raise SmoothError(f"singular local matrix for point {j} at w = {wl[bad][0]}")
        Ainv = np.linalg.inv(M)
        E = np.einsum("mlr,mlk->mrk", Ainv, np.conj(moebius_derivative(a, wl)))
        f1 = sd.R * lj * c1[live] / rj ** 2
        w1[live] += f1[:, None] * E[:, 0, :]
        w2[live] += f1[:, None] * E[:, 1, :]
        f2 = sd.R ** 2 * lj * c2[live] / rj ** 4
        w3[live] += f2 / det * np.conj(moebius_jacobian(a, wl))
    return w1, w2, w3


def support_samples(sd, count, seed=0):
    """Points of the supports R^-1 Omega_j, spread over all j."""
    rng = np.random.default_rng(seed)
    per = max(1, count // len(sd.points))
    out = []
    for a, rj in zip(sd.points, sd.radii):
        rad = rng.uniform(rj / np.sqrt(2.0), rj, per)
        out.append(moebius(a, rad[:, None] * uniform_sphere(rng, per, 2)) / sd.R)
    return np.vstack(out)[:count]


def _dbar(f, z, h, scheme):
    if scheme == "central":
        return dbar_fd(f, z, h, margin_check=False)
    if scheme == "richardson":
        # (4 D(h/2) - D(h)) / 3 cancels the h^2 term of the central difference
        return (4.0 * dbar_fd(f, z, h / 2, margin_check=False)
                - dbar_fd(f, z, h, margin_check=False)) / 3.0
    raise ValueError("scheme is 'central' or 'richardson'")


def _dbar_form(coef, z, h, scheme):
    """dbar of sum_k c_k dzbar_k: d c_2/d zbar_1 - d c_1/d zbar_2."""
    D = _dbar(coef, z, h, scheme)    # (m, 2 components, 2 derivatives)
    return D[:, 1, 0] - D[:, 0, 1]


def dbar_identity_check(sd, z, h=1e-4, scheme="central"):
    """Max residuals of dbar F = B_1 w^1 + B_2 w^2, dbar w^1 = -B_2 w^3 and
    dbar w^2 = B_1 w^3 at the points z, with finite differences of step h
    (``scheme="richardson"`` extrapolates the central differences at h, h/2).
    Also reports the largest term of each identity as its scale."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    if np.any(np.linalg.norm(sd.R * z, axis=1) > 1.0 - 2 * h):
        raise ValueError("sample points too close to the boundary for the FD stencil")
    B = sd.B_R(z)
    w1, w2, w3 = omega_forms(sd, z)
    rhs_F = B[:, 0, None] * w1 + B[:, 1, None] * w2
    r_F = np.abs(_dbar(sd.F, z, h, scheme) - rhs_F)
    r_1 = np.abs(_dbar_form(lambda y: omega_forms(sd, y)[0], z, h, scheme) + B[:, 1] * w3)
    r_2 = np.abs(_dbar_form(lambda y: omega_forms(sd, y)[1], z, h, scheme) - B[:, 0] * w3)

    def top(v):
        return float(np.max(v)) if np.size(v) else 0.0

    return {"dbar_F": top(r_F), "dbar_w1": top(r_1), "dbar_w2": top(r_2),
            "scale_F": top(np.abs(rhs_F)), "scale_w": top(np.abs(B[:, :, None] * w3[:, None, None])),
            "h": h, "scheme": scheme}


def fd_order(sd, z, h=1e-3, scheme="central"):
    """Observed convergence orders log2(res(h) / res(h/2)) of the three residuals."""
    a = dbar_identity_check(sd, z, h, scheme)
    b = dbar_identity_check(sd, z, h / 2, scheme)
    keys = ("dbar_F", "dbar_w1", "dbar_w2")
    return {k: float(np.log2(a[k] / b[k])) if b[k] > 0 else np.inf for k in keys}, a, b


def envelope_check(sd, z):
    """Constant C with max[rho^-1/2 |m^lk|, rho^1/2 |m^3|] <= C m(z) at the points
    z, where w^k = lambda(z) sum_l m^lk dzbar_l.  Returns (C, violations): the
    number of points with a nonzero form but m(z) = 0."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    w1, w2, w3 = omega_forms(sd, z)
    lam = sd.step(z)
    env = sd.envelope(z)
    live = np.abs(lam) > 0
    nonzero = (np.abs(w1).max(axis=1) > 0) | (np.abs(w2).max(axis=1) > 0) | (w3 != 0)
    violations = int(np.sum(nonzero & ~(env > 0)))
    use = live & (env > 0)
    if not np.any(use):
        return 0.0, violations
    rz = rho(z[use])
    mlk = np.concatenate([np.abs(w1[use]), np.abs(w2[use])], axis=1) / np.abs(lam[use])[:, None]
    m3 = np.abs(w3[use]) / np.abs(lam[use])
    lhs = np.maximum(mlk.max(axis=1) / np.sqrt(rz), np.sqrt(rz) * m3)
    return float(np.max(lhs / env[use])), violations
