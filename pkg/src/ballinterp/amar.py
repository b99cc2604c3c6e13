"""Interpolating vector functions B = sum_j beta_j^2 phi_{a_j} and their local
factorizations B = M phi_{a_k} with M = beta_k^2 I + Y.

For a base point a = a_k, every other beta_j vanishes at a, so the Gleason
solver writes beta_j = G_j . phi_a.  Then

    B_l = beta^2 phi_l + sum_{j != k} beta_j phi^j_l (G_j . phi)
        = sum_m (beta^2 delta_lm + Y_lm) phi_m,   Y_lm = sum_j beta_j phi^j_l g^j_m.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .functions import HARDY_RADIUS, Fun, ParameterError, lp_norm
from .geometry import moebius, pseudo_distance, rho, sample_pseudo_ball
from .gleason import default_rule, gleason_at
from .interpolation import PointSeq, drury_extension
from .kernels import KernelParams

SINGULAR_DET = 1e-14
REGION_SAMPLES = 1000


class AmarError(ValueError):
    pass


def _check_params(params):
    if not params.p > 2:
        raise ParameterError(f"the assembly needs p > 2, got p = {params.p}")
    params.check_gleason()


@dataclass
class AmarAssembly:
    """B and the matrix function M for one base point.

    ``points`` is the sequence reordered so that the base point comes first;
    ``order[i]`` is the original index of ``points[i]``.
    """

    points: np.ndarray
    order: np.ndarray
    base: int
    params: object
    basis: object
    gleason: list
    info: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def N(self):
        return self.points.shape[0]

    @property
    def a(self):
        return self.points[0]

    def phi(self, z):
        return moebius(self.a, np.atleast_2d(z))

    def _parts(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
        beta = self.basis.beta_matrix(z)                                   # (m, N)
        phis = np.stack([moebius(aj, z) for aj in self.points], axis=1)   # (m, N, n)
        if self.gleason:
            G = np.stack([s(z) for s in self.gleason], axis=1)            # (m, N-1, n)
        else:
            G = np.zeros((len(z), 0, self.n), dtype=np.complex128)
        return beta, phis, G

    def B_at(self, z):
        beta, phis, _ = self._parts(z)
        return np.einsum("mj,mjl->ml", beta ** 2, phis)

    def Y_at(self, z):
        beta, phis, G = self._parts(z)
        return np.einsum("mj,mjl,mjk->mlk", beta[:, 1:], phis[:, 1:], G)

    def M_at(self, z):
        beta, phis, G = self._parts(z)
        Y = np.einsum("mj,mjl,mjk->mlk", beta[:, 1:], phis[:, 1:], G)
        return beta[:, 0, None, None] ** 2 * np.eye(self.n) + Y

    @property
    def B(self):
        return [Fun(lambda z, l=l: self.B_at(z)[:, l], self.n, True, f"B_{l + 1}")
                for l in range(self.n)]

    @property
    def M(self):
        return [[Fun(lambda z, l=l, k=k: self.M_at(z)[:, l, k], self.n, True,
                     f"M_{l + 1}{k + 1}") for k in range(self.n)] for l in range(self.n)]

    def gleason_energy(self, z):
        """sum_{j != base} |G_j(z)|^2."""
        _, _, G = self._parts(z)
        return np.sum(np.abs(G) ** 2, axis=(1, 2))


def build_amar(A, params, rule=None, base=0, **drury_options):
    """Assemble B and M for the base index ``base`` (0-based)."""
    _check_params(params)
    pts = A.points if isinstance(A, PointSeq) else PointSeq(A).points
    N, n = pts.shape
    if not 0 <= base < N:
        raise IndexError(f"base index {base} out of range for {N} points")
    order = np.r_[base, np.delete(np.arange(N), base)]
    pts = pts[order]
    basis = drury_extension(pts, params, rule, **drury_options)
    kp = KernelParams(params)
    a = pts[0]
    sols = [gleason_at(b, a, kp) for b in basis.beta[1:]]
    asm = AmarAssembly(pts, order, int(base), params, basis, sols,
                       {"gleason_residual": max((s.residual for s in sols), default=0.0),
                        "gleason_ratio": max((s.norm_ratio for s in sols), default=0.0)})
    return asm


def factorization_residual(asm, z):
    """max_z |B(z) - M(z) phi_a(z)|."""
    z = np.atleast_2d(np.asarray(z, dtype=np.complex128))
    if len(z) == 0:
        return 0.0
    diff = asm.B_at(z) - np.einsum("mlk,mk->ml", asm.M_at(z), asm.phi(z))
    return float(np.max(np.linalg.norm(diff, axis=-1)))


def principal_minor_sums(Y):
    """s_k = sum of the order-k principal minors of each matrix in Y[..., n, n]."""
    n = Y.shape[-1]
    out = []
    for k in range(1, n + 1):
        s = 0.0
        for S in itertools.combinations(range(n), k):
            s = s + np.linalg.det(Y[..., S, :][..., :, S])
        out.append(s)
    return np.stack(out, axis=-1)


def det_expansion(asm, z):
    """(det M, (beta^2)^n + sum_k s_k (beta^2)^(n-k)) at the points z."""
    beta, phis, G = asm._parts(z)
    Y = np.einsum("mj,mjl,mjk->mlk", beta[:, 1:], phis[:, 1:], G)
    b2 = beta[:, 0] ** 2
    n = asm.n
    direct = np.linalg.det(b2[:, None, None] * np.eye(n) + Y)
    s = principal_minor_sums(Y)
    expansion = b2 ** n + sum(s[:, k - 1] * b2 ** (n - k) for k in range(1, n + 1))
    return direct, expansion


def minor_sum_bound(asm, z):
    """(|s_k|, C(n,k) (sum_j |G_j|^2)^k) for k = 1..n, each of shape (m, n)."""
    _, _, G = asm._parts(z)
    Y = asm.Y_at(z)
    s = np.abs(principal_minor_sums(Y))
    energy = np.sum(np.abs(G) ** 2, axis=(1, 2))
    ks = np.arange(1, asm.n + 1)
    bound = np.array([math.comb(asm.n, int(k)) for k in ks]) * energy[:, None] ** ks
    return s, bound


# local factorization checks -----------------------------------------------------------

@dataclass
class FactorizationReport:
    k: int
    t: float
    C: float
    radius: float
    min_det: float
    max_inv: float
    max_entry_norm: float
    passed: bool
    samples: int
    failure: str = None

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def _norm_rule(params):
    return default_rule(params, "norm", radial_count=12, angular_degree=16)


def entry_norms(asm, params=None, rule=None):
    """||M_lk||_{p,alpha} for every entry (default target (p/2, 2 alpha))."""
    params = asm.params.squared() if params is None else params
    rule = _norm_rule(params) if rule is None else rule
    nodes = HARDY_RADIUS * rule.nodes if params.hardy else rule.nodes
    vals = asm.M_at(nodes)
    n = asm.n
    return np.array([[lp_norm(np.abs(vals[:, l, k]), rule.weights, params.p)
                      for k in range(n)] for l in range(n)])


def region_radius(asm, t, params=None):
    params = asm.params.squared() if params is None else params
    return float(t * rho(asm.a) ** (asm.n * params.seq_exponent))


def region_stats(asm, r, samples=REGION_SAMPLES, seed=0):
    """min |det M|, max |M^-1| entry and the sample of smallest |det| over
    samples of {|phi_a| < r} (plus the base point itself)."""
    z = sample_pseudo_ball(np.random.default_rng(seed), asm.a, r, samples)
    z = np.vstack([asm.a[None, :], z])
    Ms = asm.M_at(z)
    det = np.abs(np.linalg.det(Ms))
    i = int(np.argmin(det))
    if det[i] < SINGULAR_DET:
        return float(det[i]), np.inf, z[i]
    inv = np.linalg.inv(Ms)
    return float(det[i]), float(np.max(np.abs(inv))), z[i]


def _report(asm, t, C, params, norms, samples, seed):
    r = region_radius(asm, t, params)
    if not r > 0:
        raise AmarError("the region {|phi_a| < t rho(a)^e} is empty")
    mdet, minv, where = region_stats(asm, r, samples, seed)
    mnorm = float(np.max(norms))
    failure = None
    if mdet < SINGULAR_DET:
        failure = f"singular M at z = {np.array2string(where, precision=6)}"
    elif mdet < t:
        failure = f"|det M| = {mdet:.3g} < t at z = {np.array2string(where, precision=6)}"
    elif minv > C:
        failure = f"|M^-1| = {minv:.3g} > C"
    elif mnorm > C:
        failure = f"entry norm {mnorm:.3g} > C"
    return FactorizationReport(int(asm.order[0]), float(t), float(C), r, mdet, minv, mnorm,
                       failure is None, samples, failure)


def verify_factorization(asm, k=None, t=0.5, C=2.0, params=None, rule=None,
                 samples=REGION_SAMPLES, seed=0):
    """Check items a)-b) for the original index ``k`` (rebuilds if needed).

    ``params`` is the target space, by default (p/2, 2 alpha).
    """
    if k is not None and k != asm.base:
        pts = np.empty_like(asm.points)
        pts[asm.order] = asm.points
        asm = build_amar(pts, asm.params, base=k)
    params = asm.params.squared() if params is None else params
    norms = entry_norms(asm, params, rule)
    return _report(asm, t, C, params, norms, samples, seed)


def search_constants(asms, params=None, rule=None, samples=REGION_SAMPLES, seed=0,
                 t_powers=8, c_powers=8):
    """Largest t = 2^-m (m <= t_powers) with the smallest C = 2^j (j <= c_powers)
    that pass for every assembly.  Returns (t, C, reports) or (None, None, reports)
    for the last t tried."""
    asms = list(asms)
    params = asms[0].params.squared() if params is None else params
    norms = [entry_norms(asm, params, rule) for asm in asms]
    reports = []
    for m in range(1, t_powers + 1):
        t = 2.0 ** -m
        stats = []
        for asm in asms:
            mdet, minv, _ = region_stats(asm, region_radius(asm, t, params), samples, seed)
            stats.append((mdet, minv))
        if min(s[0] for s in stats) < t:
            continue
        need = max(max(s[1] for s in stats), max(float(np.max(v)) for v in norms))
        for j in range(1, c_powers + 1):
            if 2.0 ** j >= need:
                reports = [_report(asm, t, 2.0 ** j, params, v, samples, seed)
                           for asm, v in zip(asms, norms)]
                return t, 2.0 ** j, reports
    t = 2.0 ** -t_powers
    reports = [_report(asm, t, 2.0 ** c_powers, params, v, samples, seed)
               for asm, v in zip(asms, norms)]
    return None, None, reports


def det_drop_fit(asm, r_max=0.5, levels=6, samples=REGION_SAMPLES, seed=0):
    """Least-squares line 1 - min|det M| ~ c0 + c1 r over radii r_max 2^-i.

    A nonnegative slope c1 matches a lower bound of the form
    |det M| >= 1 - C r on {|phi_a| < r}.
    """
    radii = r_max * 2.0 ** -np.arange(levels)
    drops = np.array([1.0 - region_stats(asm, r, samples, seed)[0] for r in radii])
    c1, c0 = np.polyfit(radii, drops, 1)
    return {"radii": radii, "drops": drops, "slope": float(c1), "intercept": float(c0)}


# separation ---------------------------------------------------------------------

def _radii(pts, eta, q, beta):
    n = pts.shape[1]
    e = n * ((0.0 if np.isinf(q) else n / q) + beta)
    return 2.0 * eta * rho(pts) ** e


def weak_separation(A, eta, q, beta=0.0, samples=2000, seed=0):
    """Whether the balls T_j = {|phi_{a_j}| < 2 eta rho(a_j)^(n(n/q + beta))} are
    pairwise disjoint.  Returns (disjoint, worst pair).

    A pair is disjoint when |phi_{a_j}(a_k)| > (R_j + R_k)/(1 + R_j R_k), the
    pseudo-hyperbolic sum of the radii; it overlaps when one centre lies in the
    other ball; otherwise samples of T_j are tested for membership in T_k.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    pts = A.points if isinstance(A, PointSeq) else np.atleast_2d(
        np.asarray(A, dtype=np.complex128))
    N = len(pts)
    if N < 2:
        return True, None
    R = _radii(pts, eta, q, beta)
    rng = np.random.default_rng(seed)
    worst, worst_margin, ok = None, np.inf, True
    for j in range(N):
        for k in range(j + 1, N):
            d = float(pseudo_distance(pts[j], pts[k]))
            need = (R[j] + R[k]) / (1.0 + R[j] * R[k])
            margin = d / need
            if margin < worst_margin:
                worst, worst_margin = (j, k), margin
            if d > need:
                continue
            if d < max(R[j], R[k]):
                ok = False
                continue
            z = sample_pseudo_ball(rng, pts[j], R[j], samples)
            if np.any(pseudo_distance(pts[k][None, :], z) < R[k]):
                ok = False
    return ok, worst
