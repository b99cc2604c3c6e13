"""Carleson-measure diagnostics on the unit ball.

A positive measure mu is Carleson (class W^1) when mu({|1 - <xi, z>| < t}) <= C t^n
for every boundary point xi and t > 0.  For atomic measures the ratio
mu(window) / t^n is piecewise decreasing in t between the distances
|1 - <xi, a_k>| at which atoms enter, so the sup over t for a fixed xi is
attained (with closed windows) at one of those distances.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import _accel
from .geometry import as_points, pseudo_distance, rho
from .quadrature import pseudo_ball_rule


@dataclass(frozen=True)
class AtomicMeasure:
    """sum_k m_k delta_{a_k} with interior atoms and positive masses."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if pts.ndim != 2 or len(pts) != len(m):
            raise ValueError("need points of shape (K, n) and K masses")
        if len(pts):
            as_points(pts)
        if np.any(~(m > 0)) or not np.all(np.isfinite(m)):
            raise ValueError("masses must be positive and finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((0, n), dtype=np.complex128), np.zeros(0))

    @property
    def n(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.masses)

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    def scaled(self, c):
        return AtomicMeasure(self.points, c * self.masses)

    def add(self, point, mass):
        return AtomicMeasure(np.vstack([self.points, np.asarray(point)[None, :]]),
                             np.r_[self.masses, mass])


def mu_A(A, exponent=2.0):
    """Atoms at a_k with masses rho(a_k)^exponent."""
    pts = np.asarray(getattr(A, "points", A), dtype=np.complex128)
    if pts.ndim != 2:
        raise ValueError("need points of shape (K, n)")
    return AtomicMeasure(pts, rho(pts) ** exponent if len(pts) else np.zeros(0))


# window search ------------------------------------------------------------------

def boundary_grid(n, count):
    """``count`` low-discrepancy points of the unit sphere of C^n: unscrambled
    Halton points pushed through the normal quantile and normalized."""
    if count < 1:
        return np.zeros((0, n), dtype=np.complex128)
    u = qmc.Halton(d=2 * n, scramble=False).random(count + 1)[1:]
    g = norm.ppf(u)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, :n] + 1j * g[:, n:]


def _directions(points):
    r = np.linalg.norm(points, axis=1)
    keep = r > 0
    return points[keep] / r[keep, None]


def window_distances(xi, points):
    """|1 - <xi_i, a_k>| for every boundary point and atom."""
    return np.abs(1.0 - xi @ points.conj().T)


@dataclass
class CarlesonReport:
    constant: float
    xi: np.ndarray
    t: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {"constant": self.constant,
                "xi": [[float(v.real), float(v.imag)] for v in np.atleast_1d(self.xi)],
                "t": self.t, **self.meta}


def carleson_constant(mu, n=None, xi_grid=256, t_grid=4):
    """Sup of mu(window)/t^n over windows {|1 - <xi, z>| <= t}.

    Boundary points: ``xi_grid`` Halton points plus the directions a_k/|a_k|.
    Apertures: every atom distance |1 - <xi, a_k>| (exact per xi) and a
    geometric grid 2 * 2^(-i/t_grid) down to half the smallest distance.
    """
    n = mu.n if n is None else n
    if xi_grid < 1 or t_grid < 1:
        raise ValueError("grid sizes must be >= 1")
    if len(mu) == 0:
        return CarlesonReport(0.0, np.ones(n, dtype=np.complex128) / np.sqrt(n), 2.0,
                              {"xi_count": 0, "t_count": 0})
    xi = np.vstack([boundary_grid(n, xi_grid), _directions(mu.points)])
    dist = window_distances(xi, mu.points)
    # apertures at the atom distances
    order = np.argsort(dist, axis=1, kind="stable")
    ds = np.take_along_axis(dist, order, axis=1)
    cm = np.cumsum(mu.masses[order], axis=1)
    best_at = np.empty(len(xi))
    best_t = np.empty(len(xi))
    for i in range(len(xi)):
        last = np.searchsorted(ds[i], ds[i], side="right") - 1
        ratio = cm[i, last] / ds[i] ** n
        k = int(np.argmax(ratio))
        best_at[i], best_t[i] = ratio[k], ds[i, k]
    # geometric apertures
    t_min = max(float(ds[:, 0].min()) / 2.0, 1e-300)
    levels = int(np.ceil(t_grid * np.log2(2.0 / t_min))) + 1
    tg = 2.0 * 2.0 ** (-np.arange(levels) / t_grid)
    grid_ratio = _accel.window_counts(dist, mu.masses, tg) / tg[None, :] ** n
    gi = np.unravel_index(int(np.argmax(grid_ratio)), grid_ratio.shape)
    i = int(np.argmax(best_at))
    if grid_ratio[gi] > best_at[i]:
        value, where, t = float(grid_ratio[gi]), xi[gi[0]], float(tg[gi[1]])
    else:
        value, where, t = float(best_at[i]), xi[i], float(best_t[i])
    return CarlesonReport(value, where, t, {"xi_count": len(xi), "t_count": levels,
                                            "t_min": t_min})


# embedding test --------------------------------------------------------------------

def _probe_centres(mu, n, probe_count, radii):
    r = 1.0 - 2.0 ** (-np.arange(1, radii + 1) / 2.0)
    xi = np.vstack([boundary_grid(n, probe_count), _directions(mu.points)])
    w = (r[:, None, None] * xi[None, :, :]).reshape(-1, n)
    return np.vstack([w, mu.points])


def carleson_dual_test(mu, tau, n=None, probe_count=64, radii=24, return_probe=False):
    """Empirical sup over probes of (int |f_w|^tau dmu)^(1/tau) / ||f_w||_{H^tau}.

    f_w(z) = (1 - <z, w>)^(-2n/tau) has ||f_w||_{H^tau} = rho(w)^(-n/tau)
    exactly, so the ratio is [sum_k m_k |1 - <a_k, w>|^(-2n) rho(w)^n]^(1/tau).
    Probe centres: radii 1 - 2^(-i/2) along boundary grid points and atom
    directions, plus the atoms themselves.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    n = mu.n if n is None else n
    if len(mu) == 0:
        return (0.0, None) if return_probe else 0.0
    w = _probe_centres(mu, n, probe_count, radii)
    kern = np.abs(1.0 - w @ mu.points.conj().T) ** (-2.0 * n)
    vals = (kern @ mu.masses) * rho(w) ** n
    i = int(np.argmax(vals))
    value = float(vals[i] ** (1.0 / tau))
    return (value, w[i]) if return_probe else value


# the measure sum_j r_j^-4 rho(a_j)^-1 1_{T_j(2 r_j)} dnu_2 ----------------------------

def hyperball_radii(A, eta, params):
    """r_j = eta rho(a_j)^(n (n/p + alpha))."""
    pts = np.asarray(getattr(A, "points", A), dtype=np.complex128)
    return eta * rho(pts) ** (params.n * params.seq_exponent)


def _separated(pts, R):
    if len(pts) < 2:
        return True
    D = pseudo_distance(pts[:, None, :], pts[None, :, :])
    S = (R[:, None] + R[None, :]) / (1.0 + R[:, None] * R[None, :])
    np.fill_diagonal(D, np.inf)
    return bool(np.all(D > S))


def hyperball_density(A, eta, params, rule):
    """sum_j r_j^-4 rho(a_j)^-1 [|phi_{a_j}(z)| < 2 r_j] at the rule nodes."""
    if params.n != 2:
        raise ValueError("the density is defined on the ball of C^2")
    pts = np.asarray(getattr(A, "points", A), dtype=np.complex128).reshape(-1, 2)
    out = np.zeros(len(rule.nodes))
    if len(pts) == 0:
        return out
    r = hyperball_radii(pts, eta, params)
    if not _separated(pts, 2 * r):
        warnings.warn("the hyperballs T_j(2 r_j) overlap", RuntimeWarning)
    for a, rj in zip(pts, r):
        inside = pseudo_distance(a[None, :], rule.nodes) < 2 * rj
        out[inside] += rj ** -4 / rho(a)
    return out


def hyperball_measure(A, eta, params, base_rule):
    """The same measure discretized on pseudo-ball rules of each T_j(2 r_j):
    an AtomicMeasure ready for carleson_constant, plus the ratios
    nu_2(T_j(2 r_j)) / (r_j^4 rho(a_j)^3)."""
    if params.n != 2:
        raise ValueError("the density is defined on the ball of C^2")
    pts = np.asarray(getattr(A, "points", A), dtype=np.complex128).reshape(-1, 2)
    if len(pts) == 0:
        return AtomicMeasure.empty(2), np.zeros(0)
    r = hyperball_radii(pts, eta, params)
    if not _separated(pts, 2 * r):
        warnings.warn("the hyperballs T_j(2 r_j) overlap", RuntimeWarning)
    nodes, masses, ratios = [], [], []
    for a, rj in zip(pts, r):
        rule = pseudo_ball_rule(a, 2 * rj, base_rule)
        vol = float(np.sum(rule.weights))
        nodes.append(rule.nodes)
        masses.append(rule.weights * rj ** -4 / rho(a))
        ratios.append(vol / (rj ** 4 * rho(a) ** 3))
    return AtomicMeasure(np.vstack(nodes), np.concatenate(masses)), np.array(ratios)
