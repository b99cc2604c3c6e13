"""Hot numeric loops, in two interchangeable flavours.

Every public function here exists as a numba ``@njit`` kernel and as a
pure-numpy implementation with the same signature.  The numba path is used
when numba imports and ``BALLINTERP_NUMBA`` is not set to ``0``; otherwise the
numpy path is used.  Both are importable explicitly from :data:`NUMPY` and
:data:`NUMBA` for benchmarking and cross-checking.

All kernels take complex128 arrays with points stored row-wise, shape (m, n).
"""
import os
import types

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

# |u| below this uses the series of ((1-u)^-s - 1)/u
SERIES_CUTOFF = 1e-6
# points per chunk for the numpy path; keeps temporaries around 64 MB
_CHUNK = 1 << 22


def _enabled():
    flag = os.environ.get("BALLINTERP_NUMBA", "1").strip().lower()
    return HAS_NUMBA and flag not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_cpow_neg(x, s):
    """x**(-s) on the principal branch, exact repeated products for integer s."""
    if float(s).is_integer() and 0 < s <= 64:
        k = int(s)
        out = np.ones_like(x)
        base = x.copy()
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return 1.0 / out
    return np.exp(-s * np.log(x))


def _np_moebius(a, Z):
    a = np.asarray(a, dtype=np.complex128)
    Z = np.asarray(Z, dtype=np.complex128)
    aa = float(np.vdot(a, a).real)
    s = np.sqrt(1.0 - aa)
    u = Z @ a.conj()
    num = a[None, :] * (1.0 - u / (1.0 + s))[:, None] - s * Z
    return num / (1.0 - u)[:, None]


def _np_kernel_block(Z, W, vals, s):
    """out[i] = sum_j (1 - <Z_i, W_j>)^-s vals[j]; also min Re(1 - <Z_i, W_j>)."""
    Z = np.asarray(Z, dtype=np.complex128)
    W = np.asarray(W, dtype=np.complex128)
    vals = np.asarray(vals, dtype=np.complex128)
    squeeze = vals.ndim == 1
    V = vals[:, None] if squeeze else vals
    out = np.zeros((Z.shape[0], V.shape[1]), dtype=np.complex128)
    min_re = np.inf
    step = max(1, _CHUNK // max(1, Z.shape[0]))
    Wc = W.conj()
    for lo in range(0, W.shape[0], step):
        one_minus = 1.0 - Z @ Wc[lo:lo + step].T
        if one_minus.size:
            min_re = min(min_re, float(one_minus.real.min()))
        out += _np_cpow_neg(one_minus, s) @ V[lo:lo + step]
    return (out[:, 0] if squeeze else out), min_re


def _np_gleason_block(Z, W, vals, s):
    """out[i, r] = sum_j ((1-u)^-s - 1)/u * vals[j, r] with u = <Z_i, W_j>."""
    Z = np.asarray(Z, dtype=np.complex128)
    W = np.asarray(W, dtype=np.complex128)
    V = np.asarray(vals, dtype=np.complex128)
    out = np.zeros((Z.shape[0], V.shape[1]), dtype=np.complex128)
    min_re = np.inf
    step = max(1, _CHUNK // max(1, Z.shape[0]))
    Wc = W.conj()
    for lo in range(0, W.shape[0], step):
        u = Z @ Wc[lo:lo + step].T
        one_minus = 1.0 - u
        if one_minus.size:
            min_re = min(min_re, float(one_minus.real.min()))
        small = np.abs(u) < SERIES_CUTOFF
        safe_u = np.where(small, 1.0, u)
        fac = (_np_cpow_neg(one_minus, s) - 1.0) / safe_u
        fac = np.where(small, s + 0.5 * s * (s + 1.0) * u, fac)
        out += fac @ V[lo:lo + step]
    return out, min_re


def _np_poly_eval(Z, exps, coefs):
    Z = np.asarray(Z, dtype=np.complex128)
    m, n = Z.shape
    out = np.zeros(m, dtype=np.complex128)
    if len(coefs) == 0:
        return out
    dmax = int(exps.max())
    # powers[d][:, e] = Z[:, d] ** e
    powers = []
    for d in range(n):
        P = np.empty((m, dmax + 1), dtype=np.complex128)
        P[:, 0] = 1.0
        for e in range(1, dmax + 1):
            P[:, e] = P[:, e - 1] * Z[:, d]
        powers.append(P)
    step = max(1, _CHUNK // max(1, len(coefs)))
    for lo in range(0, m, step):
        block = np.ones((min(step, m - lo), len(coefs)), dtype=np.complex128)
        for d in range(n):
            block *= powers[d][lo:lo + step][:, exps[:, d]]
        out[lo:lo + step] = block @ coefs
    return out


def _np_window_counts(dist, masses, t):
    """mass[i, j] = sum of masses with dist[i, k] <= t[j] (closed windows)."""
    order = np.argsort(dist, axis=1, kind="stable")
    ds = np.take_along_axis(dist, order, axis=1)
    cm = np.concatenate([np.zeros((dist.shape[0], 1)),
                         np.cumsum(masses[order], axis=1)], axis=1)
    out = np.empty((dist.shape[0], len(t)))
    for i in range(dist.shape[0]):
        idx = np.searchsorted(ds[i], t, side="right")
        out[i] = cm[i, idx]
    return out


NUMPY = types.SimpleNamespace(
    name="numpy",
    moebius=_np_moebius,
    kernel_block=_np_kernel_block,
    gleason_block=_np_gleason_block,
    poly_eval=_np_poly_eval,
    window_counts=_np_window_counts,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, fastmath=True, inline="always")
    def _nb_cpow_neg(xr, xi, s, int_s):
        """(xr + i xi)^(-s) as a (re, im) pair."""
        if int_s > 0:
            orr, oi = 1.0, 0.0
            br, bi = xr, xi
            k = int_s
            while k:
                if k & 1:
                    orr, oi = orr * br - oi * bi, orr * bi + oi * br
                k >>= 1
                if k:
                    br, bi = br * br - bi * bi, 2.0 * br * bi
            d = orr * orr + oi * oi
            return orr / d, -oi / d
        lr = 0.5 * np.log(xr * xr + xi * xi)
        th = np.arctan2(xi, xr)
        mag = np.exp(-s * lr)
        return mag * np.cos(-s * th), mag * np.sin(-s * th)

    @njit(cache=True)
    def _nb_moebius(a, Z):
        m, n = Z.shape
        aa = 0.0
        for k in range(n):
            aa += a[k].real ** 2 + a[k].imag ** 2
        s = np.sqrt(1.0 - aa)
        out = np.empty((m, n), dtype=np.complex128)
        for i in range(m):
            u = 0.0 + 0.0j
            for k in range(n):
                u += Z[i, k] * np.conj(a[k])
            c = 1.0 - u / (1.0 + s)
            d = 1.0 - u
            for k in range(n):
                out[i, k] = (a[k] * c - s * Z[i, k]) / d
        return out

    @njit(cache=True, fastmath=True)
    def _nb_kernel_block_impl(Z, W, V, s, int_s):
        m, n = Z.shape
        N = W.shape[0]
        r = V.shape[1]
        out = np.zeros((m, r), dtype=np.complex128)
        min_re = np.inf
        Zr = Z.real.copy()
        Zi = Z.imag.copy()
        Wr = W.real.copy()
        Wi = W.imag.copy()
        for i in range(m):
            for j in range(N):
                ur = 0.0
                ui = 0.0
                for k in range(n):
                    # Z conj(W)
                    ur += Zr[i, k] * Wr[j, k] + Zi[i, k] * Wi[j, k]
                    ui += Zi[i, k] * Wr[j, k] - Zr[i, k] * Wi[j, k]
                omr = 1.0 - ur
                if omr < min_re:
                    min_re = omr
                pr, pi = _nb_cpow_neg(omr, -ui, s, int_s)
                p = complex(pr, pi)
                for q in range(r):
                    out[i, q] += p * V[j, q]
        return out, min_re

    @njit(cache=True, fastmath=True)
    def _nb_gleason_block_impl(Z, W, V, s, int_s, cutoff):
        m, n = Z.shape
        N = W.shape[0]
        r = V.shape[1]
        out = np.zeros((m, r), dtype=np.complex128)
        min_re = np.inf
        Zr = Z.real.copy()
        Zi = Z.imag.copy()
        Wr = W.real.copy()
        Wi = W.imag.copy()
        c2 = cutoff * cutoff
        for i in range(m):
            for j in range(N):
                ur = 0.0
                ui = 0.0
                for k in range(n):
                    ur += Zr[i, k] * Wr[j, k] + Zi[i, k] * Wi[j, k]
                    ui += Zi[i, k] * Wr[j, k] - Zr[i, k] * Wi[j, k]
                omr = 1.0 - ur
                if omr < min_re:
                    min_re = omr
                uu = ur * ur + ui * ui
                if uu < c2:
                    h = 0.5 * s * (s + 1.0)
                    fr = s + h * ur
                    fi = h * ui
                else:
                    pr, pi = _nb_cpow_neg(omr, -ui, s, int_s)
                    pr -= 1.0
                    # (pr + i pi) / u
                    fr = (pr * ur + pi * ui) / uu
                    fi = (pi * ur - pr * ui) / uu
                fac = complex(fr, fi)
                for q in range(r):
                    out[i, q] += fac * V[j, q]
        return out, min_re

    @njit(cache=True)
    def _nb_poly_eval_impl(Z, exps, coefs):
        m, n = Z.shape
        K = coefs.shape[0]
        dmax = 0
        for q in range(K):
            for d in range(n):
                if exps[q, d] > dmax:
                    dmax = exps[q, d]
        out = np.zeros(m, dtype=np.complex128)
        P = np.empty((n, dmax + 1), dtype=np.complex128)
        for i in range(m):
            for d in range(n):
                P[d, 0] = 1.0
                for e in range(1, dmax + 1):
                    P[d, e] = P[d, e - 1] * Z[i, d]
            acc = 0.0 + 0.0j
            for q in range(K):
                term = coefs[q]
                for d in range(n):
                    term *= P[d, exps[q, d]]
                acc += term
            out[i] = acc
        return out

    @njit(cache=True)
    def _nb_window_counts(dist, masses, t):
        G, K = dist.shape
        out = np.zeros((G, t.shape[0]))
        for i in range(G):
            for j in range(t.shape[0]):
                acc = 0.0
                for k in range(K):
                    if dist[i, k] <= t[j]:
                        acc += masses[k]
                out[i, j] = acc
        return out

    def _int_exponent(s):
        return int(s) if float(s).is_integer() and 0 < s <= 64 else 0

    def _nb_kernel_block(Z, W, vals, s):
        vals = np.asarray(vals, dtype=np.complex128)
        squeeze = vals.ndim == 1
        V = np.ascontiguousarray(vals[:, None] if squeeze else vals)
        out, min_re = _nb_kernel_block_impl(
            np.ascontiguousarray(Z, dtype=np.complex128),
            np.ascontiguousarray(W, dtype=np.complex128),
            V, float(s), _int_exponent(s))
        return (out[:, 0] if squeeze else out), float(min_re)

    def _nb_gleason_block(Z, W, vals, s):
        out, min_re = _nb_gleason_block_impl(
            np.ascontiguousarray(Z, dtype=np.complex128),
            np.ascontiguousarray(W, dtype=np.complex128),
            np.ascontiguousarray(vals, dtype=np.complex128),
            float(s), _int_exponent(s), SERIES_CUTOFF)
        return out, float(min_re)

    def _nb_poly_eval(Z, exps, coefs):
        if len(coefs) == 0:
            return np.zeros(np.asarray(Z).shape[0], dtype=np.complex128)
        return _nb_poly_eval_impl(
            np.ascontiguousarray(Z, dtype=np.complex128),
            np.ascontiguousarray(exps, dtype=np.int64),
            np.ascontiguousarray(coefs, dtype=np.complex128))

    def _nb_moebius_wrap(a, Z):
        return _nb_moebius(np.ascontiguousarray(a, dtype=np.complex128),
                           np.ascontiguousarray(Z, dtype=np.complex128))

    def _nb_window_wrap(dist, masses, t):
        return _nb_window_counts(np.ascontiguousarray(dist, dtype=np.float64),
                                 np.ascontiguousarray(masses, dtype=np.float64),
                                 np.ascontiguousarray(t, dtype=np.float64))

    NUMBA = types.SimpleNamespace(
        name="numba",
        moebius=_nb_moebius_wrap,
        kernel_block=_nb_kernel_block,
        gleason_block=_nb_gleason_block,
        poly_eval=_nb_poly_eval,
        window_counts=_nb_window_wrap,
    )
else:  # pragma: no cover
    NUMBA = None


def backend():
    """The active kernel namespace, re-read from the environment each call."""
    return NUMBA if _enabled() else NUMPY


def kernel_block(Z, W, vals, s):
    return backend().kernel_block(Z, W, vals, s)


def gleason_block(Z, W, vals, s):
    return backend().gleason_block(Z, W, vals, s)


def poly_eval(Z, exps, coefs):
    return backend().poly_eval(Z, exps, coefs)


def moebius_rows(a, Z):
    return backend().moebius(a, Z)


def window_counts(dist, masses, t):
    return backend().window_counts(dist, masses, t)
