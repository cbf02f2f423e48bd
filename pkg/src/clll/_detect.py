"""Compiled per-trial detector loops.

Slicing ``mode`` selects the decision device: ``SLICE_QAM`` snaps to the
nearest odd-integer grid point inside ``[-qmax, qmax]`` per component,
``SLICE_INT`` rounds to the nearest Gaussian integer without clipping (used
inside lattice-reduction-aided loops).
"""

import numpy as np
from numba import njit

from ._kernels import _charge, abs2, cround
from .costs import CADD, CDIVR, CMUL, R_PROC, RADD, RDIV, RMUL

SLICE_QAM, SLICE_INT = 0, 1


@njit(cache=True)
def slice_level(v, qmax):
    lvl = 2.0 * np.floor(0.5 * v) + 1.0
    if lvl > qmax:
        return qmax
    if lvl < -qmax:
        return -qmax
    return lvl


@njit(cache=True)
def slice_qam(z, qmax):
    return complex(slice_level(z.real, qmax), slice_level(z.imag, qmax))


@njit(cache=True)
def _decide(z, mode, qmax):
    if mode == SLICE_QAM:
        return slice_qam(z, qmax)
    return cround(z)


@njit(cache=True)
def apply_qh(Q, y, z, counts, real):
    """z = Q^H y."""
    m, n = Q.shape
    for i in range(n):
        acc = 0j
        for r in range(m):
            acc += np.conj(Q[r, i]) * y[r]
        z[i] = acc
    _charge(counts, R_PROC, real, CMUL, RMUL, n * m)
    _charge(counts, R_PROC, real, CADD, RADD, n * (m - 1))


@njit(cache=True)
def back_substitute(R, z, x_tilde, x_hat, mode, qmax, sequential, counts, real):
    """Solve R x = z from the bottom row up.

    With ``sequential`` each layer is decided before it is cancelled from
    the rows above (SIC); otherwise the unconstrained solution is used
    throughout and decided at the end (ZF). ``diag(R)`` must be real.
    """
    n = R.shape[0]
    for i in range(n - 1, -1, -1):
        s = z[i]
        for j in range(i + 1, n):
            s -= R[i, j] * (x_hat[j] if sequential else x_tilde[j])
        x_tilde[i] = s / R[i, i].real
        if sequential:
            x_hat[i] = _decide(x_tilde[i], mode, qmax)
    if not sequential:
        for i in range(n):
            x_hat[i] = _decide(x_tilde[i], mode, qmax)
    pairs = n * (n - 1) // 2
    _charge(counts, R_PROC, real, CMUL, RMUL, pairs)
    _charge(counts, R_PROC, real, CADD, RADD, pairs)
    _charge(counts, R_PROC, real, CDIVR, RDIV, n)


@njit(cache=True)
def linear_batch(Qs, Rs, Y, mode, qmax, sequential, real, x_tilde, x_hat, counts):
    T, m, n = Qs.shape
    z = np.zeros(n, dtype=np.complex128)
    for t in range(T):
        apply_qh(Qs[t], Y[t], z, counts, real)
        back_substitute(Rs[t], z, x_tilde[t], x_hat[t], mode, qmax, sequential, counts, real)


@njit(cache=True)
def ml_branch_and_bound(R, z, points, out):
    """Exact minimiser of ||z - R x||^2 over x in points^n (R upper triangular).

    Depth-first search from the last layer with candidates visited in order of
    increasing layer distance; a branch is abandoned as soon as its partial
    distance reaches the best complete distance found so far. Returns the
    best squared distance and writes symbol indices into ``out``.
    """
    n = R.shape[0]
    M = points.shape[0]
    order = np.zeros((n, M), dtype=np.int64)
    dist = np.zeros((n, M))
    pos = np.zeros(n, dtype=np.int64)
    partial = np.zeros(n + 1)
    x = np.zeros(n, dtype=np.complex128)
    idx = np.zeros(n, dtype=np.int64)
    best = np.inf
    i = n - 1
    _ml_layer(R, z, x, points, i, dist, order)
    while True:
        if pos[i] < M:
            k = order[i, pos[i]]
            pos[i] += 1
            d = partial[i + 1] + dist[i, k]
            if d >= best:
                pos[i] = M
                continue
            x[i] = points[k]
            idx[i] = k
            if i == 0:
                best = d
                out[:] = idx
            else:
                partial[i] = d
                i -= 1
                pos[i] = 0
                _ml_layer(R, z, x, points, i, dist, order)
        else:
            i += 1
            if i == n:
                break
    return best


@njit(cache=True)
def _ml_layer(R, z, x, points, i, dist, order):
    n = R.shape[0]
    c = z[i]
    for j in range(i + 1, n):
        c -= R[i, j] * x[j]
    for k in range(points.shape[0]):
        dist[i, k] = abs2(c - R[i, i] * points[k])
    order[i, :] = np.argsort(dist[i], kind="mergesort")


@njit(cache=True)
def ml_batch(Qs, Rs, Y, points, out):
    T, m, n = Qs.shape
    z = np.zeros(n, dtype=np.complex128)
    for t in range(T):
        for i in range(n):
            acc = 0j
            for r in range(m):
                acc += np.conj(Qs[t, r, i]) * Y[t, r]
            z[i] = acc
        ml_branch_and_bound(Rs[t], z, points, out[t])


@njit(cache=True)
def vblast_one(H, y, qmax, x_hat):
    """Ordered SIC: at each layer null the stream with the smallest
    pseudo-inverse row norm (largest post-detection SNR), decide, cancel."""
    m, n = H.shape
    active = np.ones(n, dtype=np.bool_)
    r = y.copy()
    for _ in range(n):
        cols = np.flatnonzero(active)
        sub = np.ascontiguousarray(H[:, cols])
        G = np.linalg.pinv(sub)
        best_row = 0
        best_norm = np.inf
        for a in range(cols.shape[0]):
            s = 0.0
            for b in range(m):
                s += abs2(G[a, b])
            if s < best_norm:
                best_norm = s
                best_row = a
        est = 0j
        for b in range(m):
            est += G[best_row, b] * r[b]
        k = cols[best_row]
        x_hat[k] = slice_qam(est, qmax)
        for b in range(m):
            r[b] -= H[b, k] * x_hat[k]
        active[k] = False


@njit(cache=True)
def vblast_batch(Hs, Y, qmax, out):
    for t in range(Hs.shape[0]):
        vblast_one(Hs[t], Y[t], qmax, out[t])

