"""Compiled inner loops with event counting.

All kernels work on ``complex128`` arrays. When ``real`` is set the data is
assumed to have zero imaginary parts and every operation is charged as its
real-valued counterpart, which is how the real-embedded baseline is costed.
Kernels mutate their array arguments in place.
"""

import numpy as np
from numba import njit

from .costs import (
    ABS2, CADD, CDIVR, CMP, CMUL, CMULR, RADD, RDIV, RMUL, ROUND, RSQRT,
    R_GSO, R_LOOP, R_PHASE, R_QR, R_SIZE, R_SWAP,
)

# Layout of the per-reduction statistics vector.
ST_SWAPS, ST_SIZE_REDUCE, ST_L13_EVAL, ST_L13_PASS, ST_L22_EVAL, ST_L22_PASS, ST_ITER = range(7)
N_STATS = 7


@njit(cache=True)
def round_half_away(x):
    r = np.floor(abs(x))
    if abs(x) - r >= 0.5:
        r += 1.0
    return r if x >= 0 else -r


@njit(cache=True)
def cround(z):
    return complex(round_half_away(z.real), round_half_away(z.imag))


@njit(cache=True)
def abs2(z):
    return z.real * z.real + z.imag * z.imag


@njit(cache=True)
def _charge(counts, region, real, cevent, revent, times):
    counts[region, revent if real else cevent] += times


@njit(cache=True)
def gso_kernel(B, mu, hn, counts, real):
    m, n = B.shape
    for j in range(n):
        s = 0.0
        for r in range(m):
            s += abs2(B[r, j])
        hn[j] = s
    _charge(counts, R_GSO, real, ABS2, RMUL, m * n)
    counts[R_GSO, RADD] += (m - 1) * n
    mu[:, :] = 0.0
    for j in range(n):
        for i in range(j + 1, n):
            acc = 0j
            for r in range(m):
                acc += np.conj(B[r, j]) * B[r, i]
            for k in range(j):
                acc -= np.conj(mu[j, k]) * mu[i, k] * hn[k]
            # an exactly dependent column leaves hn[j] == 0; the caller reports the rank error
            mu[i, j] = acc / hn[j] if hn[j] != 0.0 else 0j
            hn[i] -= abs2(mu[i, j]) * hn[j]
            _charge(counts, R_GSO, real, CMUL, RMUL, m + j)
            _charge(counts, R_GSO, real, CMULR, RMUL, j)
            _charge(counts, R_GSO, real, CADD, RADD, m - 1 + j)
            _charge(counts, R_GSO, real, CDIVR, RDIV, 1)
            _charge(counts, R_GSO, real, ABS2, RMUL, 1)
            counts[R_GSO, RMUL] += 1
            counts[R_GSO, RADD] += 1


@njit(cache=True)
def size_reduce_kernel(B, U, mu, k, j, counts, real):
    """h_k -= c h_j, u_k -= c u_j, mu_kl -= c mu_jl (l <= j) with c = round(mu_kj)."""
    m = B.shape[0]
    n = U.shape[0]
    c = cround(mu[k, j])
    for r in range(m):
        B[r, k] -= c * B[r, j]
    for r in range(n):
        U[r, k] -= c * U[r, j]
    for l in range(j):
        mu[k, l] -= c * mu[j, l]
    mu[k, j] -= c
    counts[R_SIZE, ROUND] += 1
    _charge(counts, R_SIZE, real, CMUL, RMUL, m + n + j)
    _charge(counts, R_SIZE, real, CADD, RADD, m + n + j + 1)


@njit(cache=True)
def swap_update_kernel(B, U, mu, hn, k, counts, real):
    """Swap columns k-1, k and update (mu, hn) without re-orthogonalizing."""
    m = B.shape[0]
    n = U.shape[0]
    for r in range(m):
        t = B[r, k - 1]
        B[r, k - 1] = B[r, k]
        B[r, k] = t
    for r in range(n):
        t = U[r, k - 1]
        U[r, k - 1] = U[r, k]
        U[r, k] = t
    mkk = mu[k, k - 1]
    h_prev = hn[k - 1]
    h_cur = hn[k]
    h_new = h_cur + abs2(mkk) * h_prev
    ratio_prev = h_prev / h_new
    mu_new = np.conj(mkk) * ratio_prev
    hn[k] = h_cur * ratio_prev
    hn[k - 1] = h_new
    mu[k, k - 1] = mu_new
    ratio_cur = h_cur / h_new
    for i in range(k + 1, n):
        t_prev = mu[i, k - 1]
        t_cur = mu[i, k]
        mu[i, k - 1] = t_prev * mu_new + t_cur * ratio_cur
        mu[i, k] = t_prev - t_cur * mkk
    for j in range(k - 1):
        t = mu[k - 1, j]
        mu[k - 1, j] = mu[k, j]
        mu[k, j] = t
    tail = n - k - 1
    _charge(counts, R_SWAP, real, ABS2, RMUL, 1)
    counts[R_SWAP, RMUL] += 2
    counts[R_SWAP, RADD] += 1
    counts[R_SWAP, RDIV] += 2
    _charge(counts, R_SWAP, real, CMULR, RMUL, 1 + tail)
    _charge(counts, R_SWAP, real, CMUL, RMUL, 2 * tail)
    _charge(counts, R_SWAP, real, CADD, RADD, 2 * tail)


@njit(cache=True)
def lovasz_violated(mu, hn, k, delta, counts, real):
    _charge(counts, R_LOOP, real, ABS2, RMUL, 1)
    counts[R_LOOP, RADD] += 1
    counts[R_LOOP, RMUL] += 1
    counts[R_LOOP, CMP] += 1
    return hn[k] < (delta - abs2(mu[k, k - 1])) * hn[k - 1]


@njit(cache=True)
def needs_size_reduce(z, counts):
    counts[R_LOOP, CMP] += 1
    return abs(z.real) > 0.5 or abs(z.imag) > 0.5


@njit(cache=True)
def _record(events, stats, kind, k, j):
    i = stats[ST_SWAPS] + stats[ST_SIZE_REDUCE]
    if i < events.shape[0]:
        events[i, 0] = kind
        events[i, 1] = k
        events[i, 2] = j


@njit(cache=True)
def clll_kernel(B, U, mu, hn, delta, real, counts, stats, log_trace, max_iter, events):
    """Main reduction loop. Returns the number of swaps, or -1 if the cap is hit.

    Steps are appended to ``events`` as (0, k, j) for a size reduction and
    (1, k, 0) for a swap while it has room.
    """
    n = B.shape[1]
    log_d = 0.0
    for i in range(n):
        log_d += (n - i) * np.log(hn[i])
    k = 1
    nswap = 0
    while k < n:
        stats[ST_ITER] += 1
        if stats[ST_ITER] > max_iter:
            return -1
        stats[ST_L13_EVAL] += 1
        if needs_size_reduce(mu[k, k - 1], counts):
            stats[ST_L13_PASS] += 1
            _record(events, stats, 0, k, k - 1)
            stats[ST_SIZE_REDUCE] += 1
            size_reduce_kernel(B, U, mu, k, k - 1, counts, real)
        if lovasz_violated(mu, hn, k, delta, counts, real):
            h_old = hn[k - 1]
            _record(events, stats, 1, k, 0)
            swap_update_kernel(B, U, mu, hn, k, counts, real)
            log_d += np.log(hn[k - 1] / h_old)
            log_trace[nswap] = log_d
            nswap += 1
            stats[ST_SWAPS] += 1
            k = max(1, k - 1)
        else:
            for j in range(k - 2, -1, -1):
                stats[ST_L22_EVAL] += 1
                if needs_size_reduce(mu[k, j], counts):
                    stats[ST_L22_PASS] += 1
                    _record(events, stats, 0, k, j)
                    stats[ST_SIZE_REDUCE] += 1
                    size_reduce_kernel(B, U, mu, k, j, counts, real)
            k += 1
    return nswap


@njit(cache=True)
def _apply_reflector(X, V, k, c, scale):
    """X[k:, c] -= scale * v (v^H X[k:, c]) for v = V[k:, k]."""
    m = X.shape[0]
    w = 0j
    for r in range(k, m):
        w += np.conj(V[r, k]) * X[r, c]
    w *= scale
    for r in range(k, m):
        X[r, c] -= w * V[r, k]


@njit(cache=True)
def householder_qr_kernel(A, Q, R, counts, real):
    """Householder QR with explicitly formed Q and real non-negative diag(R).

    ``A`` (m x n) is overwritten. Each reflector is H = I - tau v v^H with
    v[0] = 1, chosen so that H^H x = ||x|| e_1. Q is accumulated by applying
    every reflector to all n columns of the identity. When m == n the last
    column needs no reflector; its diagonal entry is made real by a unit
    phase rotation that is charged to the separate ``phase_fix`` region.
    """
    m, n = A.shape
    V = np.zeros((m, n), dtype=np.complex128)
    taus = np.zeros(n, dtype=np.complex128)
    for k in range(n):
        L = m - k
        V[k, k] = 1.0
        if L == 1:
            R[k, k] = A[k, k]
            continue
        alpha = A[k, k]
        tail = 0.0
        for r in range(k + 1, m):
            tail += abs2(A[r, k])
        beta = np.sqrt(abs2(alpha) + tail)
        _charge(counts, R_QR, real, ABS2, RMUL, L)
        counts[R_QR, RADD] += L - 1
        counts[R_QR, RSQRT] += 1
        if tail == 0.0 and alpha.imag == 0.0 and alpha.real >= 0.0:
            R[k, k] = beta
            continue
        # alpha - beta without cancellation when Re(alpha) > 0
        if alpha.real > 0.0:
            dr = -(alpha.imag * alpha.imag + tail) / (alpha.real + beta)
            counts[R_QR, RMUL] += 1
            counts[R_QR, RADD] += 2
            counts[R_QR, RDIV] += 1
        else:
            dr = alpha.real - beta
            counts[R_QR, RADD] += 1
        denom = complex(dr, alpha.imag)
        tau = -denom / beta
        inv = 1.0 / denom
        _charge(counts, R_QR, real, CDIVR, RDIV, 1)
        if real:
            counts[R_QR, RDIV] += 1
        else:
            counts[R_QR, ABS2] += 1
            counts[R_QR, RDIV] += 1
            counts[R_QR, CMULR] += 1
        for r in range(k + 1, m):
            V[r, k] = A[r, k] * inv
        _charge(counts, R_QR, real, CMUL, RMUL, L - 1)
        taus[k] = tau
        ctau = np.conj(tau)
        for c in range(k + 1, n):
            _apply_reflector(A, V, k, c, ctau)
        _charge(counts, R_QR, real, CMUL, RMUL, (n - k - 1) * (2 * L + 1))
        _charge(counts, R_QR, real, CADD, RADD, (n - k - 1) * (2 * L - 1))
        R[k, k] = beta
    for k in range(n):
        for c in range(k + 1, n):
            R[k, c] = A[k, c]
    Q[:, :] = 0.0
    for i in range(n):
        Q[i, i] = 1.0
    for k in range(n - 1, -1, -1):
        if taus[k] == 0:
            continue
        L = m - k
        for c in range(n):
            _apply_reflector(Q, V, k, c, taus[k])
        _charge(counts, R_QR, real, CMUL, RMUL, n * (2 * L + 1))
        _charge(counts, R_QR, real, CADD, RADD, n * (2 * L - 1))
    if m == n and n > 0:
        d = R[n - 1, n - 1]
        if d.imag != 0.0:
            a = np.sqrt(abs2(d))
            ph = d / a
            for r in range(m):
                Q[r, n - 1] *= ph
            R[n - 1, n - 1] = a
            counts[R_PHASE, ABS2] += 1
            counts[R_PHASE, RSQRT] += 1
            counts[R_PHASE, CDIVR] += 1
            counts[R_PHASE, CMUL] += m
        elif d.real < 0.0:
            # sign flips are free
            for r in range(m):
                Q[r, n - 1] = -Q[r, n - 1]
            R[n - 1, n - 1] = -d


@njit(cache=True)
def iteration_cap_kernel(B, hn, cap_constant):
    m, n = B.shape
    big = 0.0
    for j in range(n):
        s = 0.0
        for r in range(m):
            s += abs2(B[r, j])
        big = max(big, s)
    lam = hn.min()
    ratio = 1.0
    if lam > 0.0:
        ratio = max(1.0, 0.5 * np.log2(big / lam))
    return int(np.ceil(cap_constant * n * n * ratio)) + n


@njit(cache=True)
def clll_batch_kernel(Hs, delta, real, cap_constant, counts, stats, reduced, unimodular,
                      qs, rs, qr_counts):
    """Reduce every basis in ``Hs`` (T x m x n) and QR-factor the result.

    Per-trial statistics go to ``stats[t]``; ``stats[t, ST_SWAPS] = -1``
    marks a trial that hit its iteration cap. Reduction events accumulate in
    ``counts`` and QR events in ``qr_counts``.
    """
    T, m, n = Hs.shape
    mu = np.zeros((n, n), dtype=np.complex128)
    hn = np.zeros(n)
    log_trace = np.zeros(1)
    events = np.zeros((0, 3), dtype=np.int64)
    A = np.zeros((m, n), dtype=np.complex128)
    for t in range(T):
        B = Hs[t].copy()
        U = np.eye(n, dtype=np.complex128)
        gso_kernel(B, mu, hn, counts, real)
        cap = iteration_cap_kernel(B, hn, cap_constant)
        if log_trace.shape[0] < cap + 1:
            log_trace = np.zeros(cap + 1)
        nswap = clll_kernel(B, U, mu, hn, delta, real, counts, stats[t], log_trace, cap, events)
        if nswap < 0:
            stats[t, ST_SWAPS] = -1
        reduced[t] = B
        unimodular[t] = U
        A[:, :] = B
        householder_qr_kernel(A, qs[t], rs[t], qr_counts, real)


@njit(cache=True)
def qr_batch_kernel(Hs, real, qs, rs, counts):
    T, m, n = Hs.shape
    A = np.zeros((m, n), dtype=np.complex128)
    for t in range(T):
        A[:, :] = Hs[t]
        householder_qr_kernel(A, qs[t], rs[t], counts, real)
