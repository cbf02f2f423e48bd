"""MIMO channel model, square QAM and the detector family.

The transmitted vector ``x`` has entries from an M-QAM alphabet whose points
are ``a + bi`` with odd ``a, b``. Every such alphabet is an affine image of
the Gaussian integers, ``x = 2 z + c`` with ``c = -(sqrt(M) - 1)(1 + i)``,
which is what lets lattice-reduction-aided detectors work in the integer
domain and map back at the end.

All detectors return a :class:`DetectionResult` whose tally records the QR
factorization they needed (phase ``qr``) and the per-vector work (phase
``processing``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _detect
from .costs import (CADD, CMUL, CMULR, CostModel, FlopTally, R_PROC, RADD, RMUL,
                    new_counts)
from .linalg import as_matrix, pseudo_inverse, qr_decompose, real_embed, real_embed_vector
from .reduction import ReductionOutput

__all__ = [
    "Constellation",
    "ChannelInstance",
    "DetectionResult",
    "MLGuardError",
    "ML_MAX_CANDIDATES",
    "sample_channel",
    "noise_var_for_snr",
    "qam_map",
    "qam_demap",
    "detect_zf",
    "detect_sic",
    "detect_ml",
    "detect_ml_fast",
    "lr_detect",
    "charge_lr_overhead",
]

ML_MAX_CANDIDATES = 10**6
SUPPORTED_ORDERS = (4, 16, 64, 256)


class MLGuardError(ValueError):
    """Exhaustive search over M**n candidates was refused as too large."""


@dataclass(frozen=True)
class Constellation:
    """Square M-QAM with odd-integer coordinates.

    Point ``k`` has real level index ``k // side`` and imaginary level index
    ``k % side``, so sorting by point index is lexicographic in the levels.
    """

    order: int

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"QAM order must be one of {SUPPORTED_ORDERS}, got {self.order}")

    @property
    def side(self) -> int:
        return int(round(np.sqrt(self.order)))

    @property
    def qmax(self) -> int:
        return self.side - 1

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def levels(self) -> np.ndarray:
        return np.arange(-self.qmax, self.qmax + 1, 2, dtype=float)

    @property
    def points(self) -> np.ndarray:
        lv = self.levels
        return (lv[:, None] + 1j * lv[None, :]).ravel()

    @property
    def avg_energy(self) -> float:
        return 2.0 * (self.order - 1) / 3.0

    @property
    def offset(self) -> complex:
        """``c`` in ``x = 2 z + c``."""
        return -self.qmax * (1 + 1j)

    def to_lattice(self, x):
        return (np.asarray(x) - self.offset) / 2

    def from_lattice(self, z):
        return 2 * np.asarray(z) + self.offset

    def slice(self, x) -> np.ndarray:
        """Nearest constellation point per component (hard limiting)."""
        x = np.asarray(x, dtype=np.complex128)
        q = self.qmax

        def _axis(v):
            return np.clip(2 * np.floor(v / 2) + 1, -q, q)

        return _axis(x.real) + 1j * _axis(x.imag)

    def indices(self, x) -> np.ndarray:
        x = np.asarray(x)
        ia = np.rint((x.real + self.qmax) / 2).astype(np.int64)
        ib = np.rint((x.imag + self.qmax) / 2).astype(np.int64)
        return ia * self.side + ib


@dataclass(frozen=True)
class ChannelInstance:
    """``y = H x + w`` with i.i.d. CN(0, 1) gains and ``w ~ CN(0, noise_var)``.

    ``noise_var`` is the total noise variance per complex receive entry, i.e.
    ``2 sigma^2``.
    """

    h: np.ndarray
    noise_var: float
    seed: int | None = None

    def __post_init__(self):
        m, n = self.h.shape
        if m < n:
            raise ValueError(f"need at least as many receive as transmit antennas, got {m}x{n}")
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.h.shape

    def transmit(self, x, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        m = self.h.shape[0]
        w = np.sqrt(self.noise_var / 2) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
        return self.h @ np.asarray(x) + w


@dataclass
class DetectionResult:
    symbols: np.ndarray
    pre_clip: np.ndarray | None = None
    flops: FlopTally = field(default_factory=FlopTally)


def _rng_and_seed(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def sample_channel(m: int, n: int, noise_var: float, rng=None) -> ChannelInstance:
    """Draw an ``m x n`` channel with independent CN(0, 1) entries.

    ``rng`` may be a seed or a :class:`numpy.random.Generator`.
    """
    if not m >= n >= 1:
        raise ValueError(f"need m >= n >= 1, got m={m}, n={n}")
    gen, seed = _rng_and_seed(rng)
    h = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) / np.sqrt(2)
    return ChannelInstance(h, float(noise_var), seed)


def noise_var_for_snr(snr_db, n: int, constellation: Constellation):
    """``2 sigma^2`` such that ``SNR = n Es / (2 sigma^2)``."""
    return n * constellation.avg_energy / 10 ** (np.asarray(snr_db, dtype=float) / 10)


# -- bit labeling ----------------------------------------------------------------

def _gray(i):
    return i ^ (i >> 1)


def _gray_inverse(g):
    g = np.array(g, dtype=np.int64, copy=True)
    shift = g >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


def _bits_to_int(bits):
    w = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ w


def _int_to_bits(v, width):
    return (np.asarray(v)[..., None] >> np.arange(width - 1, -1, -1)) & 1


def qam_map(bits, constellation: Constellation, n: int | None = None) -> np.ndarray:
    """Gray-labelled mapping of bit blocks to symbols.

    The last axis of ``bits`` is consumed ``bits_per_symbol`` bits at a time:
    the first half selects the real level, the second half the imaginary
    level, each through a binary-reflected Gray code.
    """
    bits = np.asarray(bits)
    k = constellation.bits_per_symbol
    block = k * (n or 1)
    if bits.ndim == 0 or bits.shape[-1] % block:
        raise ValueError(f"bit count {bits.shape[-1] if bits.ndim else 0} is not a multiple of {block}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b = bits.astype(np.int64).reshape(bits.shape[:-1] + (-1, k))
    h = k // 2
    ia = _gray_inverse(_bits_to_int(b[..., :h]))
    ib = _gray_inverse(_bits_to_int(b[..., h:]))
    lv = constellation.levels
    return lv[ia] + 1j * lv[ib]


def qam_demap(symbols, constellation: Constellation) -> np.ndarray:
    """Inverse of :func:`qam_map` for points of the alphabet."""
    s = np.asarray(symbols)
    k = constellation.bits_per_symbol
    idx = constellation.indices(s)
    if np.any(np.abs(constellation.points[np.clip(idx, 0, constellation.order - 1)] - s) > 1e-9) \
            or np.any((idx < 0) | (idx >= constellation.order)):
        raise ValueError("symbols must be constellation points")
    ia, ib = np.divmod(idx, constellation.side)
    bits = np.concatenate([_int_to_bits(_gray(ia), k // 2), _int_to_bits(_gray(ib), k // 2)],
                          axis=-1)
    return bits.reshape(s.shape[:-1] + (-1,)) if s.ndim else bits.ravel()


# -- detectors -------------------------------------------------------------------

def _channel_matrix(channel) -> np.ndarray:
    h = channel.h if isinstance(channel, ChannelInstance) else channel
    return as_matrix(h, name="channel")


def _linear(R, Q, y, mode, qmax, sequential, counts, real):
    n = R.shape[0]
    z = np.zeros(n, dtype=np.complex128)
    xt = np.zeros(n, dtype=np.complex128)
    xh = np.zeros(n, dtype=np.complex128)
    _detect.apply_qh(Q, np.asarray(y, dtype=np.complex128), z, counts, real)
    _detect.back_substitute(R, z, xt, xh, mode, float(qmax), sequential, counts, real)
    return xt, xh


def detect_zf(channel, y, constellation: Constellation, cost: CostModel | None = None
              ) -> DetectionResult:
    """Zero forcing, ``x~ = H^+ y`` followed by per-component slicing.

    ``H^+ y`` is evaluated as ``R^-1 Q^H y``.
    """
    H = _channel_matrix(channel)
    counts = new_counts()
    Q, R = qr_decompose(H, counts, real=False)
    xt, xh = _linear(R, Q, y, _detect.SLICE_QAM, constellation.qmax, False, counts, False)
    return DetectionResult(xh, xt, FlopTally(counts, cost or CostModel()))


def detect_sic(channel, y, constellation: Constellation, ordering: str = "natural",
               cost: CostModel | None = None) -> DetectionResult:
    """Successive nulling and cancellation.

    ``ordering="natural"`` detects the last stream first using ``H = Q R``.
    ``ordering="vblast"`` picks, at every layer, the undetected stream whose
    pseudo-inverse row has the smallest norm (the largest post-detection SNR).
    """
    H = _channel_matrix(channel)
    counts = new_counts()
    y = np.asarray(y, dtype=np.complex128)
    if ordering == "natural":
        Q, R = qr_decompose(H, counts, real=False)
        xt, xh = _linear(R, Q, y, _detect.SLICE_QAM, constellation.qmax, True, counts, False)
        return DetectionResult(xh, xt, FlopTally(counts, cost or CostModel()))
    if ordering != "vblast":
        raise ValueError(f"unknown ordering {ordering!r}")
    m, n = H.shape
    active = list(range(n))
    r = y.copy()
    xh = np.zeros(n, dtype=np.complex128)
    xt = np.zeros(n, dtype=np.complex128)
    while active:
        G = pseudo_inverse(H[:, active])
        row = int(np.argmin(np.sum(np.abs(G) ** 2, axis=1)))
        k = active.pop(row)
        xt[k] = G[row] @ r
        xh[k] = constellation.slice(xt[k])
        r = r - H[:, k] * xh[k]
    return DetectionResult(xh, xt, FlopTally(counts, cost or CostModel()))


def _candidates(constellation: Constellation, n: int) -> np.ndarray:
    total = constellation.order ** n
    if total > ML_MAX_CANDIDATES:
        raise MLGuardError(f"M^n = {constellation.order}^{n} = {total} exceeds "
                           f"{ML_MAX_CANDIDATES}")
    return constellation.points


def detect_ml(channel, y, constellation: Constellation, cost: CostModel | None = None
              ) -> DetectionResult:
    """Exhaustive maximum-likelihood search over the whole alphabet.

    Candidates are scored in lexicographic order of their symbol indices and
    the first minimiser wins, which makes ties deterministic.
    """
    H = _channel_matrix(channel)
    n = H.shape[1]
    pts = _candidates(constellation, n)
    y = np.asarray(y, dtype=np.complex128)
    best, best_d = None, np.inf
    chunk = max(1, 65536 // max(1, constellation.order))
    for head in _chunks(itertools.product(range(constellation.order), repeat=n), chunk):
        X = pts[np.array(head)]
        d = np.sum(np.abs(y[None, :] - X @ H.T) ** 2, axis=1)
        i = int(np.argmin(d))
        if d[i] < best_d:
            best, best_d = X[i], d[i]
    return DetectionResult(best.copy(), None, FlopTally(new_counts(), cost or CostModel()))


def _chunks(it, size):
    while chunk := list(itertools.islice(it, size)):
        yield chunk


def detect_ml_fast(channel, y, constellation: Constellation) -> DetectionResult:
    """Maximum-likelihood decision via depth-first branch and bound.

    Returns the same minimiser as :func:`detect_ml` (ties aside, which have
    probability zero under continuous noise) while visiting far fewer
    candidates at moderate and high SNR.
    """
    H = _channel_matrix(channel)
    n = H.shape[1]
    pts = _candidates(constellation, n)
    Q, R = qr_decompose(H)
    z = Q.conj().T @ np.asarray(y, dtype=np.complex128)
    idx = np.zeros(n, dtype=np.int64)
    _detect.ml_branch_and_bound(R, z, pts, idx)
    return DetectionResult(pts[idx], None, FlopTally())


def _check_reduction(H, reduction: ReductionOutput):
    Hr = reduction.reduced_basis
    m, n = H.shape
    if Hr.shape == (m, n):
        base, real = H, False
    elif Hr.shape == (2 * m, 2 * n) and reduction.real:
        base, real = real_embed(H), True
    else:
        raise ValueError(f"reduction of shape {Hr.shape} does not match a {m}x{n} channel")
    scale = max(np.linalg.norm(base), 1e-300)
    if np.linalg.norm(base @ reduction.unimodular - Hr) > 1e-8 * scale:
        raise ValueError("reduction does not belong to this channel (H U != H')")
    return real


def charge_lr_overhead(counts, m: int, n: int, real: bool, vectors: int = 1) -> None:
    """Work of the lattice-domain shift, ``U z'`` and the map back, per vector."""
    nz = 2 * n if real else n
    counts[R_PROC, CADD] += vectors * (m * (n - 1) + m + n)
    counts[R_PROC, CMUL] += vectors * m
    counts[R_PROC, CMULR] += vectors * (m + n)
    counts[R_PROC, RMUL if real else CMUL] += vectors * nz * nz
    counts[R_PROC, RADD if real else CADD] += vectors * nz * (nz - 1)


def lr_detect(channel, y, reduction: ReductionOutput, constellation: Constellation,
              inner: str = "sic", cost: CostModel | None = None) -> DetectionResult:
    """Lattice-reduction-aided detection.

    1. shift and scale: ``y~ = (y - c H 1) / 2 = H z + w / 2`` with ``z``
       Gaussian-integer valued;
    2. run ZF or SIC against the reduced basis ``H'`` with plain integer
       rounding (no alphabet clipping) to get ``z'``;
    3. undo the basis change, ``z = U z'``, and map back, ``x~ = 2 z + c``;
    4. hard-limit ``x~`` to the alphabet.

    ``reduction`` may come from :func:`clll_reduce` on ``H`` or from
    :func:`rlll_reduce` (real-embedded, ``2m x 2n``).
    """
    if inner not in ("zf", "sic"):
        raise ValueError(f"inner detector must be 'zf' or 'sic', got {inner!r}")
    H = _channel_matrix(channel)
    real = _check_reduction(H, reduction)
    m, n = H.shape
    counts = new_counts()
    y = np.asarray(y, dtype=np.complex128)
    c = constellation.offset
    y_shift = (y - c * H.sum(axis=1)) / 2
    if real:
        y_shift = real_embed_vector(y_shift)
    Q, R = qr_decompose(reduction.reduced_basis, counts, real=real)
    _, zp = _linear(R, Q, y_shift, _detect.SLICE_INT, 0, inner == "sic", counts, real)
    z = reduction.unimodular @ zp
    if real:
        z = z[:n].real + 1j * z[n:].real
    x_tilde = constellation.from_lattice(z)
    charge_lr_overhead(counts, m, n, real)
    return DetectionResult(constellation.slice(x_tilde), x_tilde,
                           FlopTally(counts, cost or CostModel()))
