"""Complex LLL reduction and its real-embedded baseline.

Indices are 0-based throughout: ``size_reduce(state, k, j)`` reduces column
``k`` against column ``j < k`` and ``swap_update(state, k)`` exchanges
columns ``k - 1`` and ``k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import (
    N_STATS, ST_ITER, ST_L13_EVAL, ST_L13_PASS, ST_L22_EVAL, ST_L22_PASS,
    ST_SIZE_REDUCE, ST_SWAPS,
)
from .costs import CostModel, FlopTally, new_counts
from .linalg import GsoState, as_matrix, gso, is_real, real_embed

__all__ = [
    "ReductionParams",
    "ReductionState",
    "ReductionOutput",
    "ReducednessReport",
    "ConvergenceError",
    "clll_reduce",
    "rlll_reduce",
    "size_reduce",
    "swap_update",
    "replay",
    "is_clll_reduced",
    "orthogonality_defect",
    "iteration_cap",
    "lattice_volume",
    "BatchReduction",
    "reduce_batch",
]

SLACK = 1e-9
CAP_CONSTANT = 10

# Event codes written by ``replay``/recorded traces.
EV_SIZE_REDUCE, EV_SWAP = 0, 1


class ConvergenceError(RuntimeError):
    """The reduction loop exceeded its iteration cap."""


@dataclass(frozen=True)
class ReductionParams:
    """Lovász factor ``delta`` in (1/2, 1); ``delta == 1`` needs ``allow_delta_one``."""

    delta: float = 0.99
    allow_delta_one: bool = False

    def __post_init__(self):
        if not 0.5 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (1/2, 1], got {self.delta}")
        if self.delta == 1.0 and not self.allow_delta_one:
            raise ValueError("delta = 1 has no polynomial convergence guarantee; "
                             "pass allow_delta_one=True to use it")

    @property
    def alpha(self) -> float:
        return 1.0 / (self.delta - 0.5)


@dataclass
class ReductionState:
    """Mutable working state: basis, accumulated U and the GSO coefficients."""

    basis: np.ndarray
    unimodular: np.ndarray
    mu: np.ndarray
    hnorm: np.ndarray
    real: bool
    counts: np.ndarray = field(default_factory=new_counts)

    @classmethod
    def from_basis(cls, basis, real: bool | None = None) -> ReductionState:
        B = as_matrix(basis, name="basis").copy()
        if real is None:
            real = is_real(B)
        counts = new_counts()
        g = gso(B, counts, real)
        n = B.shape[1]
        return cls(B, np.eye(n, dtype=np.complex128), g.mu.copy(), g.hnorm.copy(), real, counts)

    @property
    def gso(self) -> GsoState:
        return GsoState(self.mu.copy(), self.hnorm.copy())

    def copy(self) -> ReductionState:
        return ReductionState(self.basis.copy(), self.unimodular.copy(), self.mu.copy(),
                              self.hnorm.copy(), self.real, self.counts.copy())


def size_reduce(state: ReductionState, k: int, j: int) -> ReductionState:
    """Subtract ``round(mu[k, j])`` times column ``j`` from column ``k``."""
    n = state.basis.shape[1]
    if not 0 <= j < k < n:
        raise IndexError(f"need 0 <= j < k < {n}, got k={k}, j={j}")
    _kernels.size_reduce_kernel(state.basis, state.unimodular, state.mu, k, j,
                                state.counts, state.real)
    return state


def swap_update(state: ReductionState, k: int) -> ReductionState:
    """Exchange columns ``k - 1`` and ``k`` and update ``mu``/``hnorm`` in place."""
    n = state.basis.shape[1]
    if not 1 <= k < n:
        raise IndexError(f"need 1 <= k < {n}, got k={k}")
    _kernels.swap_update_kernel(state.basis, state.unimodular, state.mu, state.hnorm, k,
                                state.counts, state.real)
    return state


@dataclass
class ReductionOutput:
    reduced_basis: np.ndarray
    unimodular: np.ndarray
    gso: GsoState
    swap_count: int
    size_reduce_count: int
    # natural log of the potential D after each swap; log_potential_initial before any
    potential_trace: np.ndarray
    log_potential_initial: float
    flops: FlopTally
    delta: float
    real: bool
    iterations: int
    line13: tuple[int, int]  # (passes, evaluations) of the k-1 pre-check
    line22: tuple[int, int]  # (passes, evaluations) of the j <= k-2 pre-check
    trace: np.ndarray | None = None  # rows (event, k, j) when recorded

    @property
    def n(self) -> int:
        return self.reduced_basis.shape[1]


def lattice_volume(basis) -> float:
    """``sqrt(det(H^H H))``."""
    return float(np.sqrt(np.prod(gso(basis).hnorm)))


def log_potential(hnorm: np.ndarray) -> float:
    n = len(hnorm)
    return float(np.sum((n - np.arange(n)) * np.log(hnorm)))


def iteration_cap(basis, hnorm: np.ndarray | None = None) -> int:
    """Loop-iteration guard ``10 n^2 log2(B / lambda_est)`` (+ n for the final sweep).

    ``B`` is the largest column norm and ``lambda_est = min sqrt(hnorm)``, a
    lower bound on the shortest vector length; the log factor is floored at 1.
    """
    B = as_matrix(basis)
    n = B.shape[1]
    if hnorm is None:
        hnorm = gso(B).hnorm
    big = float(np.sqrt(np.max(np.sum(np.abs(B) ** 2, axis=0))))
    lam = float(np.sqrt(np.min(hnorm)))
    ratio = max(1.0, math.log2(big / lam)) if lam > 0 else 1.0
    return int(math.ceil(CAP_CONSTANT * n * n * ratio)) + n


def clll_reduce(basis, params: ReductionParams | None = None, cost: CostModel | None = None,
                *, real: bool | None = None, record_trace: bool = False,
                max_iter: int | None = None) -> ReductionOutput:
    """Reduce ``basis`` so that it is size-reduced and satisfies the Lovász condition.

    The loop follows the listing of the complex LLL algorithm: a conditional
    size reduction against ``k - 1``, the Lovász test, then either a swap with
    an incremental GSO update or a conditional size reduction against all
    ``j <= k - 2``. ``U`` is accumulated alongside so that
    ``reduced_basis == basis @ unimodular``.

    Parameters
    ----------
    basis : array_like, shape (m, n)
        Full column rank basis, columns are basis vectors.
    params : ReductionParams, optional
        Defaults to ``delta = 0.99``.
    cost : CostModel, optional
        Weights attached to the returned flop tally.
    real : bool, optional
        Charge operations as real arithmetic. Inferred from the data if omitted.
    record_trace : bool
        Keep the sequence of size reductions and swaps (see :func:`replay`).
    max_iter : int, optional
        Override for :func:`iteration_cap`.

    Raises
    ------
    RankError
        If ``basis`` is rank deficient.
    ConvergenceError
        If the loop exceeds the iteration cap.
    """
    params = params or ReductionParams()
    state = ReductionState.from_basis(basis, real)
    n = state.basis.shape[1]
    if max_iter is None:
        max_iter = iteration_cap(state.basis, state.hnorm)
    stats = np.zeros(N_STATS, dtype=np.int64)
    log_trace = np.zeros(max_iter + 1)
    events = np.zeros((max_iter * max(n, 1) + 1 if record_trace else 0, 3), dtype=np.int64)
    log_d0 = log_potential(state.hnorm)
    nswap = _kernels.clll_kernel(state.basis, state.unimodular, state.mu, state.hnorm,
                                 params.delta, state.real, state.counts, stats, log_trace,
                                 max_iter, events)
    if nswap < 0:
        raise ConvergenceError(f"no convergence within {max_iter} iterations (n={n}, "
                               f"delta={params.delta})")
    n_events = int(stats[ST_SWAPS] + stats[ST_SIZE_REDUCE])
    return ReductionOutput(
        reduced_basis=state.basis,
        unimodular=state.unimodular,
        gso=state.gso,
        swap_count=int(stats[ST_SWAPS]),
        size_reduce_count=int(stats[ST_SIZE_REDUCE]),
        potential_trace=log_trace[:nswap].copy(),
        log_potential_initial=log_d0,
        flops=FlopTally(state.counts, cost or CostModel()),
        delta=params.delta,
        real=state.real,
        iterations=int(stats[ST_ITER]),
        line13=(int(stats[ST_L13_PASS]), int(stats[ST_L13_EVAL])),
        line22=(int(stats[ST_L22_PASS]), int(stats[ST_L22_EVAL])),
        trace=events[:n_events].copy() if record_trace else None,
    )


@dataclass
class BatchReduction:
    """Many reductions at once, each followed by a QR factorization of the result.

    ``stats`` has one row per basis (swaps, size reductions, line-13 evaluations
    and passes, line-22 evaluations and passes, loop iterations).
    """

    reduced: np.ndarray
    unimodular: np.ndarray
    q: np.ndarray
    r: np.ndarray
    stats: np.ndarray
    flops: FlopTally
    qr_flops: FlopTally
    real: bool

    def __len__(self) -> int:
        return self.reduced.shape[0]

    @property
    def line22(self) -> tuple[int, int]:
        return int(self.stats[:, ST_L22_PASS].sum()), int(self.stats[:, ST_L22_EVAL].sum())


def reduce_batch(bases, params: ReductionParams | None = None, cost: CostModel | None = None,
                 *, real: bool = False) -> BatchReduction:
    """Reduce a stack of bases ``(T, m, n)`` with the compiled loop.

    Complex stacks with ``real=True`` are embedded first, so the result has
    shape ``(T, 2m, 2n)``. Rank is not checked here; callers sample bases
    that are full rank with probability one.
    """
    params = params or ReductionParams()
    Hs = np.asarray(bases, dtype=np.complex128)
    if Hs.ndim != 3:
        raise ValueError(f"expected a (T, m, n) stack, got shape {Hs.shape}")
    if real and np.any(Hs.imag):
        Hs = np.concatenate([np.concatenate([Hs.real, -Hs.imag], axis=2),
                             np.concatenate([Hs.imag, Hs.real], axis=2)], axis=1)
        Hs = Hs.astype(np.complex128)
    T, m, n = Hs.shape
    counts, qr_counts = new_counts(), new_counts()
    stats = np.zeros((T, N_STATS), dtype=np.int64)
    reduced = np.empty_like(Hs)
    unimodular = np.empty((T, n, n), dtype=np.complex128)
    q = np.zeros((T, m, n), dtype=np.complex128)
    r = np.zeros((T, n, n), dtype=np.complex128)
    _kernels.clll_batch_kernel(Hs, params.delta, real, float(CAP_CONSTANT), counts, stats,
                               reduced, unimodular, q, r, qr_counts)
    failed = np.flatnonzero(stats[:, ST_SWAPS] < 0)
    if failed.size:
        raise ConvergenceError(f"{failed.size} of {T} bases hit the iteration cap "
                               f"(first at index {failed[0]})")
    cost = cost or CostModel()
    return BatchReduction(reduced, unimodular, q, r, stats, FlopTally(counts, cost),
                          FlopTally(qr_counts, cost), real)


def rlll_reduce(basis, params: ReductionParams | None = None,
                cost: CostModel | None = None, **kwargs) -> ReductionOutput:
    """Run the same loop on the real-valued equivalent of ``basis``.

    Complex input is embedded as ``[[Re H, -Im H], [Im H, Re H]]``; real input
    is reduced as is. All arithmetic is charged at real-operation weights.
    """
    B = as_matrix(basis, name="basis")
    if not is_real(B):
        B = real_embed(B)
    return clll_reduce(B, params, cost, real=True, **kwargs)


def replay(basis, trace: np.ndarray, real: bool | None = None, callback=None) -> ReductionState:
    """Re-apply a recorded trace with :func:`size_reduce` / :func:`swap_update`.

    ``callback(state, event, k, j)`` runs after every step.
    """
    state = ReductionState.from_basis(basis, real)
    for event, k, j in trace:
        if event == EV_SWAP:
            swap_update(state, int(k))
        else:
            size_reduce(state, int(k), int(j))
        if callback is not None:
            callback(state, int(event), int(k), int(j))
    return state


@dataclass
class ReducednessReport:
    size_violations: list[tuple[int, int]]
    lovasz_violations: list[int]

    @property
    def ok(self) -> bool:
        return not self.size_violations and not self.lovasz_violations

    def __bool__(self) -> bool:
        return self.ok


def is_clll_reduced(basis, delta: float, slack: float = SLACK) -> ReducednessReport:
    """Check both reduction conditions with a small floating-point slack.

    Violations are reported with 0-based indices: ``(i, j)`` pairs whose
    coefficient has a real or imaginary part above 1/2, and every ``k`` where
    the Lovász condition fails.
    """
    g = gso(basis)
    mu, hn = g.mu, g.hnorm
    n = len(hn)
    size = [(i, j) for i in range(n) for j in range(i)
            if abs(mu[i, j].real) > 0.5 + slack or abs(mu[i, j].imag) > 0.5 + slack]
    lov = [k for k in range(1, n)
           if hn[k] < (delta - abs(mu[k, k - 1]) ** 2) * hn[k - 1] - slack * hn[k - 1]]
    return ReducednessReport(size, lov)


def orthogonality_defect(basis) -> float:
    """``prod ||h_i|| / sqrt(det(H^H H))``; equals 1 exactly for orthogonal bases."""
    B = as_matrix(basis)
    g = gso(B)
    log_norms = 0.5 * np.sum(np.log(np.sum(np.abs(B) ** 2, axis=0)))
    return float(np.exp(log_norms - 0.5 * np.sum(np.log(g.hnorm))))
