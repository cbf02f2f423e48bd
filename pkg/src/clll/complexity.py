"""Complexity experiments: conditional-test statistics and flop comparisons.

Both experiments draw i.i.d. CN(0, 1) square bases and run the complex
reducer on them and the real reducer on their real embeddings, so every
comparison is made on identical lattices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import ConditionalTestStats, CostModel, FlopTally
from .reduction import ReductionOutput, ReductionParams, reduce_batch

__all__ = [
    "CountingDisabledError",
    "BenchRow",
    "tally_reduction",
    "random_bases",
    "estimate_pc_pr",
    "bench_rows",
    "MIN_TRIALS",
]

MIN_TRIALS = 1000
_BATCH = 2000


class CountingDisabledError(ValueError):
    """The reduction carries no flop tally."""


def tally_reduction(output: ReductionOutput) -> FlopTally:
    """Flop tally recorded while ``output`` was computed.

    ``tally.region_total("gso")`` and friends break the total down into the
    Gram-Schmidt setup, loop control, size reductions and swap updates.
    """
    tally = getattr(output, "flops", None)
    if tally is None:
        raise CountingDisabledError("reduction was run without flop counting")
    return tally


def random_bases(n: int, count: int, rng, m: int | None = None) -> np.ndarray:
    """``count`` independent ``m x n`` matrices with CN(0, 1) entries."""
    m = m or n
    rng = np.random.default_rng(rng)
    return (rng.standard_normal((count, m, n)) + 1j * rng.standard_normal((count, m, n))) / np.sqrt(2)


def _batches(total: int):
    done = 0
    while done < total:
        size = min(_BATCH, total - done)
        yield size
        done += size


def estimate_pc_pr(n: int, trials: int, delta: float = 0.99, rng=None
                   ) -> tuple[ConditionalTestStats, ConditionalTestStats]:
    """Pass frequency of the pre-check before each size reduction against
    ``j <= k - 2`` (the one on the no-swap branch).

    Returns pooled statistics for the complex reducer in dimension ``n`` and
    for the real reducer on the ``2n``-dimensional embeddings of the same bases.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials for a stable estimate, got {trials}")
    rng = np.random.default_rng(rng)
    params = ReductionParams(delta)
    pc = [0, 0]
    pr = [0, 0]
    for size in _batches(trials):
        H = random_bases(n, size, rng)
        for acc, real in ((pc, False), (pr, True)):
            passes, evals = reduce_batch(H, params, real=real).line22
            acc[0] += passes
            acc[1] += evals
    return (ConditionalTestStats(n, pc[0], pc[1]), ConditionalTestStats(2 * n, pr[0], pr[1]))


@dataclass(frozen=True)
class BenchRow:
    """Mean flops per basis for one dimension, in the layout of the usual
    complexity table (reduction, QR of the reduced basis, overall)."""

    n: int
    trials: int
    rlll: float
    clll: float
    qr_real: float
    qr_complex: float
    phase_fix: float  # unit-phase rotation making diag(R) real, reported separately

    @property
    def lll_saved(self) -> float:
        return 1 - self.clll / self.rlll

    @property
    def qr_saved(self) -> float:
        return 1 - self.qr_complex / self.qr_real

    @property
    def overall_saved(self) -> float:
        return 1 - (self.clll + self.qr_complex) / (self.rlll + self.qr_real)


def bench_rows(ns, trials: int, delta: float = 0.99, rng=None,
               cost: CostModel | None = None) -> list[BenchRow]:
    """Average reduction and QR flops of both reducers for each ``n``."""
    cost = cost or CostModel()
    rng = np.random.default_rng(rng)
    params = ReductionParams(delta)
    rows = []
    for n in ns:
        tot = np.zeros(5)
        for size in _batches(trials):
            H = random_bases(n, size, rng)
            c = reduce_batch(H, params, cost, real=False)
            r = reduce_batch(H, params, cost, real=True)
            tot += [r.flops.phase_total("reduction"), c.flops.phase_total("reduction"),
                    r.qr_flops.phase_total("qr"), c.qr_flops.phase_total("qr"),
                    c.qr_flops.phase_total("normalization")]
        rows.append(BenchRow(n, trials, *(tot / trials)))
    return rows
