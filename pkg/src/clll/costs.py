"""Flop cost model and per-region event tallies.

Arithmetic is counted as discrete events at the call sites that perform it
(see :mod:`clll.reduction` and :mod:`clll.linalg`); a :class:`CostModel`
turns the event counts into a weighted flop total.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

__all__ = [
    "EVENTS",
    "REGIONS",
    "PHASES",
    "CostModel",
    "FlopTally",
    "ConditionalTestStats",
    "crcr",
    "load_cost_model",
    "new_counts",
]

EVENTS = (
    "complex_add",
    "complex_mul",
    "complex_mul_real",
    "complex_div_real",
    "real_add",
    "real_mul",
    "real_div",
    "real_sqrt",
    "abs_sq_complex",
    "round",
    "compare",
)

# Algorithm regions in which events are recorded, and the phase each belongs to.
REGIONS = ("gso", "loop", "size_reduce", "swap", "qr", "phase_fix", "processing")
PHASES = {
    "gso": "reduction",
    "loop": "reduction",
    "size_reduce": "reduction",
    "swap": "reduction",
    "qr": "qr",
    # unit-phase rotation that makes the last diagonal entry of R real
    "phase_fix": "normalization",
    "processing": "processing",
}

# Integer indices used by the compiled kernels.
CADD, CMUL, CMULR, CDIVR, RADD, RMUL, RDIV, RSQRT, ABS2, ROUND, CMP = range(len(EVENTS))
R_GSO, R_LOOP, R_SIZE, R_SWAP, R_QR, R_PHASE, R_PROC = range(len(REGIONS))


def new_counts() -> np.ndarray:
    """Zeroed (region, event) counter array."""
    return np.zeros((len(REGIONS), len(EVENTS)), dtype=np.int64)


@dataclass(frozen=True)
class CostModel:
    """Flop weight per counted event.

    The defaults follow the legacy MATLAB ``flops`` convention: 2 flops per
    complex addition, 1 per real addition, and a multiplication or division
    costs 6 flops whenever a complex operand is involved (so a complex value
    times a real one, a complex value over a real one and ``z * conj(z)`` are
    all charged as full complex products) and 1 otherwise. Rounding and
    comparisons are free. ``K`` is the average number of real operations per
    complex operation used by the complexity-ratio estimate.

    :meth:`minimal` gives the cheaper alternative that charges mixed
    operations only for the real arithmetic they need.
    """

    complex_add: float = 2.0
    complex_mul: float = 6.0
    complex_mul_real: float = 6.0
    complex_div_real: float = 6.0
    real_add: float = 1.0
    real_mul: float = 1.0
    real_div: float = 1.0
    real_sqrt: float = 1.0
    abs_sq_complex: float = 6.0
    round: float = 0.0
    compare: float = 0.0
    K: float = 4.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"negative weight for {f.name!r}")

    @classmethod
    def minimal(cls) -> CostModel:
        """Mixed complex/real operations at their real-arithmetic cost:
        ``z * a`` and ``z / a`` take 2 flops, ``|z|^2`` takes 3."""
        return cls(complex_mul_real=2.0, complex_div_real=2.0, abs_sq_complex=3.0)

    @property
    def weights(self) -> np.ndarray:
        return np.array([getattr(self, e) for e in EVENTS], dtype=float)


def load_cost_model(path: str | Path, base: CostModel | None = None) -> CostModel:
    """Read an ``event=weight`` override file on top of ``base``.

    Blank lines and ``#`` comments are ignored. Unknown event names are an
    error, reported with their line number.
    """
    base = base or CostModel()
    known = {f.name for f in fields(CostModel)}
    updates = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise ValueError(f"{path}:{lineno}: expected '<event>=<weight>', got {raw!r}")
        try:
            updates[key] = float(value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: weight {value.strip()!r} is not a number") from None
    return replace(base, **updates)


@dataclass
class FlopTally:
    """Event counts per algorithm region plus the cost model that weighs them."""

    counts: np.ndarray = field(default_factory=new_counts)
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (len(REGIONS), len(EVENTS)):
            raise ValueError(f"counts must have shape {(len(REGIONS), len(EVENTS))}")

    def region_total(self, region: str) -> float:
        return float(self.counts[REGIONS.index(region)] @ self.cost.weights)

    def phase_total(self, phase: str) -> float:
        return sum(self.region_total(r) for r, p in PHASES.items() if p == phase)

    @property
    def total(self) -> float:
        return float((self.counts @ self.cost.weights).sum())

    def event_counts(self, region: str | None = None) -> dict[str, int]:
        rows = self.counts if region is None else self.counts[[REGIONS.index(region)]]
        return {e: int(c) for e, c in zip(EVENTS, rows.sum(axis=0))}

    def rows(self):
        """Yield ``(phase, region, event, count, weighted)`` for nonzero counts."""
        w = self.cost.weights
        for r, region in enumerate(REGIONS):
            for e, event in enumerate(EVENTS):
                c = int(self.counts[r, e])
                if c:
                    yield PHASES[region], region, event, c, c * w[e]

    def __add__(self, other: FlopTally) -> FlopTally:
        if not isinstance(other, FlopTally):
            return NotImplemented
        return FlopTally(self.counts + other.counts, self.cost)

    def with_cost(self, cost: CostModel) -> FlopTally:
        return FlopTally(self.counts.copy(), cost)


@dataclass(frozen=True)
class ConditionalTestStats:
    """Pass frequency of a conditional test observed during reductions."""

    n: int
    passes: int
    evaluations: int

    @property
    def p_hat(self) -> float:
        return self.passes / self.evaluations if self.evaluations else float("nan")

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return float(np.sqrt(p * (1 - p) / self.evaluations)) if self.evaluations else float("nan")


def crcr(K: float, pc: float, pr: float) -> float:
    """Complex-to-real complexity ratio ``(K/16) * pc / pr``."""
    if pr <= 0:
        raise ValueError("pr must be positive")
    if not (0 < pc <= 1 and pr <= 1):
        raise ValueError("pc and pr must lie in (0, 1]")
    if K <= 0:
        raise ValueError("K must be positive")
    return K / 16.0 * pc / pr
