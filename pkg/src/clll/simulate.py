"""Monte Carlo error-rate sweeps over SNR.

Each SNR point is simulated in fixed-size batches. Batch ``b`` of point
``p`` draws everything it needs (channels, bits, noise) from its own
generator seeded with ``(seed, p, b)``, so results do not depend on which
detectors are still running or on how batches are scheduled. All detectors
see the same channels and noise, and a detector stops at the end of the
first batch after which it has collected ``target_errors`` vector errors.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _detect
from ._kernels import qr_batch_kernel
from .costs import CostModel, FlopTally, new_counts
from .detection import (ML_MAX_CANDIDATES, Constellation, charge_lr_overhead,
                        noise_var_for_snr, qam_demap, qam_map)
from .reduction import ReductionParams, reduce_batch

__all__ = ["DETECTORS", "SweepConfig", "PointResult", "SweepResult", "run_sweep",
           "SNR_DEFINITION"]

DETECTORS = ("zf", "sic", "vblast", "ml", "lr-zf-clll", "lr-sic-clll", "lr-zf-rlll", "lr-sic-rlll")
SNR_DEFINITION = "n*Es/(2*sigma^2)"


@dataclass(frozen=True)
class SweepConfig:
    """Description of one sweep.

    ``trials`` caps the number of transmitted vectors per SNR point;
    ``target_errors`` (``None`` to disable) lets each detector stop early.
    One channel is drawn, and reduced, per ``symbols_per_channel`` vectors.
    """

    m: int = 4
    n: int = 4
    qam: int = 16
    snr_db: tuple[float, ...] = (10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 100_000
    target_errors: int | None = 200
    delta: float = 0.99
    detectors: tuple[str, ...] = ("zf", "sic", "lr-sic-clll", "lr-sic-rlll", "ml")
    seed: int = 0
    symbols_per_channel: int = 1
    batch: int = 2000
    cost: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if not self.snr_db:
            raise ValueError("snr grid is empty")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("snr grid must be strictly ascending")
        if self.trials < 1 or self.batch < 1 or self.symbols_per_channel < 1:
            raise ValueError("trials, batch and symbols_per_channel must be positive")
        if self.target_errors is not None and self.target_errors < 1:
            raise ValueError("target_errors must be positive")
        if not self.detectors:
            raise ValueError("no detectors selected")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors {sorted(unknown)}; choose from {DETECTORS}")
        if len(set(self.detectors)) != len(self.detectors):
            raise ValueError("duplicate detectors")
        if not self.m >= self.n >= 1:
            raise ValueError(f"need m >= n >= 1, got m={self.m}, n={self.n}")
        Constellation(self.qam)
        if "ml" in self.detectors and self.qam ** self.n > ML_MAX_CANDIDATES:
            raise ValueError(f"ml needs M^n <= {ML_MAX_CANDIDATES}, got {self.qam}^{self.n}")
        ReductionParams(self.delta)

    @property
    def constellation(self) -> Constellation:
        return Constellation(self.qam)


@dataclass
class PointResult:
    detector: str
    snr_db: float
    trials: int = 0
    vector_errors: int = 0
    bit_errors: int = 0
    bits_per_vector: int = 1
    preprocessing_flops: float = math.nan  # mean per channel
    processing_flops: float = math.nan  # mean per vector

    @property
    def ver(self) -> float:
        return self.vector_errors / self.trials if self.trials else math.nan

    @property
    def ber(self) -> float:
        nbits = self.trials * self.bits_per_vector
        return self.bit_errors / nbits if nbits else math.nan

    @property
    def ver_stderr(self) -> float:
        p = self.ver
        return math.sqrt(p * (1 - p) / self.trials) if self.trials else math.nan

    @property
    def ber_stderr(self) -> float:
        # bit errors within a vector are correlated; vectors are the independent unit
        p = self.ber
        return math.sqrt(p * (1 - p) / (self.trials * self.bits_per_vector)) if self.trials else math.nan


CSV_FIELDS = ("detector", "snr_db", "snr_definition", "m", "n", "qam", "delta", "trials",
              "vector_errors", "bit_errors", "ver", "ber", "ver_stderr", "ber_stderr",
              "preprocessing_flops", "processing_flops")


def fmt(x) -> str:
    """Numbers for CSV output: integers verbatim, floats with 17 significant digits."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass
class SweepResult:
    config: SweepConfig
    points: list[PointResult]

    def series(self, detector: str) -> list[PointResult]:
        return [p for p in self.points if p.detector == detector]

    def rows(self):
        c = self.config
        for p in self.points:
            yield (p.detector, p.snr_db, SNR_DEFINITION, c.m, c.n, c.qam, c.delta, p.trials,
                   p.vector_errors, p.bit_errors, p.ver, p.ber, p.ver_stderr, p.ber_stderr,
                   p.preprocessing_flops, p.processing_flops)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in self.rows():
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()


def _batch_rng(seed: int, point: int, batch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, batch)))


class _Batch:
    """Channels, transmitted vectors and observations of one batch, plus
    lazily computed preprocessing shared between detectors."""

    def __init__(self, cfg: SweepConfig, noise_var: float, rng, size: int):
        C = cfg.constellation
        k = C.bits_per_symbol
        self.cfg, self.size = cfg, size
        self.channels = -(-size // cfg.symbols_per_channel)
        m, n = cfg.m, cfg.n
        self.H = (rng.standard_normal((self.channels, m, n))
                  + 1j * rng.standard_normal((self.channels, m, n))) / np.sqrt(2)
        self.bits = rng.integers(0, 2, size=(size, n * k), dtype=np.int64)
        w = np.sqrt(noise_var / 2) * (rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m)))
        self.owner = np.arange(size) // cfg.symbols_per_channel
        self.X = qam_map(self.bits, C)
        self.Y = np.einsum("tmn,tn->tm", self.H[self.owner], self.X) + w
        self._cache = {}

    def qr(self):
        if "qr" not in self._cache:
            T, m, n = self.H.shape
            Q = np.zeros((T, m, n), dtype=np.complex128)
            R = np.zeros((T, n, n), dtype=np.complex128)
            counts = new_counts()
            qr_batch_kernel(self.H, False, Q, R, counts)
            self._cache["qr"] = (Q, R, FlopTally(counts, self.cfg.cost).total / T)
        return self._cache["qr"]

    def reduction(self, real: bool):
        key = ("red", real)
        if key not in self._cache:
            red = reduce_batch(self.H, ReductionParams(self.cfg.delta), self.cfg.cost, real=real)
            flops = (red.flops.total + red.qr_flops.total) / len(red)
            self._cache[key] = (red, flops)
        return self._cache[key]


def _run_detector(name: str, b: _Batch):
    """Decisions ``(size, n)`` plus mean preprocessing and processing flops."""
    cfg = b.cfg
    C = cfg.constellation
    size, n, m = b.size, cfg.n, cfg.m
    idx = b.owner
    if name in ("zf", "sic"):
        Q, R, pre = b.qr()
        xt = np.zeros((size, n), dtype=np.complex128)
        xh = np.zeros((size, n), dtype=np.complex128)
        counts = new_counts()
        _detect.linear_batch(Q[idx], R[idx], b.Y, _detect.SLICE_QAM, float(C.qmax),
                             name == "sic", False, xt, xh, counts)
        return xh, pre, FlopTally(counts, cfg.cost).total / size
    if name == "ml":
        Q, R, _ = b.qr()
        out = np.zeros((size, n), dtype=np.int64)
        _detect.ml_batch(Q[idx], R[idx], b.Y, C.points, out)
        return C.points[out], math.nan, math.nan
    if name == "vblast":
        out = np.zeros((size, n), dtype=np.complex128)
        _detect.vblast_batch(np.ascontiguousarray(b.H[idx]), b.Y, float(C.qmax), out)
        return out, math.nan, math.nan
    _, inner, kind = name.split("-")
    real = kind == "rlll"
    red, pre = b.reduction(real)
    y = (b.Y - C.offset * b.H[idx].sum(axis=2)) / 2
    if real:
        y = np.concatenate([y.real, y.imag], axis=1).astype(np.complex128)
    nz = red.r.shape[1]
    xt = np.zeros((size, nz), dtype=np.complex128)
    zp = np.zeros((size, nz), dtype=np.complex128)
    counts = new_counts()
    _detect.linear_batch(red.q[idx], red.r[idx], y, _detect.SLICE_INT, 0.0, inner == "sic",
                         real, xt, zp, counts)
    z = np.einsum("tij,tj->ti", red.unimodular[idx], zp)
    if real:
        z = z[:, :n].real + 1j * z[:, n:].real
    charge_lr_overhead(counts, m, n, real, vectors=size)
    xh = C.slice(C.from_lattice(z))
    return xh, pre, FlopTally(counts, cfg.cost).total / size


def run_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    """Simulate every detector at every SNR point.

    ``progress(point_index, detector, PointResult)`` is called when a
    detector finishes a point.
    """
    C = cfg.constellation
    bits_per_vector = cfg.n * C.bits_per_symbol
    points = []
    for p, snr in enumerate(cfg.snr_db):
        noise_var = float(noise_var_for_snr(snr, cfg.n, C))
        res = {d: PointResult(d, snr, bits_per_vector=bits_per_vector) for d in cfg.detectors}
        sums = {d: [0.0, 0.0, 0] for d in cfg.detectors}
        active = list(cfg.detectors)
        done, b = 0, 0
        while active and done < cfg.trials:
            size = min(cfg.batch, cfg.trials - done)
            batch = _Batch(cfg, noise_var, _batch_rng(cfg.seed, p, b), size)
            for d in list(active):
                xh, pre, proc = _run_detector(d, batch)
                r = res[d]
                wrong = np.any(np.abs(xh - batch.X) > 0.5, axis=1)
                r.trials += size
                r.vector_errors += int(wrong.sum())
                if wrong.any():
                    r.bit_errors += int(np.sum(qam_demap(xh[wrong], C) != batch.bits[wrong]))
                s = sums[d]
                s[0] += pre * batch.channels
                s[1] += proc * size
                s[2] += batch.channels
                if cfg.target_errors is not None and r.vector_errors >= cfg.target_errors:
                    active.remove(d)
                    if progress:
                        progress(p, d, r)
            done += size
            b += 1
        for d in cfg.detectors:
            r, s = res[d], sums[d]
            r.preprocessing_flops = s[0] / s[2] if s[2] else math.nan
            r.processing_flops = s[1] / r.trials if r.trials else math.nan
            if progress and d in active:
                progress(p, d, r)
            points.append(r)
    return SweepResult(cfg, points)
