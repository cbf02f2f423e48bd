"""Exhaustive shortest-vector and successive-minima oracle for small lattices.

The oracle is only meant for checking theorems numerically, so it favours
being obviously correct over being fast: it lists every coefficient vector in
a box that provably contains all lattice points of interest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, is_real, pseudo_inverse
from .reduction import ReductionParams, clll_reduce

__all__ = ["LatticeOracleResult", "OracleDimensionError", "shortest_vector_bruteforce",
           "MAX_COMPLEX_DIM", "MAX_REAL_DIM"]

MAX_COMPLEX_DIM = 3
MAX_REAL_DIM = 6
MAX_POINTS = 4_000_000
_CHUNK = 200_000


class OracleDimensionError(ValueError):
    """The lattice is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class LatticeOracleResult:
    """Squared successive minima and one witness per minimum.

    ``witness_coeffs[:, i]`` holds the (Gaussian) integer coefficients, with
    respect to the input basis, of a lattice vector of squared norm
    ``successive_minima_sq[i]``.
    """

    shortest_norm_sq: float
    successive_minima_sq: tuple[float, ...]
    witness_coeffs: np.ndarray
    points_enumerated: int

    @property
    def minima(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.successive_minima_sq))


def _coefficient_box(B: np.ndarray, radius: float) -> np.ndarray:
    # c = B^+ v, so |c_i| <= ||row_i(B^+)|| * ||v|| for every v with ||v|| <= radius
    rows = np.linalg.norm(pseudo_inverse(B), axis=1)
    return np.floor(radius * rows + 1e-9).astype(int)


def _canonical_unit(c: np.ndarray, real: bool) -> np.ndarray:
    """Multiply by a unit (+-1, and +-i for complex lattices) so the first
    nonzero entry has positive real part and non-negative imaginary part."""
    lead = c[np.flatnonzero(c)[0]]
    for unit in ((1, -1) if real else (1, 1j, -1, -1j)):
        z = lead * unit
        if z.real > 0 and z.imag >= 0:
            return c * unit
    return c  # pragma: no cover


def shortest_vector_bruteforce(basis, radius_mult: float = 1.0, real: bool | None = None
                               ) -> LatticeOracleResult:
    """Enumerate all lattice points up to ``radius_mult * max_j ||h_j||``.

    Complex bases use Gaussian-integer coefficients and complex linear
    independence for the minima; real bases (no imaginary parts) use integer
    coefficients; pass ``real`` to override that inference (a real-valued
    basis of a Gaussian-integer lattice needs ``real=False``). The basis is LLL-reduced first, which only shrinks the box.
    Every vector of norm at most the search radius has coefficients inside
    the box ``|c_i| <= radius * ||row_i(B^+)||``, and the radius is at least
    the largest basis norm, so all minima are found exactly when
    ``radius_mult >= 1``.

    Raises
    ------
    OracleDimensionError
        For more than 3 complex or 6 real dimensions, or when the box would
        hold more than a few million points.
    """
    H = as_matrix(basis, name="basis")
    if real is None:
        real = is_real(H)
    n = H.shape[1]
    limit = MAX_REAL_DIM if real else MAX_COMPLEX_DIM
    if n > limit:
        raise OracleDimensionError(f"exhaustive search supports n <= {limit} "
                                   f"({'real' if real else 'complex'}), got n = {n}")
    if radius_mult < 1.0:
        raise ValueError("radius_mult must be at least 1 for an exact answer")
    red = clll_reduce(H, ReductionParams(0.99), real=real)
    B, U = red.reduced_basis, red.unimodular
    radius = radius_mult * float(np.sqrt(np.max(np.sum(np.abs(B) ** 2, axis=0))))
    box = _coefficient_box(B, radius)

    if real:
        axes = [np.arange(-b, b + 1) for b in box]
    else:
        axes = [np.arange(-b, b + 1) for b in box for _ in range(2)]
    total = math.prod(len(a) for a in axes)
    if total > MAX_POINTS:
        raise OracleDimensionError(f"enumeration box holds {total} points (limit {MAX_POINTS})")

    r2 = radius * radius * (1 + 1e-12)
    found_c, found_n = [], []
    grid = itertools.product(*axes)
    while True:
        chunk = np.array(list(itertools.islice(grid, _CHUNK)), dtype=float)
        if chunk.size == 0:
            break
        coeffs = chunk if real else chunk[:, 0::2] + 1j * chunk[:, 1::2]
        norms = np.sum(np.abs(coeffs @ B.T) ** 2, axis=1)
        keep = (norms <= r2) & np.any(coeffs != 0, axis=1)
        found_c.append(coeffs[keep])
        found_n.append(norms[keep])
    coeffs = np.concatenate(found_c).astype(np.complex128)
    norms = np.concatenate(found_n)
    order = np.argsort(norms, kind="stable")

    # greedy selection of independent vectors by increasing norm gives the minima
    chosen: list[int] = []
    vectors = coeffs @ B.T
    for idx in order:
        cand = vectors[chosen + [idx]]
        if np.linalg.matrix_rank(cand, tol=1e-8 * radius) == len(chosen) + 1:
            chosen.append(int(idx))
            if len(chosen) == n:
                break
    if len(chosen) < n:  # pragma: no cover - the basis itself lies inside the box
        raise RuntimeError("enumeration failed to find n independent vectors")
    witnesses = U @ coeffs[chosen].T
    witnesses = np.round(witnesses.real) + 1j * np.round(witnesses.imag)
    for i in range(n):
        witnesses[:, i] = _canonical_unit(witnesses[:, i], real)
    minima = tuple(float(norms[i]) for i in chosen)
    return LatticeOracleResult(minima[0], minima, witnesses, int(total))
