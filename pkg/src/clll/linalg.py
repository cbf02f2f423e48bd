"""Dense complex linear algebra used by the reducer and the detectors.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; column ``j`` is
basis vector ``h_j``. Functions that accept a ``counts`` array record their
arithmetic into it (see :mod:`clll.costs`).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from . import _kernels
from .costs import new_counts

__all__ = [
    "RankError",
    "GsoState",
    "as_matrix",
    "complex_round",
    "is_real",
    "gso",
    "qr_decompose",
    "pseudo_inverse",
    "real_embed",
    "real_embed_vector",
    "rank_tolerance",
    "format_matrix",
    "parse_matrix",
    "read_matrix",
    "write_matrix",
]

RANK_RTOL = 1e-12


class RankError(ValueError):
    """Raised when a matrix that must have full column rank does not."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class GsoState:
    """Gram-Schmidt coefficients ``mu`` (strictly lower part used) and squared
    norms ``hnorm`` of the orthogonalized vectors."""

    mu: np.ndarray
    hnorm: np.ndarray

    def gram(self) -> np.ndarray:
        """Rebuild ``H^H H`` from the coefficients."""
        n = len(self.hnorm)
        L = np.tril(self.mu, -1) + np.eye(n)
        return np.conj(L) @ np.diag(self.hnorm) @ L.T


def as_matrix(a, *, name: str = "matrix") -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def is_real(a: np.ndarray) -> bool:
    return not np.any(np.asarray(a).imag)


def complex_round(z):
    """Round real and imaginary parts to the nearest integer, ties away from zero."""
    z = np.asarray(z)

    def _r(x):
        a = np.abs(x)
        fl = np.floor(a)
        return np.copysign(fl + (a - fl >= 0.5), x)

    if np.iscomplexobj(z):
        return _r(z.real) + 1j * _r(z.imag)
    return _r(z)


def rank_tolerance(basis: np.ndarray) -> float:
    return RANK_RTOL * float(np.max(np.sum(np.abs(basis) ** 2, axis=0), initial=0.0))


def _check_rank(hnorm: np.ndarray, basis: np.ndarray) -> None:
    tol = rank_tolerance(basis)
    bad = np.flatnonzero(~(hnorm > tol))
    if basis.shape[1] > basis.shape[0]:
        raise RankError(f"{basis.shape[0]}x{basis.shape[1]} basis has more columns than rows")
    if bad.size:
        raise RankError(f"basis is rank deficient at column {bad[0]}", index=int(bad[0]))


def gso(basis, counts: np.ndarray | None = None, real: bool | None = None) -> GsoState:
    """Gram-Schmidt coefficients in inner-product form (no h* vectors kept).

    ``mu[i, j] = <h_i, h_j*> / ||h_j*||^2`` for ``i > j`` and
    ``hnorm[i] = ||h_i*||^2``.
    """
    B = as_matrix(basis, name="basis")
    if real is None:
        real = is_real(B)
    n = B.shape[1]
    mu = np.zeros((n, n), dtype=np.complex128)
    hn = np.zeros(n)
    _kernels.gso_kernel(B, mu, hn, new_counts() if counts is None else counts, real)
    _check_rank(hn, B)
    return GsoState(mu, hn)


def qr_decompose(basis, counts: np.ndarray | None = None, real: bool | None = None):
    """Householder QR ``basis = Q R`` with ``Q`` m x n, ``R`` n x n and
    ``diag(R)`` real positive."""
    A = as_matrix(basis, name="basis").copy()
    m, n = A.shape
    if n > m:
        raise RankError(f"{m}x{n} matrix has more columns than rows")
    if real is None:
        real = is_real(A)
    scale = np.sqrt(rank_tolerance(A))
    Q = np.zeros((m, n), dtype=np.complex128)
    R = np.zeros((n, n), dtype=np.complex128)
    _kernels.householder_qr_kernel(A, Q, R, new_counts() if counts is None else counts, real)
    bad = np.flatnonzero(~(R.diagonal().real > scale))
    if bad.size:
        raise RankError(f"matrix is rank deficient at column {bad[0]}", index=int(bad[0]))
    return Q, R


def pseudo_inverse(mat) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a full-column-rank matrix, ``R^-1 Q^H``."""
    Q, R = qr_decompose(mat)
    return solve_triangular(R, Q.conj().T)


def real_embed(mat) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]`` as a complex array with zero imaginary part."""
    H = as_matrix(mat)
    top = np.hstack([H.real, -H.imag])
    bottom = np.hstack([H.imag, H.real])
    return np.vstack([top, bottom]).astype(np.complex128)


def real_embed_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    return np.concatenate([v.real, v.imag]).astype(np.complex128)


# -- text format ---------------------------------------------------------------

def _format_complex(z: complex) -> str:
    re_, im = float(z.real), float(z.imag)
    im_txt = f"{im:.17g}"
    if not im_txt.startswith("-"):
        im_txt = "+" + im_txt
    return f"{re_:.17g}{im_txt}i"


def _parse_complex(tok: str) -> complex:
    # a+bi / a-bi / a / bi, mapped onto Python's own complex literal syntax
    if not tok or any(ch in tok for ch in "jJ() "):
        raise ValueError(f"bad complex literal {tok!r}")
    try:
        return complex(tok[:-1] + "j") if tok[-1] in "iI" else complex(float(tok))
    except ValueError:
        raise ValueError(f"bad complex literal {tok!r}") from None


def format_matrix(mat) -> str:
    """Render as ``"m n"`` followed by one whitespace-separated row per line."""
    M = np.asarray(mat, dtype=np.complex128)
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(_format_complex(z) for z in row) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str, source: str = "<string>") -> np.ndarray:
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise ValueError(f"{source}: empty matrix file")
    lineno, header = lines[0]
    try:
        m, n = (int(t) for t in header.split())
    except ValueError:
        raise ValueError(f"{source}:{lineno}: expected 'm n' header, got {header!r}") from None
    if len(lines) - 1 != m:
        raise ValueError(f"{source}: header declares {m} rows but {len(lines) - 1} follow")
    out = np.empty((m, n), dtype=np.complex128)
    for r, (lineno, line) in enumerate(lines[1:]):
        toks = line.split()
        if len(toks) != n:
            raise ValueError(f"{source}:{lineno}: expected {n} entries, got {len(toks)}")
        for c, tok in enumerate(toks):
            try:
                out[r, c] = _parse_complex(tok)
            except ValueError as exc:
                raise ValueError(f"{source}:{lineno}:{c + 1}: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{source}: non-finite entries")
    return out


def read_matrix(path: str | Path) -> np.ndarray:
    return parse_matrix(Path(path).read_text(), source=str(path))


def write_matrix(path: str | Path, mat) -> None:
    Path(path).write_text(format_matrix(mat))
