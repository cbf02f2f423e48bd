"""Proximity-factor bounds and numeric checks of the reduced-basis theorems.

Indices in this module are 0-based, so a bound quoted for "the i-th basis
vector" in 1-based notation appears at position ``i - 1`` of the lists.
All checks use a relative slack of ``SLACK`` to absorb rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeOracleResult, shortest_vector_bruteforce
from .linalg import as_matrix, gso, pseudo_inverse, qr_decompose
from .reduction import ReductionOutput

__all__ = [
    "ProximityBounds",
    "AngleMeasurement",
    "BabaiCertificate",
    "ProximityReport",
    "PropertyReport",
    "proximity_bounds",
    "zf_ratio_base",
    "zf_ratio_crossing",
    "measure_angles",
    "empirical_proximity",
    "geometric_sum_rows",
    "verify_geometric_sum",
    "verify_angle_chain",
    "check_basis_properties",
    "zf_distances",
    "defect_bound",
]

SLACK = 1e-9
ZF_CONST = (3 + 2 * math.sqrt(2)) / 2
BABAI_EPS = 2 / (2 + math.sqrt(2))


def _alpha(delta: float) -> float:
    if not 0.5 < delta <= 1.0:
        raise ValueError(f"delta must lie in (1/2, 1], got {delta}")
    return 1.0 / (delta - 0.5)


def _sic_term(alpha: float, j: int) -> float:
    """``1 + (alpha^j - alpha) / (2 (alpha - 1))`` for 1-based ``j``."""
    return 1 + 0.5 * (alpha ** j - alpha) / (alpha - 1)


@dataclass(frozen=True)
class ProximityBounds:
    n: int
    delta: float
    alpha: float
    beta: float
    sic_bound_per_index: tuple[float, ...]  # min over j <= i form
    sic_simple_per_index: tuple[float, ...]  # alpha^(i-1) form
    sic_bound: float
    zf_bound_per_index: tuple[float, ...]
    zf_bound: float
    rlll_sic_bound: float
    rlll_zf_bound: float

    @property
    def sic_ratio_estimate(self) -> float:
        """``beta^(2n) / alpha^n``: real over complex SIC bound, exponents' -1 dropped."""
        return self.beta ** (2 * self.n) / self.alpha ** self.n


def proximity_bounds(n: int, delta: float) -> ProximityBounds:
    """Closed-form upper bounds on the SIC and ZF proximity factors.

    For ``n == 2`` the ZF bound uses the planar refinement: both angles
    between a vector and the line through the other are equal, so the
    per-index bound of the second vector applies to both.
    """
    if n < 1:
        raise ValueError("n must be positive")
    alpha = _alpha(delta)
    beta = 1.0 / (delta - 0.25)
    sic = tuple(min(_sic_term(alpha, j) * alpha ** (i - j) for j in range(1, i + 1))
                for i in range(1, n + 1))
    simple = tuple(alpha ** (i - 1) for i in range(1, n + 1))
    zf = tuple(ZF_CONST ** (n - i) * alpha ** (n - 1) for i in range(1, n + 1))
    zf_bound = zf[-1] if n == 2 else (ZF_CONST * alpha) ** (n - 1)
    return ProximityBounds(
        n=n, delta=delta, alpha=alpha, beta=beta,
        sic_bound_per_index=sic, sic_simple_per_index=simple, sic_bound=alpha ** (n - 1),
        zf_bound_per_index=zf, zf_bound=zf_bound,
        rlll_sic_bound=beta ** (2 * n - 1), rlll_zf_bound=(9 * beta / 4) ** (2 * n - 1),
    )


def zf_ratio_base(delta: float) -> float:
    """Per-dimension base of the real/complex ZF bound ratio,
    ``(9/4)^2 (delta - 1/2) / (((3 + 2 sqrt 2)/2) (delta - 1/4)^2)``."""
    return (9 / 4) ** 2 / ZF_CONST * (delta - 0.5) / (delta - 0.25) ** 2


def zf_ratio_crossing(lo: float = 0.5 + 1e-12, hi: float = 0.75, tol: float = 1e-12) -> float:
    """The ``delta`` at which :func:`zf_ratio_base` equals one (bisection)."""
    f = lambda d: zf_ratio_base(d) - 1  # noqa: E731
    if f(lo) * f(hi) > 0:
        raise ValueError("no sign change in the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AngleMeasurement:
    """``theta[i]``: acute angle between ``h_i`` and the span of the other columns."""

    theta: np.ndarray
    sin_theta: np.ndarray
    d_zf: np.ndarray  # ||h_i|| sin(theta_i)


def measure_angles(basis) -> AngleMeasurement:
    H = as_matrix(basis, name="basis")
    n = H.shape[1]
    norms = np.linalg.norm(H, axis=0)
    d = np.empty(n)
    for i in range(n):
        others = np.delete(H, i, axis=1)
        h = H[:, i]
        if others.shape[1]:
            Q, _ = qr_decompose(others)
            h = h - Q @ (Q.conj().T @ h)
        d[i] = np.linalg.norm(h)
    s = np.clip(d / norms, 0.0, 1.0)
    return AngleMeasurement(np.arcsin(s), s, d)


def zf_distances(basis) -> np.ndarray:
    """``1 / ||row_i(H^+)||``, an independent route to ``||h_i|| sin(theta_i)``."""
    return 1.0 / np.linalg.norm(pseudo_inverse(basis), axis=1)


# -- empirical proximity factors ------------------------------------------------

@dataclass
class ProximityReport:
    n: int
    delta: float
    samples: int
    sic_max: np.ndarray  # per index: max of lambda^2 / H_i
    zf_max: np.ndarray  # per index: max of lambda^2 / (||h_i||^2 sin^2 theta_i)
    bounds: ProximityBounds
    sic_violations: int = 0
    sic_simple_violations: int = 0
    zf_violations: int = 0

    @property
    def violations(self) -> int:
        return self.sic_violations + self.sic_simple_violations + self.zf_violations


def _basis_of(item) -> np.ndarray:
    return item.reduced_basis if isinstance(item, ReductionOutput) else as_matrix(item)


def empirical_proximity(reduced_bases, delta: float, oracle=shortest_vector_bruteforce
                        ) -> ProximityReport:
    """Sample maxima of the distance ratios over reduced bases (``n <= 3``).

    Every sample is also compared with the closed-form bounds; the counts of
    samples exceeding them are reported. The suprema themselves are not
    computable, so the maxima are lower estimates only.
    """
    samples = [_basis_of(b) for b in reduced_bases]
    if not samples:
        raise ValueError("no bases given")
    n = samples[0].shape[1]
    b = proximity_bounds(n, delta)
    sic_max = np.zeros(n)
    zf_max = np.zeros(n)
    rep = ProximityReport(n, delta, len(samples), sic_max, zf_max, b)
    sic_b = np.array(b.sic_bound_per_index)
    simple_b = np.array(b.sic_simple_per_index)
    zf_b = np.array(b.zf_bound_per_index)
    for H in samples:
        lam2 = oracle(H).shortest_norm_sq
        sic = lam2 / gso(H).hnorm
        zf = lam2 / measure_angles(H).d_zf ** 2
        np.maximum(sic_max, sic, out=sic_max)
        np.maximum(zf_max, zf, out=zf_max)
        rep.sic_violations += int(np.any(sic > sic_b * (1 + SLACK)))
        rep.sic_simple_violations += int(np.any(sic > simple_b * (1 + SLACK)))
        rep.zf_violations += int(np.any(zf > zf_b * (1 + SLACK)) or np.max(zf) > b.zf_bound * (1 + SLACK))
    return rep


# -- auxiliary inequalities-----------------------------------------------------

def geometric_sum_rows(alpha_grid, j_max: int):
    """Yield ``(alpha, j, lhs, rhs, margin)`` for
    ``1 + (alpha^j - alpha) / (2 (alpha - 1)) <= alpha^(j - 1)``."""
    for alpha in alpha_grid:
        for j in range(1, j_max + 1):
            lhs = _sic_term(alpha, j)
            rhs = alpha ** (j - 1)
            yield float(alpha), j, lhs, rhs, rhs - lhs


def verify_geometric_sum(alpha_grid, j_max: int = 20) -> dict:
    """Evaluate the inequality on a grid; ``violations`` lists failing ``(alpha, j)``.

    The same inequality in its rearranged form
    ``alpha^j - alpha^(j-1) >= alpha^j / 2 + alpha / 2 - 1`` is checked too.
    """
    rows = list(geometric_sum_rows(alpha_grid, j_max))
    bad = []
    for alpha, j, lhs, rhs, margin in rows:
        tol = SLACK * max(1.0, abs(rhs))
        rearranged = alpha ** j - alpha ** (j - 1) - (0.5 * alpha ** j + 0.5 * alpha - 1)
        if margin < -tol or rearranged < -tol * alpha:
            bad.append((alpha, j))
    return {"rows": rows, "violations": bad, "ok": not bad,
            "min_margin": min(r[4] for r in rows)}


@dataclass(frozen=True)
class BabaiCertificate:
    """Quantities from the angle lower-bound argument for column ``i``.

    ``coefficients`` are the ``a_t`` of ``sum_t a_t h_t`` (``a_i = -1``),
    i.e. minus the residual of ``h_i`` after projecting onto the other columns.
    """

    i: int
    coefficients: np.ndarray
    gamma: np.ndarray
    epsilon: float
    sin_theta: float
    sin_theta_lower: float
    gamma_tail_sq: float  # sum_{j >= i} |gamma_j|^2
    rhs_full: float  # sum_j |gamma_j|^2 H_j / ||h_i||^2
    rhs_tail: float  # same sum restricted to j >= i
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def verify_angle_chain(basis, i: int, delta: float) -> BabaiCertificate:
    """Check the chain of inequalities behind the angle lower bound for column ``i``.

    Checks: ``gamma_tail_sq >= epsilon^2`` (needs ``|mu| <= sqrt(2)/2``, true
    for size-reduced bases), ``sin^2 >= rhs_full``, ``sin^2 >= rhs_tail``, and
    ``sin(theta_i) >= epsilon * alpha^((1 - n) / 2)``.
    """
    H = as_matrix(basis, name="basis")
    n = H.shape[1]
    if not 0 <= i < n:
        raise IndexError(f"column {i} out of range for n = {n}")
    alpha = _alpha(delta)
    g = gso(H)
    mu = np.tril(g.mu, -1) + np.eye(n)
    others = np.delete(np.arange(n), i)
    a = np.zeros(n, dtype=np.complex128)
    a[i] = -1
    if others.size:
        coef, *_ = np.linalg.lstsq(H[:, others], H[:, i], rcond=None)
        a[others] = coef
    # sum_t a_t h_t = sum_j gamma_j h_j*  with  gamma_j = sum_{t >= j} a_t mu_tj
    gamma = mu.T @ a
    hi2 = float(np.sum(np.abs(H[:, i]) ** 2))
    sin2 = float(np.sum(np.abs(H @ a) ** 2)) / hi2
    eps = BABAI_EPS ** (n - 1 - i)
    tail = float(np.sum(np.abs(gamma[i:]) ** 2))
    full = float(np.sum(np.abs(gamma) ** 2 * g.hnorm)) / hi2
    part = float(np.sum(np.abs(gamma[i:]) ** 2 * g.hnorm[i:])) / hi2
    lower = eps * alpha ** ((1 - n) / 2)
    sin = math.sqrt(max(sin2, 0.0))
    checks = {
        "gamma_tail": tail >= eps ** 2 * (1 - SLACK),
        "sin_full": sin2 >= full * (1 - 1e-7) - 1e-12,
        "sin_tail": sin2 >= part * (1 - SLACK),
        "sin_lower": sin >= lower * (1 - SLACK),
    }
    return BabaiCertificate(i, a, gamma, eps, sin, lower, tail, full, part, checks)


# -- reduced-basis properties ----------------------------------------------------

@dataclass
class PropertyReport:
    n: int
    delta: float
    volume: float
    product_norms: float
    product_upper: float
    first_norm: float
    first_upper: float
    minima: LatticeOracleResult | None
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_basis_properties(reduction, delta: float | None = None, oracle=None
                           ) -> PropertyReport:
    """Norm-product, first-vector and (with an oracle) successive-minima
    sandwich bounds for a reduced basis.

    ``reduction`` is a :class:`ReductionOutput` or a basis; ``delta`` defaults
    to the one recorded in the output. The sandwich reads the minima as
    squared lengths: ``alpha^(1-n) lambda_i^2 <= ||h_i||^2 <= alpha^(n-1) lambda_i^2``.
    """
    H = _basis_of(reduction)
    if delta is None:
        delta = reduction.delta
    alpha = _alpha(delta)
    n = H.shape[1]
    log_vol = 0.5 * float(np.sum(np.log(gso(H).hnorm)))
    norms = np.linalg.norm(H, axis=0)
    log_prod = float(np.sum(np.log(norms)))
    bad = []
    if log_prod < log_vol - SLACK:
        bad.append("product below volume")
    if log_prod > log_vol + n * (n - 1) / 4 * math.log(alpha) + SLACK:
        bad.append("product above alpha^(n(n-1)/4) volume")
    first_upper = (n - 1) / 4 * math.log(alpha) + log_vol / n
    if math.log(norms[0]) > first_upper + SLACK:
        bad.append("first vector too long")
    minima = None
    if oracle is not None:
        minima = oracle(H)
        lam2 = np.asarray(minima.successive_minima_sq)
        h2 = norms ** 2
        lo, hi = alpha ** (1 - n) * lam2, alpha ** (n - 1) * lam2
        for i in range(n):
            if h2[i] < lo[i] * (1 - SLACK) or h2[i] > hi[i] * (1 + SLACK):
                bad.append(f"minima sandwich fails at column {i}")
    return PropertyReport(n, delta, math.exp(log_vol), math.exp(log_prod),
                          math.exp(log_vol + n * (n - 1) / 4 * math.log(alpha)),
                          float(norms[0]), math.exp(first_upper), minima, bad)


def defect_bound(n: int, delta: float) -> float:
    """Upper bound ``alpha^(n(n-1)/4)`` on the orthogonality defect of a reduced basis."""
    return _alpha(delta) ** (n * (n - 1) / 4)

