import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clll.linalg import RankError, gso, real_embed
from clll.reduction import (EV_SWAP, ConvergenceError, ReductionParams, ReductionState,
                            clll_reduce, is_clll_reduced, iteration_cap, lattice_volume,
                            orthogonality_defect, reduce_batch, replay, rlll_reduce,
                            size_reduce, swap_update)

from conftest import cgauss, direct_gso


def assert_valid_reduction(H, out, delta, real=False):
    start = real_embed(H) if real else np.asarray(H, dtype=complex)
    Hr, U = out.reduced_basis, out.unimodular
    assert np.linalg.norm(start @ U - Hr) <= 1e-9 * np.linalg.norm(Hr)
    np.testing.assert_allclose(U, np.round(U.real) + 1j * np.round(U.imag), atol=1e-9)
    assert abs(abs(np.linalg.det(U)) - 1) <= 1e-6
    d0 = np.linalg.det(start.conj().T @ start).real
    d1 = np.linalg.det(Hr.conj().T @ Hr).real
    assert d1 == pytest.approx(d0, rel=1e-6)
    assert is_clll_reduced(Hr, delta).ok


def basis_with_mu(mu):
    """2-D basis whose Gram-Schmidt coefficient mu_21 equals ``mu``."""
    return np.array([[1, mu], [0, 1]], dtype=complex)


# -- params ----------------------------------------------------------------------

@pytest.mark.parametrize("delta", [0.5, 0.3, 1.01])
def test_params_reject_out_of_range(delta):
    with pytest.raises(ValueError):
        ReductionParams(delta)


def test_params_delta_one_needs_flag():
    with pytest.raises(ValueError):
        ReductionParams(1.0)
    assert ReductionParams(1.0, allow_delta_one=True).alpha == 2


# -- clll_reduce -------------------------------------------------------------------

def test_identity_is_already_reduced():
    out = clll_reduce(np.eye(4), ReductionParams(0.75))
    np.testing.assert_array_equal(out.reduced_basis, np.eye(4))
    np.testing.assert_array_equal(out.unimodular, np.eye(4))
    assert out.swap_count == 0 and out.size_reduce_count == 0


def test_delta_one_two_dims_is_gaussian_reduction():
    eps = 1e-3
    H = np.array([[1, 0.5 + 0.5j], [0, eps]])
    out = clll_reduce(H, ReductionParams(1.0, allow_delta_one=True))
    g = gso(out.reduced_basis)
    assert abs(g.mu[1, 0].real) <= 0.5 + 1e-9 and abs(g.mu[1, 0].imag) <= 0.5 + 1e-9
    norms = np.linalg.norm(out.reduced_basis, axis=0)
    assert norms[0] <= norms[1] * (1 + 1e-9)


def test_delta_one_two_dims_random(rng):
    # Gaussian reduction: the first vector is a shortest one, ||h1|| <= ||h2||.
    # The orthogonalized norms themselves need not be ordered.
    for _ in range(300):
        H = cgauss(rng, 2, 2)
        out = clll_reduce(H, ReductionParams(1.0, allow_delta_one=True))
        g = gso(out.reduced_basis)
        norms_sq = np.sum(np.abs(out.reduced_basis) ** 2, axis=0)
        assert norms_sq[0] <= norms_sq[1] * (1 + 1e-9)
        assert max(abs(g.mu[1, 0].real), abs(g.mu[1, 0].imag)) <= 0.5 + 1e-9


def test_random_4x4_determinant_and_defect(rng):
    for _ in range(50):
        H = cgauss(rng, 4, 4)
        out = clll_reduce(H, ReductionParams(0.99))
        assert_valid_reduction(H, out, 0.99)
        assert orthogonality_defect(out.reduced_basis) <= orthogonality_defect(H) * (1 + 1e-12)


@pytest.mark.parametrize("m, n", [(3, 2), (6, 4), (5, 5)])
def test_tall_bases(rng, m, n):
    H = cgauss(rng, m, n)
    assert_valid_reduction(H, clll_reduce(H, ReductionParams(0.75)), 0.75)


@given(st.integers(2, 6), st.sampled_from([0.6, 0.75, 0.99]), st.integers(0, 2 ** 32 - 1),
       st.floats(1e-3, 1e3))
def test_reduction_invariants_property(n, delta, seed, scale):
    H = scale * cgauss(np.random.default_rng(seed), n, n)
    out = clll_reduce(H, ReductionParams(delta))
    assert_valid_reduction(H, out, delta)


@given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
def test_integer_bases_property(n, seed):
    r = np.random.default_rng(seed)
    H = r.integers(-20, 21, (n, n)) + 1j * r.integers(-20, 21, (n, n))
    if abs(np.linalg.det(H)) < 1e-6:
        return
    out = clll_reduce(H, ReductionParams(0.75))
    assert_valid_reduction(H, out, 0.75)


def test_rank_deficient_raises():
    with pytest.raises(RankError):
        clll_reduce([[1, 2], [1j, 2j]])


def test_iteration_cap_enforced(rng):
    H = cgauss(rng, 6, 6) @ np.triu(np.ones((6, 6)) * 7)
    with pytest.raises(ConvergenceError):
        clll_reduce(H, max_iter=2)
    assert iteration_cap(H) >= 10 * 36


def test_potential_decreases_and_bounds_swaps(rng):
    delta = 0.75
    for _ in range(100):
        H = cgauss(rng, 5, 5)
        out = clll_reduce(H, ReductionParams(delta))
        trace = np.concatenate([[out.log_potential_initial], out.potential_trace])
        assert np.all(np.diff(trace) <= math.log(delta) + 1e-9)
        final = trace[-1]
        bound = (out.log_potential_initial - final) / math.log(1 / delta) + out.n
        assert out.swap_count <= bound + 1e-9
        assert len(out.potential_trace) == out.swap_count


def test_flop_tally_is_reproducible(rng):
    H = cgauss(rng, 4, 4)
    a, b = clll_reduce(H), clll_reduce(H)
    np.testing.assert_array_equal(a.flops.counts, b.flops.counts)


# -- size_reduce / swap_update ---------------------------------------------------------

def test_basis_with_mu_helper():
    assert gso(basis_with_mu(0.7 - 1.4j)).mu[1, 0] == pytest.approx(0.7 - 1.4j)


def test_size_reduce_small_mu_is_noop():
    s = ReductionState.from_basis(basis_with_mu(0.3 + 0.2j))
    before = s.copy()
    size_reduce(s, 1, 0)
    np.testing.assert_array_equal(s.basis, before.basis)
    np.testing.assert_array_equal(s.unimodular, before.unimodular)


def test_size_reduce_integer_mu():
    H = basis_with_mu(1.0)
    s = size_reduce(ReductionState.from_basis(H), 1, 0)
    np.testing.assert_allclose(s.basis[:, 1], H[:, 1] - H[:, 0])
    np.testing.assert_allclose(s.unimodular, [[1, -1], [0, 1]])


def test_size_reduce_complex_mu_against_full_gso():
    H = basis_with_mu(0.7 - 1.4j)
    s = size_reduce(ReductionState.from_basis(H), 1, 0)
    np.testing.assert_allclose(s.unimodular[:, 1], [-(1 - 1j), 1])
    g = gso(s.basis)
    assert abs(g.mu[1, 0].real) <= 0.5 and abs(g.mu[1, 0].imag) <= 0.5
    np.testing.assert_allclose(s.mu[1, 0], g.mu[1, 0], atol=1e-12)


def test_size_reduce_index_checks():
    s = ReductionState.from_basis(np.eye(3))
    with pytest.raises(IndexError):
        size_reduce(s, 1, 1)
    with pytest.raises(IndexError):
        swap_update(s, 0)


def test_swap_two_dims_formula(rng):
    for _ in range(20):
        s = ReductionState.from_basis(cgauss(rng, 2, 2))
        h1, h2, mu = s.hnorm[0], s.hnorm[1], s.mu[1, 0]
        swap_update(s, 1)
        assert s.hnorm[0] == pytest.approx(h2 + abs(mu) ** 2 * h1, rel=1e-12)


def test_swap_orthogonal_columns():
    s = ReductionState.from_basis(np.diag([3.0, 1.0, 2.0]).astype(complex))
    swap_update(s, 1)
    np.testing.assert_allclose(s.hnorm, [1, 9, 4])
    assert s.mu[1, 0] == 0


def test_forced_swap_matches_full_gso(rng):
    H = cgauss(rng, 5, 5)
    s = ReductionState.from_basis(H)
    swap_update(s, 2)
    mu, hn = direct_gso(s.basis)
    np.testing.assert_allclose(s.hnorm, hn, rtol=1e-9)
    np.testing.assert_allclose(np.tril(s.mu, -1), np.tril(mu, -1), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(H[:, [0, 2, 1, 3, 4]], s.basis)


def test_replay_reproduces_reduction(rng):
    H = cgauss(rng, 5, 5)
    out = clll_reduce(H, record_trace=True)
    assert (out.trace[:, 0] == EV_SWAP).sum() == out.swap_count
    s = replay(H, out.trace)
    np.testing.assert_allclose(s.basis, out.reduced_basis, atol=1e-12)
    np.testing.assert_array_equal(s.unimodular, out.unimodular)


# -- rlll -------------------------------------------------------------------------

def test_rlll_real_identity():
    out = rlll_reduce(np.eye(4))
    assert out.swap_count == 0
    np.testing.assert_array_equal(out.reduced_basis, np.eye(4))


def test_rlll_complex_2x2(rng):
    H = cgauss(rng, 2, 2)
    out = rlll_reduce(H, ReductionParams(0.75))
    assert out.reduced_basis.shape == (4, 4) and out.real
    assert not out.reduced_basis.imag.any()
    assert not gso(out.reduced_basis).mu.imag.any()
    assert_valid_reduction(H, out, 0.75, real=True)


def test_rlll_norm_bridge(rng):
    H = cgauss(rng, 3, 3)
    assert np.linalg.norm(real_embed(H), axis=0).max() == pytest.approx(
        np.linalg.norm(H, axis=0).max(), rel=1e-15)


# -- predicates ---------------------------------------------------------------------

def test_is_clll_reduced_identity():
    assert is_clll_reduced(np.eye(3), 0.99)


def test_is_clll_reduced_size_violation():
    rep = is_clll_reduced(basis_with_mu(0.6), 0.75)
    assert not rep.ok and rep.size_violations == [(1, 0)]


def test_is_clll_reduced_lovasz_violation():
    rep = is_clll_reduced(np.diag([2.0, 1.0]), 0.75)
    assert rep.lovasz_violations == [1] and not rep.size_violations


def test_orthogonality_defect_values(rng):
    assert orthogonality_defect(np.diag([1.0, 5.0, 2.0])) == pytest.approx(1)
    for n in (2, 3, 4, 5):
        out = clll_reduce(cgauss(rng, n, n), ReductionParams(0.75))
        assert orthogonality_defect(out.reduced_basis) <= 4 ** (n * (n - 1) / 4)
    with pytest.raises(RankError):
        orthogonality_defect([[1, 1], [1, 1]])


def test_lattice_volume(rng):
    H = cgauss(rng, 3, 3)
    assert lattice_volume(H) == pytest.approx(abs(np.linalg.det(H)), rel=1e-10)


# -- batch --------------------------------------------------------------------------

@pytest.mark.parametrize("real", [False, True])
def test_batch_matches_single(rng, real):
    H = cgauss(rng, 40, 3, 3)
    b = reduce_batch(H, ReductionParams(0.99), real=real)
    f = rlll_reduce if real else clll_reduce
    total = 0
    for t in range(len(b)):
        o = f(H[t], ReductionParams(0.99))
        np.testing.assert_allclose(b.reduced[t], o.reduced_basis, atol=1e-12)
        np.testing.assert_array_equal(b.unimodular[t], o.unimodular)
        total += o.flops.total
        np.testing.assert_allclose(b.q[t] @ b.r[t], o.reduced_basis, atol=1e-12)
    assert b.flops.total == pytest.approx(total)
