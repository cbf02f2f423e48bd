import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clll.analysis import (BABAI_EPS, check_basis_properties, defect_bound,
                           empirical_proximity, measure_angles, proximity_bounds,
                           verify_geometric_sum, verify_angle_chain, zf_distances, zf_ratio_base,
                           zf_ratio_crossing)
from clll.lattice import shortest_vector_bruteforce
from clll.linalg import gso
from clll.reduction import ReductionParams, clll_reduce, orthogonality_defect, reduce_batch

from conftest import cgauss


def reduced(rng, n, delta, count):
    H = cgauss(rng, count, n, n)
    return reduce_batch(H, ReductionParams(delta, allow_delta_one=delta == 1.0)).reduced


# -- closed-form bounds ---------------------------------------------------------------

def test_two_dims_delta_one_is_three_db():
    b = proximity_bounds(2, 1.0)
    assert b.alpha == 2
    assert b.sic_bound == pytest.approx(2)
    assert b.zf_bound == pytest.approx(2)


@pytest.mark.parametrize("n", range(1, 9))
def test_three_quarters_ratio_is_one(n):
    b = proximity_bounds(n, 0.75)
    assert b.beta ** 2 == pytest.approx(b.alpha)
    assert b.sic_ratio_estimate == pytest.approx(1)


@given(st.floats(0.51, 1.0), st.integers(1, 10))
def test_minimised_bound_never_exceeds_simple_form(delta, n):
    b = proximity_bounds(n, delta)
    assert b.alpha >= 2
    for tight, simple in zip(b.sic_bound_per_index, b.sic_simple_per_index):
        assert tight <= simple * (1 + 1e-12)
    assert max(b.sic_simple_per_index) == pytest.approx(b.sic_bound)


@given(st.floats(0.51, 1.0))
def test_beta_square_vs_alpha(delta):
    if abs(delta - 0.75) > 1e-6:
        assert (delta - 0.25) ** 2 > delta - 0.5


def test_zf_ratio_base_value():
    assert zf_ratio_base(0.75) == pytest.approx(1.74, abs=0.005)


def test_zf_ratio_crossing():
    d = zf_ratio_crossing()
    assert zf_ratio_base(d) == pytest.approx(1, abs=1e-9)
    assert zf_ratio_base(d - 0.01) < 1 < zf_ratio_base(d + 0.01)
    # the closed form crosses one near 0.553, below the 0.58 quoted in prose
    assert d == pytest.approx(0.55277, abs=1e-4)


def test_bounds_reject_bad_delta():
    with pytest.raises(ValueError):
        proximity_bounds(3, 0.5)
    with pytest.raises(ValueError):
        proximity_bounds(0, 0.75)


def test_defect_bound():
    assert defect_bound(3, 0.75) == pytest.approx(4 ** 1.5)


# -- angles ----------------------------------------------------------------------------

def test_angles_orthogonal():
    np.testing.assert_allclose(measure_angles(np.diag([1.0, 2.0, 3.0])).sin_theta, 1)


def test_angles_thirty_degrees():
    t = math.radians(30)
    a = measure_angles(np.array([[1, math.cos(t)], [0, math.sin(t)]]))
    np.testing.assert_allclose(a.sin_theta, [0.5, 0.5], atol=1e-12)


def test_angles_agree_with_pseudo_inverse(rng):
    H = cgauss(rng, 5, 4)
    np.testing.assert_allclose(measure_angles(H).d_zf, zf_distances(H), rtol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_angle_lower_bound(rng, n):
    delta = 0.75
    alpha = 4
    for B in reduced(rng, n, delta, 500):
        s = measure_angles(B).sin_theta
        for i in range(n):  # 0-based column i is column i + 1 in 1-based notation
            lower = BABAI_EPS ** (n - 1 - i) * alpha ** ((1 - n) / 2)
            assert s[i] >= lower * (1 - 1e-9)


# -- empirical proximity ------------------------------------------------------------------

def test_empirical_two_dims_delta_one(rng):
    rep = empirical_proximity(reduced(rng, 2, 1.0, 1000), 1.0)
    assert rep.samples == 1000
    assert rep.sic_max.max() <= 2 + 1e-9
    assert rep.violations == 0


def test_empirical_orthogonal_basis():
    B = np.diag([1.0, 2.0]).astype(complex) + 0j
    rep = empirical_proximity([B], 0.75)
    np.testing.assert_allclose(rep.sic_max, [1, 0.25])


def test_empirical_three_dims(rng):
    rep = empirical_proximity(reduced(rng, 3, 0.75, 300), 0.75)
    assert rep.violations == 0
    assert np.all(rep.sic_max <= np.array(rep.bounds.sic_bound_per_index) * (1 + 1e-9))


def test_empirical_requires_samples():
    with pytest.raises(ValueError):
        empirical_proximity([], 0.75)


# -- geometric sum ---------------------------------------------------------------------------

def test_geometric_sum_grid():
    rep = verify_geometric_sum([2 + 0.5 * k for k in range(13)], 20)
    assert rep["ok"] and not rep["violations"]
    first = [r for r in rep["rows"] if r[1] == 1]
    assert all(r[4] == 0 for r in first)
    assert rep["min_margin"] == 0


def test_geometric_sum_alpha_two():
    assert verify_geometric_sum([2.0], 20)["ok"]


def test_geometric_sum_needs_alpha_at_least_two():
    rep = verify_geometric_sum([1.5], 20)
    assert not rep["ok"] and rep["violations"]


# -- angle chain --------------------------------------------------------------------------

def test_angle_chain_orthogonal():
    B = np.diag([1.0, 2.0, 3.0]).astype(complex)
    for i in range(3):
        c = verify_angle_chain(B, i, 0.75)
        expected = np.zeros(3)
        expected[i] = -1
        np.testing.assert_allclose(c.gamma, expected, atol=1e-12)
        assert all(c.checks.values())


def test_angle_chain_two_dims_delta_one(rng):
    for B in reduced(rng, 2, 1.0, 300):
        c = verify_angle_chain(B, 1, 1.0)
        assert c.sin_theta >= math.sqrt(2) / 2 - 1e-9
        assert all(c.checks.values())


def test_angle_chain_gamma_definition(rng):
    B = reduced(rng, 4, 0.99, 1)[0]
    c = verify_angle_chain(B, 1, 0.99)
    mu = gso(B).mu
    a = c.coefficients
    for j in range(4):
        assert c.gamma[j] == pytest.approx(a[j] + sum(a[t] * mu[t, j] for t in range(j + 1, 4)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_angle_chain_random(rng, n):
    for B in reduced(rng, n, 0.99, 200):
        for i in range(n):
            assert all(verify_angle_chain(B, i, 0.99).checks.values())


def test_angle_chain_index_check():
    with pytest.raises(IndexError):
        verify_angle_chain(np.eye(2), 2, 0.75)


# -- basis properties ----------------------------------------------------------------------

def test_properties_orthogonal_is_tight():
    rep = check_basis_properties(np.diag([1.0, 2.0, 4.0]).astype(complex), 0.75)
    assert rep.product_norms == pytest.approx(rep.volume)
    assert rep.ok


@pytest.mark.parametrize("n", range(2, 7))
def test_properties_random(rng, n):
    for B in reduced(rng, n, 0.75, 100):
        rep = check_basis_properties(B, 0.75)
        assert rep.ok, rep.violations
        assert rep.product_norms / rep.volume == pytest.approx(orthogonality_defect(B))


@pytest.mark.parametrize("n", [2, 3])
def test_properties_with_minima(rng, n):
    for B in reduced(rng, n, 0.75, 100):
        rep = check_basis_properties(B, 0.75, shortest_vector_bruteforce)
        assert rep.ok, rep.violations
        assert rep.minima is not None


def test_properties_uses_recorded_delta(rng):
    out = clll_reduce(cgauss(rng, 3, 3), ReductionParams(0.6))
    assert check_basis_properties(out).delta == 0.6
