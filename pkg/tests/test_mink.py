import numpy as np
import pytest
from hypothesis import given, strategies as st

from desitter_toda.mink import (
    ALGEBRA,
    GROUP,
    DimensionError,
    basis_vector,
    bilinear,
    bracket_basis,
    commutator,
    conjugate_transpose_u,
    from_json,
    membership,
    membership_residual,
    norm2,
    project_to_group,
    rank_of,
    to_json,
    upsilon,
)
from desitter_toda.rootsys import coxeter_closed_form
from scipy.linalg import expm

ranks = st.integers(min_value=1, max_value=5)


def random_algebra(n, rng, scale=1.0):
    K = rng.normal(size=(2 * n + 1, 2 * n + 1))
    return scale * upsilon(n) @ (K - K.T)


def test_basis_pairings():
    for n in (1, 2, 4):
        assert bilinear(basis_vector(n, 1), basis_vector(n, 1)) == 1
        assert bilinear(basis_vector(n, 2 * n + 1), basis_vector(n, 2 * n + 1)) == -1


def test_bilinear_direct_expansion():
    assert bilinear(np.array([1, 0, 0, 0, 1]), np.array([1, 0, 0, 0, -1])) == 2


def test_bilinear_dimension_mismatch_names_both():
    with pytest.raises(DimensionError) as exc:
        bilinear(np.ones(5), np.ones(7))
    assert "5" in str(exc.value) and "7" in str(exc.value)


def test_norm2_examples():
    n = 2
    assert norm2(basis_vector(n, 1)) == 1
    assert norm2(basis_vector(n, 4) + basis_vector(n, 5)) == 0
    assert norm2(1j * basis_vector(n, 2)) == 1


def test_bilinear_has_no_conjugation():
    e = basis_vector(2, 2)
    assert bilinear(1j * e, 1j * e) == -1


def test_rank_of_rejects_even_dimension():
    with pytest.raises(ValueError):
        rank_of(4)


def test_membership_examples():
    assert membership(np.eye(5), GROUP).residual == 0
    X = bracket_basis(2, 2, 3)
    assert np.array_equal(X, basis_outer(5, 2, 1) - basis_outer(5, 1, 2))
    assert membership(X, ALGEBRA).residual == 0
    assert membership(coxeter_closed_form(2), GROUP).residual < 1e-15


def basis_outer(d, j, k):
    E = np.zeros((d, d))
    E[j, k] = 1
    return E


def test_boost_basis_element_is_symmetric():
    X = bracket_basis(2, 4, 5)
    assert np.array_equal(X, X.T)
    assert membership_residual(X, ALGEBRA) == 0


def test_non_member_detected():
    M = np.eye(5)
    M[0, 0] = 2
    assert not membership(M, GROUP).passed


@given(ranks, st.integers(0, 2**31 - 1))
def test_exponential_of_algebra_is_in_group(n, seed):
    X = random_algebra(n, np.random.default_rng(seed), 0.5)
    assert membership_residual(X, ALGEBRA) < 1e-14
    G = expm(X)
    assert membership_residual(G, GROUP) < 1e-9 * max(1.0, np.abs(G).max() ** 2)
    assert np.allclose(conjugate_transpose_u(G) @ G, np.eye(2 * n + 1), atol=1e-8 * np.abs(G).max() ** 2)


@given(ranks, st.integers(0, 2**31 - 1))
def test_commutator_closes_on_algebra(n, seed):
    rng = np.random.default_rng(seed)
    X, Y = random_algebra(n, rng), random_algebra(n, rng)
    assert membership_residual(commutator(X, Y), ALGEBRA) < 1e-12


@given(ranks, st.integers(0, 2**31 - 1))
def test_group_preserves_pairing(n, seed):
    rng = np.random.default_rng(seed)
    G = expm(random_algebra(n, rng, 0.3))
    x = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
    y = rng.normal(size=2 * n + 1) + 1j * rng.normal(size=2 * n + 1)
    assert abs(bilinear(G @ x, G @ y) - bilinear(x, y)) < 1e-9 * np.abs(G).max() ** 2 * 10


def test_projection_restores_group(rng):
    G = expm(random_algebra(2, rng, 0.3))
    M = G + 1e-6 * rng.normal(size=G.shape)
    assert membership_residual(M, GROUP) > 1e-7
    assert membership_residual(project_to_group(M), GROUP) < 1e-13


def test_json_round_trip(rng):
    a = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    assert np.array_equal(from_json(to_json(a)), a)
