import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from desitter_toda.mink import ALGEBRA, bracket_basis, membership_residual, upsilon
from desitter_toda.rootsys import (
    GradePreconditionError,
    InvalidRankError,
    apply_coxeter,
    bracket,
    build_root_system,
    coxeter_closed_form,
    coxeter_deviation,
    grade_decomposition,
    grade_project,
    is_cyclic,
    killing,
    killing_adjoint,
    killing_factor,
    root_table,
    verify_exact,
)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_exact_table(n):
    t0 = time.perf_counter()
    rep = verify_exact(n)
    assert rep.passed
    assert rep.root_action == 0 and rep.conjugation == 0 and rep.cartan_brackets == 0
    assert rep.count == 2 * n * n
    assert time.perf_counter() - t0 < 5


def test_invalid_rank():
    with pytest.raises(InvalidRankError):
        build_root_system(0)


def test_lowest_root_and_heights():
    rs = build_root_system(2)
    assert rs.lowest_root.simple == (-2, -1)
    assert build_root_system(3).lowest_root.height == -5


def test_table_vector_of_first_simple_root():
    rs = build_root_system(2)
    assert np.array_equal(rs.simple_vector(1), bracket_basis(2, 1, 2) + 1j * bracket_basis(2, 1, 3))


def test_bracket_examples():
    rs = build_root_system(2)
    X = rs.simple_vector(1)
    assert not np.any(bracket(X, X))
    assert np.array_equal(bracket(bracket_basis(2, 1, 2), bracket_basis(2, 1, 3)), bracket_basis(2, 2, 3))
    B = bracket(rs.simple_vector(1), rs.negative_simple_vector(1))
    assert np.allclose(B, -2j * bracket_basis(2, 2, 3), atol=0)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_coxeter_closed_form(n):
    rs = build_root_system(n)
    assert coxeter_deviation(rs) < 1e-10
    C = coxeter_closed_form(n)
    assert np.allclose(C[1:3, 1:3], [[np.cos(np.pi / n), np.sin(np.pi / n)], [-np.sin(np.pi / n), np.cos(np.pi / n)]])
    assert np.array_equal(C[-2:, -2:], -np.eye(2))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_coxeter_eigenvalues_follow_height(n):
    rs = build_root_system(n)
    for lab in rs.roots:
        R = rs.vector(lab)
        assert np.allclose(apply_coxeter(rs, R), np.exp(1j * np.pi * lab.height / n) * R, atol=1e-10)
    for H in rs.cartan_basis:
        assert np.allclose(apply_coxeter(rs, H), H, atol=1e-12)


def test_coxeter_examples_rank_two():
    rs = build_root_system(2)
    for j in (0, 1):
        R = rs.simple_vector(j)
        assert np.allclose(apply_coxeter(rs, R), 1j * R, atol=1e-12)


def test_coxeter_scalar_period_is_2n():
    rs = build_root_system(3)
    R = rs.simple_vector(1)
    assert not np.allclose(apply_coxeter(rs, R, 3), R)
    assert np.allclose(apply_coxeter(rs, R, 6), R, atol=1e-12)


def random_real_algebra(n, rng):
    K = rng.normal(size=(2 * n + 1, 2 * n + 1))
    return upsilon(n) @ (K - K.T)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_coxeter_preserves_real_form(n, seed):
    rs = build_root_system(n)
    X = random_real_algebra(n, np.random.default_rng(seed))
    Y = apply_coxeter(rs, X)
    assert np.abs(np.imag(Y)).max() < 1e-12
    assert membership_residual(np.real(Y), ALGEBRA) < 1e-12


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_grades_sum_to_input(n, seed):
    rs = build_root_system(n)
    rng = np.random.default_rng(seed)
    X = random_real_algebra(n, rng) + 1j * random_real_algebra(n, rng)
    assert np.abs(sum(grade_decomposition(rs, X)) - X).max() < 1e-10


@given(st.integers(2, 4), st.integers(0, 7), st.integers(0, 7), st.integers(0, 2**31 - 1))
def test_grading_closure(n, j, l, seed):
    rs = build_root_system(n)
    rng = np.random.default_rng(seed)
    X = grade_project(rs, random_real_algebra(n, rng) + 1j * random_real_algebra(n, rng), j)
    Y = grade_project(rs, random_real_algebra(n, rng) + 1j * random_real_algebra(n, rng), l)
    Z = bracket(X, Y)
    outside = Z - grade_project(rs, Z, (j + l) % rs.period)
    assert np.abs(outside).max() < 1e-10


def test_grade_projection_examples():
    rs = build_root_system(2)
    R = rs.simple_vector(1)
    assert np.allclose(grade_project(rs, R, 1), R, atol=1e-14)
    assert np.abs(grade_project(rs, R, 0)).max() < 1e-14
    for H in rs.cartan_basis:
        assert np.allclose(grade_project(rs, H, 0), H, atol=1e-14)


def test_grade_one_brackets_leave_grade_one(rng):
    rs = build_root_system(3)
    X = grade_project(rs, random_real_algebra(3, rng) + 0j, 1)
    Y = grade_project(rs, random_real_algebra(3, rng) + 0j, 1)
    assert np.abs(grade_project(rs, bracket(X, Y), 1)).max() < 1e-10


def test_cyclic_examples():
    rs = build_root_system(2)
    W = sum(rs.simple_vector(j) for j in range(3))
    rep = is_cyclic(rs, W)
    assert rep.cyclic
    assert np.allclose(rep.coefficients, 1)
    assert not is_cyclic(rs, rs.simple_vector(1)).cyclic
    assert not is_cyclic(rs, rs.simple_vector(1) + rs.simple_vector(2)).cyclic


def test_cyclic_precondition():
    rs = build_root_system(2)
    with pytest.raises(GradePreconditionError):
        is_cyclic(rs, rs.cartan_basis[0] + 0j)


def test_rank_one_semisimplicity():
    rs = build_root_system(1)
    rep = is_cyclic(rs, rs.simple_vector(0) + rs.simple_vector(1))
    assert rep.cyclic and rep.semisimple


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_killing_factor_is_checked_once(n):
    assert killing_factor(n) == (2 * n - 1) / 2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_killing_shortcut_matches_adjoint(n, rng):
    X = random_real_algebra(n, rng)
    Y = random_real_algebra(n, rng)
    assert abs(killing(X, Y) - killing_adjoint(X, Y)) < 1e-9 * max(1, abs(killing(X, Y)))


def test_pi_swaps_ends():
    for n in (1, 2, 4):
        pi = build_root_system(n).pi
        assert pi[0] == n and pi[n] == 0
        assert all(pi[j] == j for j in range(1, n))


def test_root_table_rows():
    rows = root_table(build_root_system(2))
    assert len(rows) == 8
    assert rows[0]["height"] == max(r["height"] for r in rows)
