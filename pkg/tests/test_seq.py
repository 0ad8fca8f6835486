import numpy as np
import pytest

from desitter_toda.catalog import clifford_gauss_map, elliptic_sphere_map
from desitter_toda.lattice import Lattice
from desitter_toda.mink import norm2
from desitter_toda.seq import (
    AmbiguityError,
    DegenerateInputError,
    TorusMap,
    derive,
    harmonic_residual,
    harmonic_sequence,
    holomorphy_residual,
    isotropy_order,
    pairing_spread,
    sequence_identity_residuals,
    spacelike_violation,
)

SQ2 = np.sqrt(2)


def constant_map(N=16):
    v = np.zeros((N, N, 5), complex)
    v[..., 0] = 1
    return TorusMap(2, Lattice.rectangle(1, 1), v)


def renormalized(values):
    return values / np.sqrt(norm2(values))[..., None]


def test_rejects_points_off_de_sitter_space():
    v = np.zeros((8, 8, 5), complex)
    v[..., 0] = 2
    with pytest.raises(ValueError):
        TorusMap(2, Lattice.rectangle(1, 1), v)


def test_constant_map():
    f = constant_map()
    assert np.abs(derive(f, 1, 0)).max() == 0
    assert harmonic_residual(f) == 0
    with pytest.raises(DegenerateInputError):
        isotropy_order(f)


def test_refuses_excessive_order():
    with pytest.raises(ValueError):
        derive(clifford_gauss_map(16, 16), 4, 3)


def test_clifford_derivatives_closed_form():
    f = clifford_gauss_map(16, 16)
    z = f.nodes()
    x, y = z.real, z.imag
    zero = 0 * x
    fz = 0.5 * np.stack([-np.sin(x), np.cos(x), -1j * np.sin(y), 1j * np.cos(y), zero], -1) / SQ2
    fzz = np.stack([-np.cos(x), -np.sin(x), -np.cos(y), -np.sin(y), zero], -1) / (4 * SQ2)
    assert np.abs(derive(f, 1, 0) - fz).max() < 1e-13
    assert np.abs(derive(f, 2, 0) - fzz).max() < 1e-13
    assert np.abs(derive(f, 1, 1) + f.values / 4).max() < 1e-13


def test_clifford_is_harmonic_and_perturbation_is_not():
    f = clifford_gauss_map(16, 16)
    assert harmonic_residual(f) < 1e-10
    z = f.nodes()
    g = np.zeros(f.values.shape, complex)
    g[..., 4] = np.cos(z.real + 2 * z.imag)
    bumped = TorusMap(2, f.lattice, renormalized(f.values + 0.01 * g))
    assert harmonic_residual(bumped) > 1e-4


@pytest.mark.parametrize("N", [16, 32])
def test_clifford_isotropy_order_is_one(N):
    res = isotropy_order(clifford_gauss_map(N, N))
    assert res.order == 1 and not res.capped
    assert res.pairings[(2, 2)] == pytest.approx(1 / 16, rel=1e-10)


def test_sphere_map_is_isotropic():
    res = isotropy_order(elliptic_sphere_map(128, 128))
    assert res.order == 2 and res.capped


def test_ambiguity_is_reported():
    f = clifford_gauss_map(16, 16)
    with pytest.raises(AmbiguityError):
        isotropy_order(f, tol=1 / 16 / 5)


def test_clifford_sequence_identities():
    f = clifford_gauss_map(16, 16)
    s = harmonic_sequence(f, 2, isotropy=1)
    assert s.everywhere_defined
    res = sequence_identity_residuals(s)
    assert res.max() < 1e-9
    assert spacelike_violation(s, 2) == 0


def test_sequence_of_non_harmonic_map_breaks_recursion():
    f = clifford_gauss_map(16, 16)
    z = f.nodes()
    g = np.zeros(f.values.shape, complex)
    g[..., 4] = np.cos(z.real + 2 * z.imag)
    bumped = TorusMap(2, f.lattice, renormalized(f.values + 0.2 * g))
    res = sequence_identity_residuals(harmonic_sequence(bumped, 2))
    assert res.dbar_recursion > 1e-3


def test_single_entry_sequence_is_vacuous():
    s = harmonic_sequence(clifford_gauss_map(16, 16), 0)
    res = sequence_identity_residuals(s)
    assert res.dbar_recursion == 0 and res.derivative_orthogonality == 0


def test_planted_node_is_filled_by_continuity():
    f = clifford_gauss_map(16, 16)
    clean = harmonic_sequence(f, 2, isotropy=1)
    planted = harmonic_sequence(f, 2, isotropy=1, plant={1: [(5, 7)]})
    assert planted.masks[1][5, 7]
    assert np.abs(planted.entries[2][5, 7] - clean.entries[2][5, 7]).max() < 1e-6


def test_null_nonzero_entry_is_an_obstruction():
    # f = (cosh u cos y, cosh u sin y, 0, 0, sinh u) with u = sin x: f_1 is null but
    # nonzero where cos^2 x = 1, so f_2 cannot be formed there
    lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)

    def fn(z):
        u, v = np.sin(z.real), z.imag
        zero = 0 * u
        return np.stack([np.cosh(u) * np.cos(v), np.cosh(u) * np.sin(v), zero, zero, np.sinh(u)], -1) + 0j

    s = harmonic_sequence(TorusMap.from_function(2, lat, 32, 32, fn), 2)
    assert not s.everywhere_defined
    assert s.r == 1
    assert {(j, p) for j, p, _ in s.obstructions} == {(1, 0), (1, 16)}


def test_vacuum_map_holomorphy_and_constancy(vacuum2):
    assert holomorphy_residual(vacuum2.f) < 1e-8
    _, std = pairing_spread(vacuum2.f)
    assert std < 1e-8
    assert spacelike_violation(vacuum2.s, 2) == 0
    assert sequence_identity_residuals(vacuum2.s).max() < 1e-7
