import numpy as np
import pytest

from desitter_toda import seq, willmore as wm
from desitter_toda.catalog import boost_map, clifford_gauss_map, elliptic_sphere_map
from desitter_toda.frame import extract_primitive_frame
from desitter_toda.io import load_immersion, save_immersion
from desitter_toda.mink import norm2
from desitter_toda.pipelines import adapted_frame_residual, dichotomy_examples


@pytest.fixture(scope="module")
def clifford():
    return wm.clifford_torus(64, 64)


def test_clifford_geometry(clifford):
    p = clifford
    assert np.abs(p.H).max() < 1e-10
    assert np.abs(p.area() - 2 * np.pi**2) < 1e-8
    assert not p.umbilic.any()
    assert np.allclose(np.abs(p.kappa), 1, atol=1e-10)
    assert p.symmetry_residual() < 1e-8
    assert np.abs(np.einsum("...i,...i", p.upsilon, p.upsilon) - 1).max() < 1e-10
    assert np.abs(np.einsum("...i,...i", p.normal, p.upsilon)).max() < 1e-10


def test_clifford_gauss_map_closed_form(clifford):
    f = wm.conformal_gauss_map(clifford)
    ref = clifford_gauss_map(64, 64).values
    assert min(np.abs(f.values - ref).max(), np.abs(f.values + ref).max()) < 1e-10
    assert seq.harmonic_residual(f) < 1e-9
    assert np.abs(norm2(f.values) - 1).max() < 1e-10


def test_clifford_energy(clifford):
    assert abs(wm.willmore_energy(clifford) - 2 * np.pi**2) < 1e-6


def test_clifford_report(clifford):
    rep = wm.verify_willmore(clifford, 1e-9)
    assert rep.passed
    assert rep.classification == wm.SUPERCONFORMAL
    assert abs(rep.pairing_mean - 1 / 16) < 1e-9 and rep.pairing_std < 1e-8
    assert rep.energy == pytest.approx(2 * np.pi**2, abs=1e-6)
    assert "extrinsic" in rep.as_dict()["k_convention"]


def test_great_sphere_has_zero_energy():
    p = wm.sphere_slice(32, 32, 0.0)
    assert abs(wm.willmore_energy(p)) < 1e-10


def test_small_sphere_is_umbilic():
    p = wm.sphere_slice(32, 32, 0.5)
    assert p.umbilic.all()
    with pytest.raises(wm.UmbilicError):
        wm.conformal_gauss_map(p)


@pytest.mark.parametrize("eps", [0.01, 0.001])
def test_perturbation_does_not_lower_energy(eps):
    p = wm.graph_perturbation(64, 64, eps)
    assert wm.willmore_energy(p) >= 2 * np.pi**2 - 1e-4


def test_perturbation_is_not_willmore():
    rep = wm.verify_willmore(wm.graph_perturbation(64, 64, 0.01), 1e-8)
    assert not rep.passed and rep.harmonic > 1e-8


def test_non_minimal_homogeneous_torus_fails():
    p = wm.homogeneous_torus(64, 64, 0.5)
    assert np.abs(p.H).min() > 1e-3
    rep = wm.verify_willmore(p, 1e-8)
    assert not rep.passed


@pytest.mark.parametrize("name", ["clifford", "boosted", "homogeneous", "perturbed"])
def test_area_identity(name):
    p = {
        "clifford": lambda: wm.clifford_torus(64, 64),
        "boosted": lambda: wm.mobius_boost(wm.clifford_torus(64, 64), 0.6),
        "homogeneous": lambda: wm.homogeneous_torus(64, 64, 0.5),
        "perturbed": lambda: wm.graph_perturbation(64, 64, 0.01),
    }[name]()
    induced, expected = wm.area_density_check(p)
    assert np.abs(induced - expected).max() < 1e-7


def test_energy_is_mobius_invariant(clifford):
    boosted = wm.mobius_boost(clifford, 0.6)
    assert abs(wm.willmore_energy(boosted) - 2 * np.pi**2) < 1e-6


def test_boosted_clifford_pairing_unchanged(clifford):
    rep = wm.verify_willmore(wm.mobius_boost(clifford, 0.6), 1e-8)
    assert rep.passed and abs(rep.pairing_mean - 1 / 16) < 1e-8


def test_adapted_frame(clifford):
    f = wm.conformal_gauss_map(clifford)
    F = extract_primitive_frame(f, seq.harmonic_sequence(f, 2))
    first, tangent = adapted_frame_residual(F, f)
    assert first < 1e-12 and tangent < 1e-9


def test_classification_rules():
    one = np.ones((4, 4))
    assert wm.classify_pairing(0 * one, 1e-8)[0] == wm.ISOTROPIC
    assert wm.classify_pairing(0.3 * one, 1e-8)[0] == wm.SUPERCONFORMAL
    ramp = np.linspace(0, 1, 16).reshape(4, 4)
    assert wm.classify_pairing(ramp, 1e-8)[0] == wm.MIXED


def test_dichotomy_examples():
    results = {name: wm.verify_map(f, 1e-8) for name, f in dichotomy_examples(64)}
    verified = [r for r in results.values() if r.passed]
    assert len(verified) >= 5
    assert all(r.classification in (wm.ISOTROPIC, wm.SUPERCONFORMAL) for r in verified)
    assert results["elliptic_sphere"].classification == wm.ISOTROPIC
    assert results["vacuum_toda"].classification == wm.SUPERCONFORMAL
    assert not results["homogeneous_torus"].passed


def test_boost_preserves_map_properties():
    f = elliptic_sphere_map(128, 128)
    g = boost_map(f, 0.5)
    assert np.abs(norm2(g.values) - 1).max() < 1e-9
    assert seq.harmonic_residual(g) < 1e-8


def test_immersion_round_trip(tmp_path, clifford):
    path = save_immersion(clifford.lattice, clifford.upsilon, tmp_path / "cliff.json")
    lat, values = load_immersion(path)
    assert lat == clifford.lattice
    assert np.array_equal(values, clifford.upsilon)
