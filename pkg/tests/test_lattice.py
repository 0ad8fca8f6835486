import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from desitter_toda.lattice import (
    BandwidthWarning,
    Lattice,
    check_grid,
    fourier_shift,
    integrate,
    spectral_derivative,
    xy_derivative,
)
from desitter_toda.catalog import elliptic_sn


def plane_wave(lat, N, M, k, l):
    """exp(2 pi i (k u + l v)) with its d/dz and d/dzbar in closed form."""
    z = lat.nodes(N, M)
    Jinv = np.linalg.inv(lat.jacobian)
    x, y = z.real, z.imag
    u = x * Jinv[0, 0] + y * Jinv[1, 0]
    v = x * Jinv[0, 1] + y * Jinv[1, 1]
    f = np.exp(2j * np.pi * (k * u + l * v))
    gx = 2j * np.pi * (k * Jinv[0, 0] + l * Jinv[0, 1])
    gy = 2j * np.pi * (k * Jinv[1, 0] + l * Jinv[1, 1])
    return f, 0.5 * (gx - 1j * gy) * f, 0.5 * (gx + 1j * gy) * f


def test_orientation_required():
    with pytest.raises(ValueError):
        Lattice(1 + 0j, -1j)


def test_grid_validation():
    check_grid(8, 10)
    for bad in ((6, 8), (9, 8), (8, 7)):
        with pytest.raises(ValueError):
            check_grid(*bad)


@given(
    st.floats(0.5, 3), st.floats(-1, 1), st.floats(0.5, 3),
    st.integers(-3, 3), st.integers(-3, 3),
)
def test_plane_waves_differentiate_exactly(a, b, c, k, l):
    lat = Lattice(complex(a, 0), complex(b, c))
    f, fz, fzb = plane_wave(lat, 16, 16, k, l)
    scale = max(1.0, np.abs(fz).max())
    assert np.abs(spectral_derivative(f, lat, 1, 0) - fz).max() < 1e-10 * scale
    assert np.abs(spectral_derivative(f, lat, 0, 1) - fzb).max() < 1e-10 * scale


def test_laplacian_identity():
    lat = Lattice(2.0 + 0j, 0.3 + 1.5j)
    f, _, _ = plane_wave(lat, 16, 16, 2, -1)
    L = spectral_derivative(f, lat, 1, 1)
    fxx = xy_derivative(f, lat, 2, 0)
    fyy = xy_derivative(f, lat, 0, 2)
    assert np.abs(4 * L - (fxx + fyy)).max() < 1e-9


def test_elliptic_values_and_derivative_against_mpmath():
    m = 0.5
    K = float(mpmath.ellipk(m))
    lat = Lattice(complex(4 * K), complex(0, 2 * K))
    shift = 0.37 + 0.21j
    z = lat.nodes(128, 128) + shift
    g = elliptic_sn(z, m)
    for idx in [(3, 5), (40, 90), (100, 17)]:
        ref = complex(mpmath.ellipfun("sn", complex(z[idx]), m=m))
        assert abs(g[idx] - ref) < 1e-12 * max(1, abs(ref))
    # first stereographic component 2 Re g / (1 + |g|^2) has d/dz = g' (1 - conj(g)^2) / (1 + |g|^2)^2
    X = 2 * g.real / (1 + np.abs(g) ** 2)
    Xz = spectral_derivative(X, lat, 1, 0)
    for idx in [(3, 5), (40, 90), (100, 17)]:
        zz = complex(z[idx])
        gp = complex(mpmath.ellipfun("cn", zz, m=m) * mpmath.ellipfun("dn", zz, m=m))
        gg = complex(g[idx])
        ref = gp * (1 - np.conj(gg) ** 2) / (1 + abs(gg) ** 2) ** 2
        assert abs(Xz[idx] - ref) < 1e-8


def test_spectral_convergence_is_faster_than_algebraic():
    lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)
    errs = []
    for N in (16, 32):
        z = lat.nodes(N, N)
        f = np.exp(0.8 * np.sin(z.real) * np.cos(z.imag))
        fx = 0.8 * np.cos(z.real) * np.cos(z.imag) * f
        errs.append(np.abs(xy_derivative(f, lat, 1, 0) - fx).max())
    assert errs[0] / errs[1] > 1e2


def test_bandwidth_warning():
    lat = Lattice.rectangle(1.0, 1.0)
    rng = np.random.default_rng(0)
    with pytest.warns(BandwidthWarning):
        spectral_derivative(rng.normal(size=(16, 16)), lat, 1, 0)


def test_fourier_shift_and_integral():
    lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)
    N = 16
    z = lat.nodes(N, N)
    f = np.cos(z.real) + np.sin(2 * z.imag)
    g = fourier_shift(f, 0.5, 0.25)
    h = 2 * np.pi / N
    assert np.abs(g - (np.cos(z.real + 0.5 * h) + np.sin(2 * (z.imag + 0.25 * h)))).max() < 1e-12
    assert abs(integrate(np.cos(z.real) ** 2, lat) - 2 * np.pi**2) < 1e-12


def test_lattice_json_round_trip():
    lat = Lattice(1.5 + 0.2j, -0.3 + 2j)
    assert Lattice.from_json(lat.to_json()) == lat
