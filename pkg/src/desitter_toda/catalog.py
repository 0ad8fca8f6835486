"""Closed-form doubly periodic harmonic maps used as test subjects."""
from __future__ import annotations

import numpy as np
from scipy.special import ellipj, ellipk

from .lattice import Lattice
from .seq import TorusMap
from .willmore import boost_matrix, clifford_torus, conformal_gauss_map, mobius_boost

__all__ = [
    "clifford_gauss_map",
    "boosted_clifford_gauss_map",
    "elliptic_sn",
    "elliptic_sphere_map",
    "boost_map",
]


def clifford_gauss_map(N: int, M: int) -> TorusMap:
    """(cos x, sin x, -cos y, -sin y, 0)/sqrt 2 on the 2 pi square."""
    lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)

    def fn(z):
        x, y = z.real, z.imag
        return np.stack([np.cos(x), np.sin(x), -np.cos(y), -np.sin(y), 0 * x], -1) / np.sqrt(2) + 0j

    return TorusMap.from_function(2, lat, N, M, fn)


def boosted_clifford_gauss_map(N: int, M: int, rapidity: float = 0.6) -> TorusMap:
    """Conformal Gauss map of a Mobius image of the Clifford torus."""
    return conformal_gauss_map(mobius_boost(clifford_torus(N, M), rapidity))


def elliptic_sn(z: np.ndarray, m: float) -> np.ndarray:
    """Jacobi sn(z | m) for complex z via the addition formula."""
    z = np.asarray(z, dtype=complex)
    s, c, d, _ = ellipj(z.real, m)
    s1, c1, d1, _ = ellipj(z.imag, 1 - m)
    den = c1**2 + m * s**2 * s1**2
    return (s * d1 + 1j * c * d * s1 * c1) / den


def elliptic_sphere_map(N: int, M: int, n: int = 2, shift: complex = 0.37 + 0.21j) -> TorusMap:
    """Stereographic image of sn(z + shift | 1/2), padded into S^{2n}_1.

    Periods are 4K and 2iK' with K = K' = K(1/2).  The shift keeps the poles
    of sn off the grid.  Holomorphic maps into a round 2-sphere are harmonic,
    conformal and isotropic.
    """
    if n < 1:
        raise ValueError("rank must be at least 1")
    m = 0.5
    K = float(ellipk(m))
    lat = Lattice(complex(4 * K), complex(0, 2 * K))

    def fn(z):
        g = elliptic_sn(z + shift, m)
        a = np.abs(g) ** 2
        out = np.zeros(z.shape + (2 * n + 1,), complex)
        out[..., 0] = 2 * g.real / (a + 1)
        out[..., 1] = 2 * g.imag / (a + 1)
        out[..., 2] = (a - 1) / (a + 1)
        return out

    return TorusMap.from_function(n, lat, N, M, fn)


def boost_map(f: TorusMap, rapidity: float, axis: int = 0) -> TorusMap:
    """Image of a map under a Lorentz boost; harmonicity and conformality are preserved."""
    B = boost_matrix(2 * f.n + 1, rapidity, axis)
    return TorusMap(f.n, f.lattice, f.values @ B.T, norm_tol=max(f.norm_tol, 1e-9))
