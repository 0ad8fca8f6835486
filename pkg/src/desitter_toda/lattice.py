"""Period lattices and spectral calculus on doubly periodic grids.

A lattice is given by two complex periods (w1, w2) with Im(w2/w1) > 0.  Grid
node (s, t) sits at z = (s/N) w1 + (t/M) w2, so samples have shape
(N, M, ...).  Derivatives are computed in the unit-square coordinates (u, v)
by FFT and converted to d/dz, d/dzbar with the constant Jacobian of
z = u w1 + v w2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class BandwidthWarning(UserWarning):
    """Spectral content near the Nyquist limit makes a derivative unreliable."""


# Relative spectral mass allowed in the outer band before a derivative is
# flagged; scaled by the derivative amplification of that band.
TAIL_TOL = 1e-8


@dataclass(frozen=True)
class Lattice:
    w1: complex
    w2: complex

    def __post_init__(self):
        tau = complex(self.w2) / complex(self.w1)
        if not tau.imag > 0:
            raise ValueError(f"periods must satisfy Im(w2/w1) > 0, got w2/w1 = {tau}")

    @classmethod
    def rectangle(cls, a: float, b: float) -> "Lattice":
        return cls(complex(a), complex(0, b))

    @property
    def jacobian(self) -> np.ndarray:
        """[[Re w1, Im w1], [Re w2, Im w2]]: maps (d/dx, d/dy) to (d/du, d/dv)."""
        return np.array([[self.w1.real, self.w1.imag], [self.w2.real, self.w2.imag]])

    @property
    def area(self) -> float:
        return abs(np.linalg.det(self.jacobian))

    def nodes(self, N: int, M: int) -> np.ndarray:
        """Complex node positions, shape (N, M)."""
        u = np.arange(N) / N
        v = np.arange(M) / M
        return u[:, None] * self.w1 + v[None, :] * self.w2

    def to_json(self) -> list:
        return [[self.w1.real, self.w1.imag], [self.w2.real, self.w2.imag]]

    @classmethod
    def from_json(cls, obj) -> "Lattice":
        (a, b), (c, d) = obj
        return cls(complex(a, b), complex(c, d))


def check_grid(N: int, M: int) -> None:
    if N < 8 or M < 8 or N % 2 or M % 2:
        raise ValueError(f"grid must be at least 8x8 with even sizes, got {N}x{M}")


def _wavenumbers(N: int) -> np.ndarray:
    return np.fft.fftfreq(N, d=1.0 / N)


def derivative_symbols(lat: Lattice, N: int, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Fourier symbols of d/dz and d/dzbar on an N x M grid, Nyquist zeroed."""
    ku = 2j * np.pi * _wavenumbers(N)
    kv = 2j * np.pi * _wavenumbers(M)
    ku[N // 2] = 0.0
    kv[M // 2] = 0.0
    Du, Dv = np.meshgrid(ku, kv, indexing="ij")
    Jinv = np.linalg.inv(lat.jacobian)
    Dx = Jinv[0, 0] * Du + Jinv[0, 1] * Dv
    Dy = Jinv[1, 0] * Du + Jinv[1, 1] * Dv
    return 0.5 * (Dx - 1j * Dy), 0.5 * (Dx + 1j * Dy)


def _tail_ratio(F: np.ndarray, N: int, M: int) -> float:
    """Share of spectral amplitude in the outer band |k| > N/4 on either axis."""
    mag = np.abs(F).reshape(N, M, -1).max(axis=-1)
    total = mag.max()
    if total == 0:
        return 0.0
    ku = np.abs(_wavenumbers(N))[:, None]
    kv = np.abs(_wavenumbers(M))[None, :]
    band = (ku > N / 4) | (kv > M / 4)
    return float(mag[band].max() / total) if band.any() else 0.0


def spectral_derivative(
    values: np.ndarray, lat: Lattice, a: int, b: int, *, warn: bool = True
) -> np.ndarray:
    """d^a/dz^a d^b/dzbar^b of grid samples of shape (N, M, ...)."""
    if a < 0 or b < 0:
        raise ValueError("derivative orders must be non-negative")
    values = np.asarray(values)
    N, M = values.shape[:2]
    if a == 0 and b == 0:
        return values.astype(complex)
    F = np.fft.fft2(values, axes=(0, 1))
    Dz, Dzb = derivative_symbols(lat, N, M)
    sym = Dz**a * Dzb**b
    if warn:
        tail = _tail_ratio(F, N, M)
        amp = (np.pi * max(N, M) / 2) ** (a + b)
        if tail * amp > TAIL_TOL * (np.pi * max(N, M) / 4) ** (a + b) and tail > TAIL_TOL:
            warnings.warn(
                f"derivative order {a + b} on a {N}x{M} grid: outer-band spectral share {tail:.2e}",
                BandwidthWarning,
                stacklevel=2,
            )
    sym = sym.reshape(sym.shape + (1,) * (values.ndim - 2))
    return np.fft.ifft2(F * sym, axes=(0, 1))


def fourier_shift(values: np.ndarray, du: float, dv: float) -> np.ndarray:
    """Band-limited interpolant evaluated at nodes shifted by (du, dv) grid cells.

    The Nyquist mode is dropped so that real data stays real.
    """
    values = np.asarray(values)
    N, M = values.shape[:2]
    F = np.fft.fft2(values, axes=(0, 1))
    ku = _wavenumbers(N)
    kv = _wavenumbers(M)
    pu = np.exp(2j * np.pi * ku * du / N)
    pv = np.exp(2j * np.pi * kv * dv / M)
    pu[N // 2] = 0.0 if du % 1 else pu[N // 2]
    pv[M // 2] = 0.0 if dv % 1 else pv[M // 2]
    P = pu[:, None] * pv[None, :]
    P = P.reshape(P.shape + (1,) * (values.ndim - 2))
    out = np.fft.ifft2(F * P, axes=(0, 1))
    return out if np.iscomplexobj(values) else out.real


def integrate(values: np.ndarray, lat: Lattice) -> complex:
    """Integral over the fundamental domain by the periodic trapezoid rule."""
    values = np.asarray(values)
    N, M = values.shape[:2]
    return values.sum(axis=(0, 1)) * lat.area / (N * M)


def xy_derivative(values: np.ndarray, lat: Lattice, px: int, py: int) -> np.ndarray:
    """d^px/dx^px d^py/dy^py of real grid data, returned real."""
    Dz, Dzb = derivative_symbols(lat, *np.asarray(values).shape[:2])
    Dx = Dz + Dzb
    Dy = 1j * (Dz - Dzb)
    sym = Dx**px * Dy**py
    sym = sym.reshape(sym.shape + (1,) * (np.ndim(values) - 2))
    out = np.fft.ifft2(np.fft.fft2(values, axes=(0, 1)) * sym, axes=(0, 1))
    return out.real if np.isrealobj(values) else out
