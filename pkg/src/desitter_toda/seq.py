"""Harmonic maps of tori into S^{2n}_1: derivatives, isotropy order, harmonic sequence.

Maps are sampled on an N x M grid over a period lattice (see
:mod:`desitter_toda.lattice`) and stored as complex arrays of shape
(N, M, 2n+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .lattice import BandwidthWarning, Lattice, check_grid, spectral_derivative
from .mink import bilinear, euclidean_norm, norm2

__all__ = [
    "AmbiguityError",
    "BandwidthWarning",
    "DegenerateInputError",
    "HarmonicSequence",
    "IsotropyResult",
    "TorusMap",
    "derive",
    "fill_masked",
    "harmonic_residual",
    "harmonic_sequence",
    "isotropy_order",
    "pairing_grid",
    "holomorphy_residual",
    "pairing_spread",
    "sequence_identity_residuals",
    "spacelike_violation",
]


class DegenerateInputError(ValueError):
    pass


class AmbiguityError(ValueError):
    """A pairing fell between the 'zero' and 'nonzero' thresholds."""


@dataclass(frozen=True)
class TorusMap:
    """Samples of a doubly periodic map into S^{2n}_1.

    Parameters
    ----------
    n : int
        Target rank; values have 2n+1 components.
    lattice : Lattice
        Period lattice; node (s, t) sits at s/N w1 + t/M w2.
    values : ndarray, shape (N, M, 2n+1)
    analytic : callable, optional
        z -> values for comparisons against a closed form.
    norm_tol : float
        Allowed deviation of norm2 from 1.
    """

    n: int
    lattice: Lattice
    values: np.ndarray
    analytic: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    norm_tol: float = 1e-10

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", v)
        if v.ndim != 3 or v.shape[-1] != 2 * self.n + 1:
            raise ValueError(f"values must have shape (N, M, {2 * self.n + 1}), got {v.shape}")
        check_grid(*v.shape[:2])
        dev = float(np.abs(norm2(v) - 1.0).max())
        if dev >= self.norm_tol:
            raise ValueError(f"map leaves S^{2 * self.n}_1: max |norm2 - 1| = {dev:.3e}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[:2]

    def nodes(self) -> np.ndarray:
        return self.lattice.nodes(*self.shape)

    @classmethod
    def from_function(cls, n: int, lattice: Lattice, N: int, M: int, fn, **kw) -> "TorusMap":
        z = lattice.nodes(N, M)
        return cls(n, lattice, fn(z), analytic=fn, **kw)


def derive(f: TorusMap, a: int, b: int) -> np.ndarray:
    """d^a/dz^a d^b/dzbar^b of the map, shape (N, M, 2n+1).

    Orders with a + b > 2n + 2 are refused.  A :class:`BandwidthWarning` is
    issued when the data has appreciable spectral content near Nyquist.
    """
    if a < 0 or b < 0:
        raise ValueError("orders must be non-negative")
    if a + b > 2 * f.n + 2:
        raise ValueError(f"total order {a + b} exceeds 2n+2 = {2 * f.n + 2}")
    return spectral_derivative(f.values, f.lattice, a, b)


def _grid_derive(values: np.ndarray, lat: Lattice, a: int, b: int) -> np.ndarray:
    return spectral_derivative(values, lat, a, b, warn=False)


def harmonic_residual(f: TorusMap) -> float:
    """max over nodes of |f_zzbar - <f_zzbar, f> f|, i.e. the failure of f_zzbar in C f."""
    L = derive(f, 1, 1)
    coef = bilinear(L, f.values) / bilinear(f.values, f.values)
    R = L - coef[..., None] * f.values
    return float(euclidean_norm(R).max())


def pairing_grid(f: TorusMap, a: int, b: int, derivs: dict | None = None) -> np.ndarray:
    """<d_z^a f, d_z^b f> at every node."""
    derivs = derivs if derivs is not None else {}
    for k in (a, b):
        if k not in derivs:
            derivs[k] = derive(f, k, 0)
    return bilinear(derivs[a], derivs[b])


@dataclass(frozen=True)
class IsotropyResult:
    order: int
    capped: bool
    pairings: dict  # (a, b) -> max |<d^a f, d^b f>|
    thresholds: dict  # (a, b) -> zero threshold used

    def __int__(self) -> int:
        return self.order


def isotropy_order(f: TorusMap, tol: float | None = None, separation: float = 10.0) -> IsotropyResult:
    """Isotropy order: the largest r with <d^a f, d^b f> = 0 for 1 <= a+b <= 2r+1.

    Parameters
    ----------
    tol : float, optional
        Absolute zero threshold.  By default each pairing (a, b) uses
        1e-7 * max|d^a f| * max|d^b f|.
    separation : float
        A pairing above the threshold counts as nonzero only if it exceeds
        ``separation`` times the threshold; values in between raise
        :class:`AmbiguityError`.

    Returns the certificate of pairing magnitudes; order is capped at n.
    """
    derivs = {k: derive(f, k, 0) for k in range(0, f.n + 2)}
    scale = {k: float(euclidean_norm(v).max()) for k, v in derivs.items()}
    if scale[1] < 1e-12 * max(1.0, scale[0]):
        raise DegenerateInputError("map is constant: first derivative vanishes")
    mags: dict = {}
    thr: dict = {}

    def level_vanishes(r: int) -> bool:
        # pairings with a + b in {2r, 2r+1}, a <= b, a+b >= 1
        zero = True
        for s in (2 * r, 2 * r + 1):
            for a in range(0, s // 2 + 1):
                b = s - a
                if s < 1 or b > f.n + 1:
                    continue
                m = float(np.abs(bilinear(derivs[a], derivs[b])).max())
                t = tol if tol is not None else 1e-7 * scale[a] * scale[b]
                mags[(a, b)] = m
                thr[(a, b)] = t
                if t <= m <= separation * t:
                    raise AmbiguityError(
                        f"<d^{a} f, d^{b} f> = {m:.3e} is within a factor {separation} of the threshold {t:.3e}"
                    )
                if m > t:
                    zero = False
        return zero

    level_vanishes(0)
    for r in range(0, f.n):
        if not level_vanishes(r + 1):
            return IsotropyResult(r, False, mags, thr)
    return IsotropyResult(f.n, True, mags, thr)


# Harmonic sequence

STENCIL_OFFSETS = np.array([-4, -3, -2, -1, 1, 2, 3, 4])


def _lagrange_weights(offsets: np.ndarray) -> np.ndarray:
    """Weights w with sum w_i p(o_i) = p(0) for polynomials of degree < len(offsets)."""
    w = np.ones(len(offsets))
    for i, oi in enumerate(offsets):
        for j, oj in enumerate(offsets):
            if i != j:
                w[i] *= (0 - oj) / (oi - oj)
    return w


def fill_masked(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace masked nodes by polynomial interpolation from unmasked neighbours.

    Each masked node gets the average of two one-dimensional 8-point Lagrange
    interpolants (offsets -4..-1, 1..4) along the two grid axes; indices wrap
    periodically.  Axes whose stencil touches another masked node are skipped.
    """
    out = values.copy()
    N, M = mask.shape
    w = _lagrange_weights(STENCIL_OFFSETS)
    for s, t in zip(*np.nonzero(mask)):
        estimates = []
        rows = (s + STENCIL_OFFSETS) % N
        if not mask[rows, t].any():
            estimates.append(np.tensordot(w, values[rows, t], axes=1))
        cols = (t + STENCIL_OFFSETS) % M
        if not mask[s, cols].any():
            estimates.append(np.tensordot(w, values[s, cols], axes=1))
        if not estimates:
            raise DegenerateInputError(f"masked node ({s}, {t}) has no clean interpolation stencil")
        out[s, t] = np.mean(estimates, axis=0)
    return out


@dataclass(frozen=True)
class HarmonicSequence:
    """f_0 .. f_r with their norms and per-node vanishing masks.

    ``masks[j]`` flags nodes where ||f_j||^2 fell below the threshold, so f_{j+1}
    there was filled by continuity.  ``obstructions`` lists (j, s, t) nodes where
    f_j is null but not zero; the sequence stops at that j.
    """

    lattice: Lattice
    entries: tuple
    norms: tuple
    masks: tuple
    obstructions: tuple
    isotropy: int
    requested: int

    @property
    def r(self) -> int:
        return len(self.entries) - 1

    @property
    def everywhere_defined(self) -> bool:
        return not self.obstructions and self.r == self.requested

    def union_mask(self) -> np.ndarray:
        m = np.zeros(self.entries[0].shape[:2], dtype=bool)
        for mk in self.masks:
            m |= mk
        return m


def harmonic_sequence(
    f: TorusMap,
    r: int,
    vanish_tol: float = 1e-8,
    isotropy: int | None = None,
    plant: dict | None = None,
) -> HarmonicSequence:
    """Gram-Schmidt sequence of successive z-derivatives.

    Parameters
    ----------
    r : int
        Last index to compute, 0 <= r <= n.
    vanish_tol : float
        ||f_j||^2 below ``vanish_tol`` times its grid median marks a node.
    isotropy : int, optional
        Known isotropy order, used by the identity checks to decide which
        self-pairings should vanish.  Defaults to r.
    plant : dict, optional
        {j: [(s, t), ...]} forces nodes into the mask of f_j, for testing the
        continuity fill against a closed form.
    """
    if not 0 <= r <= f.n:
        raise ValueError(f"sequence length r must lie in 0..{f.n}, got {r}")
    plant = plant or {}
    lat = f.lattice
    entries = [f.values]
    norms = [norm2(f.values)]
    masks = []
    obstructions = []
    for j in range(r):
        fj = entries[j]
        nj = norms[j]
        med = float(np.median(np.abs(nj)))
        ej = euclidean_norm(fj) ** 2
        emed = float(np.median(ej))
        small = np.abs(nj) < vanish_tol * med
        # a null vector is an obstruction unless the vector itself is (nearly) zero
        null_nonzero = small & (ej >= np.sqrt(vanish_tol) * emed)
        if null_nonzero.any():
            obstructions.extend((j, int(s), int(t)) for s, t in zip(*np.nonzero(null_nonzero)))
            masks.append(small)
            break
        mask = small.copy()
        for s, t in plant.get(j, ()):
            mask[s, t] = True
        d = _grid_derive(fj, lat, 1, 0)
        safe = np.where(mask, 1.0, nj)
        coef = bilinear(d, np.conj(fj)) / safe
        nxt = d - coef[..., None] * fj
        if mask.any():
            nxt = fill_masked(nxt, mask)
        masks.append(mask)
        entries.append(nxt)
        norms.append(norm2(nxt))
    while len(masks) < len(entries):
        masks.append(np.zeros(f.shape, dtype=bool))
    return HarmonicSequence(
        lattice=lat,
        entries=tuple(entries),
        norms=tuple(norms),
        masks=tuple(masks),
        obstructions=tuple(obstructions),
        isotropy=r if isotropy is None else int(isotropy),
        requested=r,
    )


@dataclass(frozen=True)
class IdentityResiduals:
    dbar_recursion: float
    hermitian_orthogonality: float
    bilinear_orthogonality: float
    derivative_orthogonality: float

    def as_dict(self) -> dict:
        return {
            "dbar_recursion": self.dbar_recursion,
            "hermitian_orthogonality": self.hermitian_orthogonality,
            "bilinear_orthogonality": self.bilinear_orthogonality,
            "derivative_orthogonality": self.derivative_orthogonality,
        }

    def max(self) -> float:
        return max(self.as_dict().values())


def sequence_identity_residuals(s: HarmonicSequence) -> IdentityResiduals:
    """Residuals of the four sequence identities, max over unmasked nodes.

    (i)   dbar f_{j+1} + (||f_{j+1}||^2 / ||f_j||^2) f_j = 0;
    (ii)  <f_j, conj f_k> = 0 for j != k;
    (iii) <f_j, f_k> = 0 except j = k = 0, and except j = k beyond the
          isotropy order;
    (iv)  <conj f_j, d_z conj f_k> = 0 except j = k - 1 = 0, except
          j = k - 1 beyond the isotropy order, and except (j, k) = (1, 0)
          where the pairing is ||f_1||^2.
    """
    lat = s.lattice
    good = ~s.union_mask()
    F = s.entries
    r = s.r

    def mx(a) -> float:
        a = np.abs(a)[good]
        return float(a.max()) if a.size else 0.0

    rec = 0.0
    for j in range(r):
        lhs = _grid_derive(F[j + 1], lat, 0, 1)
        ratio = s.norms[j + 1] / np.where(good, s.norms[j], 1.0)
        rec = max(rec, mx(euclidean_norm(lhs + ratio[..., None] * F[j])))

    herm = bil = der = 0.0
    if r == 0:
        # a single entry has no recursion step and no derivative pairs to test
        return IdentityResiduals(0.0, 0.0, 0.0, 0.0)
    dbar_conj = [np.conj(_grid_derive(fk, lat, 0, 1)) for fk in F]  # d_z conj f_k
    for j in range(r + 1):
        for k in range(r + 1):
            if j != k:
                herm = max(herm, mx(bilinear(F[j], np.conj(F[k]))))
            if not (j == k and (j == 0 or j > s.isotropy)):
                bil = max(bil, mx(bilinear(F[j], F[k])))
            # f is real, so d_z conj f_0 = f_1 and the pair (1, 0) pairs f_1 with its conjugate
            if not (j == k - 1 and (j == 0 or j > s.isotropy)) and (j, k) != (1, 0):
                der = max(der, mx(bilinear(np.conj(F[j]), dbar_conj[k])))
    return IdentityResiduals(rec, herm, bil, der)


def holomorphy_residual(f: TorusMap, order: int | None = None) -> float:
    """max |d/dzbar <d^k f, d^k f>| with k = n by default."""
    k = f.n if order is None else order
    P = pairing_grid(f, k, k)
    return float(np.abs(_grid_derive(P, f.lattice, 0, 1)).max())


def pairing_spread(f: TorusMap, order: int | None = None) -> tuple[complex, float]:
    """Mean and standard deviation over the grid of <d^k f, d^k f>."""
    k = f.n if order is None else order
    P = pairing_grid(f, k, k)
    return complex(P.mean()), float(np.std(P))


def spacelike_violation(s: HarmonicSequence, n: int) -> float:
    """Most negative norm2(f_j), 1 <= j <= n-1, over unmasked nodes (0 if none)."""
    good = ~s.union_mask()
    worst = 0.0
    for j in range(1, min(n, s.r + 1)):
        vals = s.norms[j][good]
        if vals.size:
            worst = min(worst, float(vals.min()))
    return worst
