"""Tori in S^3: shape operators, conformal Gauss maps into S^4_1, Willmore energy.

An immersion is sampled on an N x M grid over a period lattice with real
coordinates z = x + iy.  Curvature quantities are computed from spectral
first and second derivatives.  K always means the extrinsic curvature
kappa_1 kappa_2 (determinant of the shape operator).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Lattice, check_grid, integrate, xy_derivative
from .mink import bilinear
from .seq import TorusMap, derive, pairing_grid

__all__ = [
    "ImmersionPatch",
    "MapReport",
    "UmbilicError",
    "UMBILIC_TOL",
    "K_CONVENTION",
    "immersion_patch",
    "clifford_torus",
    "homogeneous_torus",
    "sphere_slice",
    "graph_perturbation",
    "mobius_boost",
    "boost_matrix",
    "conformal_gauss_map",
    "willmore_energy",
    "area_density_check",
    "classify_pairing",
    "verify_map",
    "verify_willmore",
]

UMBILIC_TOL = 1e-6
UNIT_TOL = 1e-10
K_CONVENTION = "K = kappa_1 kappa_2 (extrinsic): (H^2 - K) dA is the area swept by the conformal Gauss map"


class UmbilicError(ValueError):
    def __init__(self, nodes):
        self.nodes = [tuple(int(i) for i in p) for p in nodes]
        head = ", ".join(map(str, self.nodes[:8]))
        more = "" if len(self.nodes) <= 8 else f" and {len(self.nodes) - 8} more"
        super().__init__(
            f"conformal Gauss map is only defined away from umbilic points; umbilic nodes: {head}{more}"
        )


def _cross3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vector orthogonal to a, b, c in R^4 (generalized cross product)."""
    X = np.stack([a, b, c], axis=-2)
    out = np.empty(a.shape)
    for i in range(4):
        cols = [k for k in range(4) if k != i]
        out[..., i] = (-1) ** i * np.linalg.det(X[..., cols])
    return out


@dataclass(frozen=True)
class ImmersionPatch:
    """Geometry of a doubly periodic immersion into S^3.

    Attributes
    ----------
    upsilon : (N, M, 4) unit vectors
    normal : (N, M, 4) unit normal tangent to S^3
    first, second : (N, M, 2, 2) fundamental forms in (x, y)
    shape : (N, M, 2, 2) shape operator I^{-1} II
    H, K : (N, M) mean curvature and kappa_1 kappa_2
    kappa : (N, M, 2) principal curvatures, kappa_1 >= kappa_2
    dA : (N, M) area density sqrt(det I) per unit dx dy
    umbilic : (N, M) bool
    """

    lattice: Lattice
    upsilon: np.ndarray
    normal: np.ndarray
    first: np.ndarray
    second: np.ndarray
    shape: np.ndarray
    H: np.ndarray
    K: np.ndarray
    kappa: np.ndarray
    dA: np.ndarray
    umbilic: np.ndarray
    label: str = field(default="", compare=False)

    @property
    def grid(self) -> tuple[int, int]:
        return self.upsilon.shape[:2]

    def area(self) -> float:
        return float(integrate(self.dA, self.lattice))

    def umbilic_nodes(self) -> list[tuple[int, int]]:
        return [tuple(p) for p in np.argwhere(self.umbilic)]

    def symmetry_residual(self) -> float:
        """Failure of I S to be symmetric, relative to |II|."""
        IS = self.first @ self.shape
        return float(np.abs(IS - np.swapaxes(IS, -1, -2)).max() / max(1.0, np.abs(self.second).max()))


def immersion_patch(lattice: Lattice, upsilon: np.ndarray, label: str = "") -> ImmersionPatch:
    """Derive normal, fundamental forms and curvatures of grid samples in S^3."""
    u = np.asarray(upsilon, dtype=float)
    if u.ndim != 3 or u.shape[-1] != 4:
        raise ValueError(f"immersion samples must have shape (N, M, 4), got {u.shape}")
    check_grid(*u.shape[:2])
    dev = float(np.abs((u * u).sum(-1) - 1).max())
    if dev >= UNIT_TOL:
        raise ValueError(f"samples leave S^3: max ||v|^2 - 1| = {dev:.3e}")
    ux = xy_derivative(u, lattice, 1, 0)
    uy = xy_derivative(u, lattice, 0, 1)
    uxx = xy_derivative(u, lattice, 2, 0)
    uxy = xy_derivative(u, lattice, 1, 1)
    uyy = xy_derivative(u, lattice, 0, 2)

    nv = _cross3(u, ux, uy)
    nn = np.linalg.norm(nv, axis=-1)
    if (nn == 0).any():
        raise ValueError("immersion is singular: tangent vectors are dependent at some node")
    nv = nv / nn[..., None]

    E = (ux * ux).sum(-1)
    Fm = (ux * uy).sum(-1)
    G = (uy * uy).sum(-1)
    # the normal is orthogonal to v, so the normal part of the ambient second
    # derivative equals that of the S^3 covariant derivative
    L = (uxx * nv).sum(-1)
    Mm = (uxy * nv).sum(-1)
    Nn = (uyy * nv).sum(-1)
    first = np.stack([np.stack([E, Fm], -1), np.stack([Fm, G], -1)], -2)
    second = np.stack([np.stack([L, Mm], -1), np.stack([Mm, Nn], -1)], -2)
    S = np.linalg.solve(first, second)
    H = 0.5 * (S[..., 0, 0] + S[..., 1, 1])
    K = np.linalg.det(S)
    disc = np.sqrt(np.clip(H * H - K, 0, None))
    kappa = np.stack([H + disc, H - disc], -1)
    scale = max(1.0, float(np.abs(kappa).max()))
    umb = (kappa[..., 0] - kappa[..., 1]) < UMBILIC_TOL * scale
    dA = np.sqrt(E * G - Fm * Fm)
    return ImmersionPatch(lattice, u, nv, first, second, S, H, K, kappa, dA, umb, label)


# Example immersions

def _xy(lattice: Lattice, N: int, M: int, offset=(0.0, 0.0)):
    z = lattice.nodes(N, M) + complex(*offset)
    return z.real, z.imag


def clifford_torus(N: int, M: int) -> ImmersionPatch:
    """(cos x, sin x, cos y, sin y)/sqrt 2 on the 2 pi square."""
    return homogeneous_torus(N, M, np.pi / 4, label="clifford")


def homogeneous_torus(N: int, M: int, angle: float, label: str = "") -> ImmersionPatch:
    """(a cos(x/a), a sin(x/a), b cos(y/b), b sin(y/b)) with a = cos(angle), b = sin(angle).

    Conformally parametrized on the rectangle 2 pi a x 2 pi b.  The Clifford
    torus is angle = pi/4 (after rescaling to the 2 pi square).
    """
    a, b = np.cos(angle), np.sin(angle)
    if np.isclose(angle, np.pi / 4):
        lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)
        x, y = _xy(lat, N, M)
        v = np.stack([np.cos(x), np.sin(x), np.cos(y), np.sin(y)], -1) / np.sqrt(2)
    else:
        lat = Lattice.rectangle(2 * np.pi * a, 2 * np.pi * b)
        x, y = _xy(lat, N, M)
        v = np.stack([a * np.cos(x / a), a * np.sin(x / a), b * np.cos(y / b), b * np.sin(y / b)], -1)
    return immersion_patch(lat, v, label or f"homogeneous({angle:.6g})")


def sphere_slice(N: int, M: int, height: float = 0.0) -> ImmersionPatch:
    """Doubly covered 2-sphere {v_4 = height} in S^3.

    height = 0 is a great (totally geodesic) sphere; otherwise the slice is
    totally umbilic.  The polar angle is offset by half a cell so that no
    node lands on a branch point.
    """
    r = np.sqrt(1 - height**2)
    lat = Lattice.rectangle(2 * np.pi, 2 * np.pi)
    x, y = _xy(lat, N, M)
    x = x + np.pi / N
    v = np.stack(
        [r * np.sin(x) * np.cos(y), r * np.sin(x) * np.sin(y), r * np.cos(x), np.full_like(x, height)], -1
    )
    return immersion_patch(lat, v, f"sphere({height:.6g})")


def graph_perturbation(N: int, M: int, eps: float, modes=((1, 2, 1.0), (3, 1, 0.5))) -> ImmersionPatch:
    """Clifford torus pushed along its normal by eps * sum c cos(p x) cos(q y), renormalized."""
    base = clifford_torus(N, M)
    x, y = _xy(base.lattice, N, M)
    g = sum(c * np.cos(p * x) * np.cos(q * y) for p, q, c in modes)
    v = base.upsilon + eps * g[..., None] * base.normal
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return immersion_patch(base.lattice, v, f"graph({eps:.6g})")


def boost_matrix(dim: int, rapidity: float, axis: int = 0) -> np.ndarray:
    """Lorentz boost mixing basis vector `axis` (0-based) with the timelike one."""
    B = np.eye(dim)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    B[axis, axis] = B[-1, -1] = ch
    B[axis, -1] = B[-1, axis] = sh
    return B


def mobius_boost(p: ImmersionPatch, rapidity: float, axis: int = 0) -> ImmersionPatch:
    """Image of the immersion under the Mobius transformation of S^3 given by a boost.

    Points of S^3 are lifted to the light cone as (v, 1), boosted in R^{4,1}
    and projected back.  The parametrization stays conformal.
    """
    Y = np.concatenate([p.upsilon, np.ones(p.grid + (1,))], -1)
    Yb = Y @ boost_matrix(5, rapidity, axis).T
    v = Yb[..., :4] / Yb[..., 4:5]
    return immersion_patch(p.lattice, v, f"{p.label}+boost({rapidity:.6g})")


# Conformal Gauss map and energy

def conformal_gauss_map(p: ImmersionPatch, strict: bool = True) -> TorusMap:
    """f = H (v, 1) + (n, 0) in S^4_1, as a map of rank 2.

    In strict mode umbilic nodes raise :class:`UmbilicError`.
    """
    if strict and p.umbilic.any():
        raise UmbilicError(np.argwhere(p.umbilic))
    Y = np.concatenate([p.upsilon, np.ones(p.grid + (1,))], -1)
    Nv = np.concatenate([p.normal, np.zeros(p.grid + (1,))], -1)
    f = p.H[..., None] * Y + Nv
    return TorusMap(2, p.lattice, f)


def willmore_energy(p: ImmersionPatch) -> float:
    """Integral of (H^2 - K) dA by spectral quadrature."""
    return float(integrate((p.H**2 - p.K) * p.dA, p.lattice))


def area_density_check(p: ImmersionPatch, f: TorusMap | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(area density induced by f, (H^2 - K) sqrt det I) per unit dx dy."""
    f = conformal_gauss_map(p, strict=False) if f is None else f
    fx = xy_derivative(f.values.real, p.lattice, 1, 0)
    fy = xy_derivative(f.values.real, p.lattice, 0, 1)
    gxx, gxy, gyy = bilinear(fx, fx), bilinear(fx, fy), bilinear(fy, fy)
    induced = np.sqrt(np.clip(gxx * gyy - gxy**2, 0, None))
    return induced, (p.H**2 - p.K) * p.dA


# Verification

ISOTROPIC = "isotropic"
SUPERCONFORMAL = "superconformal"
MIXED = "mixed"


def classify_pairing(P: np.ndarray, tol: float) -> tuple[str, complex, float]:
    """Classify <f_zz, f_zz> samples as identically zero, constant nonzero, or neither.

    Returns (class, mean, standard deviation).
    """
    P = np.asarray(P).ravel()
    mean = complex(P.mean()) if P.size else 0j
    std = float(np.abs(P - mean).std()) if P.size else 0.0
    if P.size == 0 or np.abs(P).max() < tol:
        return ISOTROPIC, mean, std
    if abs(mean) >= tol and std < tol * max(1.0, abs(mean)):
        return SUPERCONFORMAL, mean, std
    return MIXED, mean, std


@dataclass
class MapReport:
    """Harmonicity, conformality and isotropy class of a map into S^4_1."""

    harmonic: float
    conformality: float
    tol: float
    classification: str
    pairing_mean: complex
    pairing_std: float
    masked: list = field(default_factory=list)
    energy: float | None = None
    k_convention: str = K_CONVENTION

    @property
    def passed(self) -> bool:
        return self.harmonic < self.tol and self.conformality < self.tol

    def as_dict(self) -> dict:
        d = {
            "harmonic_residual": self.harmonic,
            "conformality_residual": self.conformality,
            "tol": self.tol,
            "passed": self.passed,
            "classification": self.classification,
            "pairing_mean": [self.pairing_mean.real, self.pairing_mean.imag],
            "pairing_std": self.pairing_std,
            "masked_nodes": [list(p) for p in self.masked],
            "k_convention": self.k_convention,
        }
        if self.energy is not None:
            d["willmore_energy"] = self.energy
        return d


def verify_map(f: TorusMap, tol: float, mask: np.ndarray | None = None, class_tol: float | None = None) -> MapReport:
    """Harmonic and conformality residuals plus the class of <f_zz, f_zz>.

    Nodes in `mask` are excluded from every residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    class_tol = 1e-6 if class_tol is None else class_tol
    mask = np.zeros(f.shape, bool) if mask is None else np.asarray(mask, bool)
    keep = ~mask
    d1 = derive(f, 1, 0)
    L = derive(f, 1, 1)
    coef = bilinear(L, f.values) / bilinear(f.values, f.values)
    R = np.linalg.norm(L - coef[..., None] * f.values, axis=-1)
    harm = float(R[keep].max()) if keep.any() else 0.0
    conf = float(np.abs(bilinear(d1, d1))[keep].max()) if keep.any() else 0.0
    P = pairing_grid(f, 2, 2, {1: d1})
    cls, mean, std = classify_pairing(P[keep], class_tol)
    return MapReport(harm, conf, tol, cls, mean, std, [tuple(int(i) for i in p) for p in np.argwhere(mask)])


def verify_willmore(p: ImmersionPatch, tol: float, class_tol: float | None = None) -> MapReport:
    """Willmore test through the conformal Gauss map.

    The immersion is Willmore away from umbilics iff its conformal Gauss map
    is harmonic (it is always conformal for a conformal parametrization).
    Umbilic nodes are masked and listed in the report.
    """
    f = conformal_gauss_map(p, strict=False)
    rep = verify_map(f, tol, mask=p.umbilic, class_tol=class_tol)
    rep.energy = willmore_energy(p)
    return rep

