"""Primitive connections, frame integration and primitive-frame extraction.

A connection is the pair A = F^{-1} F_z, B = F^{-1} F_zbar = conj(A) sampled on
the nodes of a lattice grid.  It is either periodic, with derivatives taken
spectrally, or carries an evaluator z -> (A, A_x, A_y) for data that is not
periodic (1-D Toda reductions, synthetic test connections).

The coefficient pattern of a primitive frame is

    A = sum_k a_k X_k + sum_{j=0}^n c_j R_{alpha_j},

where X_k has entries a_k at (2k, 2k+1) and -a_k at (2k+1, 2k) for k < n, and
a_n at both (2n, 2n+1) and (2n+1, 2n) (one-based indices).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import expm, null_space

from .lattice import Lattice, fourier_shift, spectral_derivative
from .mink import (
    bilinear,
    conjugate_transpose_u,
    membership_residual,
    project_to_group,
    signature,
)
from .rootsys import RootSystem, build_root_system, grade_project, omega_matrix, root_coefficients
from .seq import HarmonicSequence, TorusMap, fill_masked
from .toda import CyclicElement, TodaField, Trajectory, check_brackets, vacuum_solve

PATTERN_TOL = 1e-8
CURVATURE_PRECONDITION = 1e-6
DRIFT_TOL = 1e-10
STEP_NORM = 2e-3  # target h * |A| per RK4 substep


class PatternError(RuntimeError):
    pass


class CurvatureError(RuntimeError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"connection is not flat: curvature residual {residual:.3e} >= {tol:.3e}")
        self.residual = residual


class FrameDegeneracyError(RuntimeError):
    def __init__(self, message: str, nodes):
        super().__init__(f"{message} at nodes {list(nodes)[:10]}")
        self.nodes = list(nodes)


class NotDoublyPeriodicError(RuntimeError):
    pass


Evaluator = Callable[[np.ndarray], tuple]


# Coefficient pattern

def cartan_pattern(n: int, a) -> np.ndarray:
    """sum_k a_k X_k as matrices; a has shape (..., n)."""
    a = np.asarray(a, dtype=complex)
    d = 2 * n + 1
    M = np.zeros(a.shape[:-1] + (d, d), dtype=complex)
    for k in range(1, n + 1):
        M[..., 2 * k - 1, 2 * k] = a[..., k - 1]
        M[..., 2 * k, 2 * k - 1] = -a[..., k - 1] if k < n else a[..., k - 1]
    return M


def decode_pattern(A: np.ndarray, rs: RootSystem) -> tuple[np.ndarray, np.ndarray, float]:
    """(a, c, pattern_residual) for connection matrices of shape (..., d, d)."""
    n = rs.n
    idx = np.arange(1, n + 1)
    upper = A[..., 2 * idx - 1, 2 * idx]
    lower = A[..., 2 * idx, 2 * idx - 1]
    sign = np.where(idx < n, -1.0, 1.0)
    a = 0.5 * (upper + sign * lower)
    c = root_coefficients(rs, A)
    model = cartan_pattern(n, a) + np.einsum("...j,jab->...ab", c, np.array([rs.simple_vector(j) for j in range(n + 1)]))
    resid = float(np.abs(A - model).max()) if A.size else 0.0
    return a, c, resid


@dataclass(frozen=True)
class PrimitiveConnection:
    """A = F^{-1}F_z and B = F^{-1}F_zbar on an N x M grid of a lattice."""

    n: int
    lattice: Lattice
    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    c: np.ndarray
    pattern_residual: float
    evaluator: Optional[Evaluator] = field(default=None, compare=False, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape[:2]

    @property
    def periodic(self) -> bool:
        return self.evaluator is None

    @classmethod
    def from_grid(cls, lattice: Lattice, A: np.ndarray, B: np.ndarray | None = None, rs=None):
        A = np.asarray(A, dtype=complex)
        n = (A.shape[-1] - 1) // 2
        rs = rs or build_root_system(n)
        B = np.conj(A) if B is None else np.asarray(B, dtype=complex)
        a, c, res = decode_pattern(A, rs)
        return cls(n, lattice, A, B, a, c, res)

    @classmethod
    def from_evaluator(cls, lattice: Lattice, N: int, M: int, fn: Evaluator, rs=None):
        """fn(z) -> (A, A_x, A_y) at complex points z; B = conj(A)."""
        z = lattice.nodes(N, M)
        A = np.asarray(fn(z)[0], dtype=complex)
        n = (A.shape[-1] - 1) // 2
        rs = rs or build_root_system(n)
        a, c, res = decode_pattern(A, rs)
        return cls(n, lattice, A, np.conj(A), a, c, res, evaluator=fn)

    def derivatives(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A_z, A_zbar, B_z, B_zbar) at the nodes."""
        if self.evaluator is None:
            d = lambda X, p, q: spectral_derivative(X, self.lattice, p, q, warn=False)
            return d(self.A, 1, 0), d(self.A, 0, 1), d(self.B, 1, 0), d(self.B, 0, 1)
        _, Ax, Ay = self.evaluator(self.lattice.nodes(*self.shape))
        Bx, By = np.conj(Ax), np.conj(Ay)
        return 0.5 * (Ax - 1j * Ay), 0.5 * (Ax + 1j * Ay), 0.5 * (Bx - 1j * By), 0.5 * (Bx + 1j * By)

    def curvature(self) -> float:
        """max |B_z - A_zbar + [A, B]|."""
        _, Azb, Bz, _ = self.derivatives()
        R = Bz - Azb + self.A @ self.B - self.B @ self.A
        return float(np.abs(R).max())

    def sample(self, z: np.ndarray) -> np.ndarray:
        if self.evaluator is None:
            raise ValueError("off-grid sampling needs an evaluator")
        return np.asarray(self.evaluator(z)[0], dtype=complex)


def exp_omega(omega) -> np.ndarray:
    """exp(Omega) for Omega = i sum omega_k T_k, in closed form (block diagonal).

    Rotation blocks give cosh w I + i sinh w J and the boost block gives
    cos w I + i sin w K, with J, K the generator blocks.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1]
    d = 2 * n + 1
    E = np.zeros(omega.shape[:-1] + (d, d), dtype=complex)
    E[..., 0, 0] = 1.0
    for k in range(1, n + 1):
        w = omega[..., k - 1]
        p, q = 2 * k - 1, 2 * k
        if k < n:
            ch, sh = np.cosh(w), np.sinh(w)
            E[..., p, p] = E[..., q, q] = ch
            E[..., q, p] = 1j * sh
            E[..., p, q] = -1j * sh
        else:
            co, si = np.cos(w), np.sin(w)
            E[..., p, p] = E[..., q, q] = co
            E[..., q, p] = E[..., p, q] = 1j * si
    return E


def toda_connection(field: TodaField, W: CyclicElement, rs: RootSystem | None = None) -> PrimitiveConnection:
    """A = Omega_z + Ad_{exp Omega} W on the grid of a 2-D Toda field."""
    rs = rs or build_root_system(field.n)
    if field.lattice is None:
        raise ValueError("2-D Toda connection needs a lattice field; use toda_connection_1d")
    wz = spectral_derivative(field.omega, field.lattice, 1, 0, warn=False)
    E = exp_omega(field.omega)
    Einv = exp_omega(-field.omega)
    A = omega_matrix(wz) + E @ W.matrix(rs) @ Einv
    conn = PrimitiveConnection.from_grid(field.lattice, A, rs=rs)
    if conn.pattern_residual >= PATTERN_TOL:
        raise PatternError(f"Toda connection leaves the primitive pattern by {conn.pattern_residual:.3e}")
    return conn


def toda_connection_1d(
    traj: Trajectory, W: CyclicElement, N: int, M: int, height: float, rs: RootSystem | None = None
) -> PrimitiveConnection:
    """Toda connection of a 1-D trajectory, x along the first period.

    omega and omega' are interpolated by cubic Hermite splines; omega'' comes
    from the equation itself.  The grid covers [0, x_end) x [0, height).
    """
    rs = rs or build_root_system(W.n)
    beta = check_brackets(rs)
    m = np.asarray(W.m)
    R = np.array([rs.simple_vector(j) for j in range(rs.n + 1)])
    r = np.array(W.r)

    def acc(w):
        return 2 * ((m * np.exp(2 * rs.simple_values(w))) @ beta).real

    acc_grid = acc(traj.omega)
    s_w = CubicHermiteSpline(traj.x, traj.omega, traj.domega, axis=0)
    s_dw = CubicHermiteSpline(traj.x, traj.domega, acc_grid, axis=0)

    def fn(z):
        x = np.real(z)
        w = s_w(x)
        dw = s_dw(x)
        ddw = acc(w)
        ea = np.exp(rs.simple_values(w))  # e^{alpha_j(Omega)}
        da = rs.simple_values(dw)  # alpha_j(Omega'), linear in omega
        A = omega_matrix(0.5 * dw) + np.einsum("...j,jab->...ab", r * ea, R)
        Ax = omega_matrix(0.5 * ddw) + np.einsum("...j,jab->...ab", r * ea * da, R)
        return A, Ax, np.zeros_like(Ax)

    lat = Lattice.rectangle(float(traj.x[-1]), height)
    return PrimitiveConnection.from_evaluator(lat, N, M, fn, rs=rs)


def product_connection(P: np.ndarray, Q: np.ndarray, lattice: Lattice, N: int, M: int) -> tuple:
    """Flat non-abelian connection of F = exp(xP) exp(yQ), with its closed-form frame.

    F^{-1}F_x = Ad_{exp(-yQ)} P and F^{-1}F_y = Q, so A = (X - iQ)/2.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)

    def fn(z):
        y = np.imag(z)
        Eq = expm(-y[..., None, None] * Q)
        Eqi = expm(y[..., None, None] * Q)
        X = Eq @ P @ Eqi
        Xy = X @ Q - Q @ X  # d/dy of exp(-yQ) P exp(yQ)
        A = 0.5 * (X - 1j * Q)
        return A.astype(complex), np.zeros_like(A, dtype=complex), (0.5 * Xy).astype(complex)

    def frame(z):
        x, y = np.real(z), np.imag(z)
        return expm(x[..., None, None] * P) @ expm(y[..., None, None] * Q)

    return PrimitiveConnection.from_evaluator(lattice, N, M, fn), frame


# Frame integration

@dataclass(frozen=True)
class FramedMap:
    """Group-valued frame F on an N x M lattice grid."""

    lattice: Lattice
    F: np.ndarray
    provenance: str
    reprojections: int = 0
    mixed_path_residual: float = float("nan")
    monodromy: float = float("nan")
    substeps: int = 1

    @property
    def n(self) -> int:
        return (self.F.shape[-1] - 1) // 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.F.shape[:2]

    def group_residual(self) -> float:
        return membership_residual(self.F)


def _shifted_samples(conn: PrimitiveConnection, axis: int, k: int) -> np.ndarray:
    """Direction-projected connection at offsets i/(2k) cells along an axis, i = 0..2k.

    Returns shape (2k+1, N, M, d, d); the last slice is the next node.
    """
    lat = conn.lattice
    N, M = conn.shape
    w = lat.w1 if axis == 0 else lat.w2
    cells = N if axis == 0 else M
    out = []
    for i in range(2 * k + 1):
        delta = i / (2 * k)
        if conn.evaluator is None:
            du, dv = (delta, 0.0) if axis == 0 else (0.0, delta)
            A = fourier_shift(conn.A, du, dv) if delta else conn.A
            B = fourier_shift(conn.B, du, dv) if delta else conn.B
        else:
            z = lat.nodes(N, M) + delta * w / cells
            A = conn.sample(z)
            B = np.conj(A)
        out.append(w * A + np.conj(w) * B)
    return np.array(out) / cells  # per unit cell parameter


class _Stepper:
    def __init__(self, samples: np.ndarray, k: int, reproject: bool):
        self.S = samples
        self.k = k
        self.reproject = reproject
        self.count = 0

    def step(self, F: np.ndarray, idx) -> np.ndarray:
        """Advance F (shape (L, d, d)) one cell from the nodes ``idx`` (tuple of index arrays)."""
        h = 1.0 / self.k
        for i in range(self.k):
            A0 = self.S[2 * i][idx]
            Ah = self.S[2 * i + 1][idx]
            A1 = self.S[2 * i + 2][idx]
            k1 = F @ A0
            k2 = (F + 0.5 * h * k1) @ Ah
            k3 = (F + 0.5 * h * k2) @ Ah
            k4 = (F + h * k3) @ A1
            F = F + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if self.reproject:
            drift = _drift(F)
            bad = drift > DRIFT_TOL
            if bad.any():
                F = F.copy()
                F[bad] = project_to_group(F[bad])
                self.count += int(bad.sum())
        return F


def _drift(F: np.ndarray) -> np.ndarray:
    n = (F.shape[-1] - 1) // 2
    s = signature(n)
    R = np.swapaxes(F, -1, -2) @ (s[:, None] * F) - np.diag(s)
    return np.abs(R).reshape(F.shape[0], -1).max(axis=1)


def auto_substeps(conn: PrimitiveConnection) -> int:
    lat = conn.lattice
    N, M = conn.shape
    norm = float(np.abs(conn.A).sum(axis=-1).max())
    h = max(abs(lat.w1) / N, abs(lat.w2) / M)
    return max(1, int(np.ceil(2 * h * norm / STEP_NORM)))


def integrate_frame(
    conn: PrimitiveConnection,
    substeps: int | None = None,
    reproject: bool = True,
    check_curvature: bool = True,
) -> FramedMap:
    """Integrate F_u = F A_u from F(0) = Id by RK4 along grid lines.

    A spine is integrated along the second period at s = 0; every row then
    proceeds along the first period.  The mixed-path residual compares the far
    node (N-1, M-1) reached this way with the route first along s = 0... (N-1)
    at t = 0 and then up the last column.
    """
    if check_curvature:
        curv = conn.curvature()
        if curv >= CURVATURE_PRECONDITION:
            raise CurvatureError(curv, CURVATURE_PRECONDITION)
    N, M = conn.shape
    d = conn.A.shape[-1]
    k = auto_substeps(conn) if substeps is None else int(substeps)
    Su = _Stepper(_shifted_samples(conn, 0, k), k, reproject)
    Sv = _Stepper(_shifted_samples(conn, 1, k), k, reproject)

    F = np.empty((N, M, d, d), dtype=complex)
    G = np.eye(d, dtype=complex)[None]
    F[0, 0] = G[0]
    for t in range(M - 1):
        G = Sv.step(G, (np.array([0]), np.array([t])))
        F[0, t + 1] = G[0]
    rows = np.arange(M)
    G = F[0].copy()
    for s in range(N - 1):
        G = Su.step(G, (np.full(M, s), rows))
        F[s + 1] = G

    # alternative route to the far corner: along t = 0, then up column N-1
    H = F[N - 1, 0][None]
    for t in range(M - 1):
        H = Sv.step(H, (np.array([N - 1]), np.array([t])))
    mixed = float(np.abs(H[0] - F[N - 1, M - 1]).max())

    if np.abs(F.imag).max() < 1e-12 * max(1.0, np.abs(F.real).max()) or _is_real_connection(conn):
        F = F.real.astype(complex)
    return FramedMap(conn.lattice, F, "toda_integrated", Su.count + Sv.count, mixed, float("nan"), k)


def _is_real_connection(conn: PrimitiveConnection) -> bool:
    return bool(np.abs(conn.B - np.conj(conn.A)).max() < 1e-14)


def vacuum_frame(A: np.ndarray, lattice: Lattice, N: int, M: int) -> FramedMap:
    """Closed form F(z) = exp(z A + zbar conj(A)) for constant commuting A, conj(A)."""
    z = lattice.nodes(N, M)
    X = z[..., None, None] * A + np.conj(z)[..., None, None] * np.conj(A)
    F = expm(X)
    return FramedMap(lattice, F.real.astype(complex), "toda_integrated", 0, 0.0)


def vacuum_lattice(A: np.ndarray, tol: float = 1e-9) -> Lattice:
    """Period lattice of z -> exp(z A + zbar conj(A)) for constant commuting A, conj(A).

    With X = A + conj(A) and Y = i(A - conj(A)) the frame is exp(x X + y Y).
    The joint eigenvalues i(k_x, k_y) give frequency vectors; periods are dual
    to a basis of the group they generate.  Raises NotDoublyPeriodicError when
    the frequencies do not generate a rank-2 lattice.
    """
    X = (A + np.conj(A)).real
    Y = (1j * (A - np.conj(A))).real
    if np.abs(X @ Y - Y @ X).max() > tol:
        raise NotDoublyPeriodicError("frame generators do not commute")
    rng = np.random.default_rng(0)
    t = rng.normal()
    lam, V = np.linalg.eig(X + t * Y)
    if np.linalg.cond(V) > 1e10:
        raise NotDoublyPeriodicError("frame generator is not diagonalizable")
    Vi = np.linalg.inv(V)
    kx = np.diag(Vi @ X @ V)
    ky = np.diag(Vi @ Y @ V)
    if max(np.abs(kx.real).max(), np.abs(ky.real).max()) > tol:
        raise NotDoublyPeriodicError("frame has growing modes")
    K = np.column_stack([kx.imag, ky.imag])
    K = K[np.linalg.norm(K, axis=1) > tol]
    if len(K) == 0:
        raise NotDoublyPeriodicError("frame is constant")
    basis = _lattice_basis(K, tol)
    P = 2 * np.pi * np.linalg.inv(basis)  # columns are periods
    w1 = complex(P[0, 0], P[1, 0])
    w2 = complex(P[0, 1], P[1, 1])
    if (w2 / w1).imag < 0:
        w2 = -w2
    return Lattice(w1, w2)


def _lattice_basis(K: np.ndarray, tol: float) -> np.ndarray:
    """Two vectors generating every row of K over the integers (rows of the result)."""
    cands = list(K) + [a - b for a in K for b in K]
    cands = [c for c in cands if np.linalg.norm(c) > tol]
    cands.sort(key=np.linalg.norm)
    scale = max(np.linalg.norm(c) for c in K)
    best = None
    for i, b1 in enumerate(cands):
        for b2 in cands[i + 1 :]:
            B = np.array([b1, b2])
            det = abs(np.linalg.det(B))
            if det < tol * scale**2:
                continue
            coef = K @ np.linalg.inv(B)
            if np.abs(coef - np.rint(coef)).max() < 1e-7:
                if best is None or det < best[0] - 1e-9 * scale**2:
                    best = (det, B)
    if best is None:
        raise NotDoublyPeriodicError("frequencies are not commensurable in a rank-2 lattice")
    return best[1]


def reconstruct_map(F: FramedMap, norm_tol: float = 1e-8) -> TorusMap:
    """f = F e_1."""
    return TorusMap(F.n, F.lattice, F.F[..., :, 0], norm_tol=norm_tol)


def decode_coefficients(F: FramedMap, rs: RootSystem | None = None) -> PrimitiveConnection:
    """F^{-1}F_z by spectral differentiation, decoded into (a, c)."""
    rs = rs or build_root_system(F.n)
    Fz = spectral_derivative(F.F, F.lattice, 1, 0, warn=False)
    A = conjugate_transpose_u(F.F) @ Fz
    Fzb = spectral_derivative(F.F, F.lattice, 0, 1, warn=False)
    B = conjugate_transpose_u(F.F) @ Fzb
    return PrimitiveConnection.from_grid(F.lattice, A, B, rs=rs)


# Primitive frames from harmonic data

def _traversal(N: int, M: int):
    """Spine (0, t) then rows; yields (node, predecessor)."""
    yield (0, 0), None
    for t in range(1, M):
        yield (0, t), (0, t - 1)
    for s in range(1, N):
        for t in range(M):
            yield (s, t), (s - 1, t)


def _complement_pair(cols: np.ndarray, v0=None, w0=None):
    """Orthonormal (v, w), <v,v> = 1 = -<w,w>, orthogonal to the given columns.

    cols has shape (2n+1, 2n-1) and is Minkowski-orthonormal.  With a previous
    pair, it is projected onto the complement and re-orthonormalized; otherwise
    a basis of the complement is computed from scratch.
    """
    d = cols.shape[0]
    s = signature((d - 1) // 2)
    if v0 is None:
        basis = null_space((cols.T * s[None, :]))
        if basis.shape[1] != 2:
            return None
        gram = basis.T @ (s[:, None] * basis)
        ev, U = np.linalg.eigh(gram)
        if not (ev[0] < 0 < ev[1]):
            return None
        w0 = basis @ U[:, 0]
        v0 = basis @ U[:, 1]
    proj = lambda x: x - cols @ (cols.T @ (s * x))
    w = proj(w0)
    ww = w @ (s * w)
    if ww >= 0:
        return None
    w = w / np.sqrt(-ww)
    v = proj(v0)
    v = v + (v @ (s * w)) * w
    vv = v @ (s * v)
    if vv <= 0:
        return None
    v = v / np.sqrt(vv)
    return v, w


def extract_primitive_frame(
    f: TorusMap, s: HarmonicSequence, balance: bool = True
) -> FramedMap:
    """Primitive frame of a harmonic map with everywhere defined sequence.

    Columns 1..2n-1 are f and the normalized real and imaginary parts of
    f_1..f_{n-1}.  The last two columns span the (1,1)-plane orthogonal to
    them.  When f_n has components along both null directions v -+ w of that
    plane, the boost is fixed by making them equal in size (this gives
    |c_0| = |c_n|, as for Toda frames); the signs are fixed by w_{2n+1} > 0 and
    det F = +1.  Otherwise (isotropic maps) the pair is carried from node to
    node by projection and Gram-Schmidt, and the mismatch after a full circuit
    of each period is reported as monodromy.
    """
    n = f.n
    if s.r < n - 1:
        raise ValueError(f"sequence must reach f_{n - 1}, has length {s.r}")
    if s.obstructions:
        raise FrameDegeneracyError("harmonic sequence is not everywhere defined", s.obstructions)
    N, M = f.shape
    d = 2 * n + 1
    F = np.zeros((N, M, d, d))
    F[..., 0] = f.values.real
    for j in range(1, n):
        fj = s.entries[j]
        nrm = np.sqrt(np.clip(s.norms[j].real, 0, None))
        mask = s.masks[j - 1] | s.masks[j] | (nrm < 1e-12)
        safe = np.where(mask, 1.0, nrm)[..., None]
        c1 = ((fj + np.conj(fj)) / (np.sqrt(2) * safe)).real
        c2 = (1j * (np.conj(fj) - fj) / (np.sqrt(2) * safe)).real
        if mask.any():
            c1 = fill_masked(c1, mask)
            c2 = fill_masked(c2, mask)
        F[..., 2 * j - 1] = c1
        F[..., 2 * j] = c2

    fn_ = s.entries[n] if s.r >= n else None
    bad = []
    propagated = False
    prev: dict = {}
    seed_pair = None
    for (p, q), pred in _traversal(N, M):
        cols = F[p, q, :, : 2 * n - 1]
        v0, w0 = (None, None) if pred is None else prev[pred]
        pair = _complement_pair(cols, v0, w0)
        if pair is None:
            bad.append((p, q))
            pair = prev[pred] if pred is not None else (np.eye(d)[d - 2], np.eye(d)[d - 1])
        v, w = pair
        if balance and fn_ is not None:
            x = fn_[p, q]
            pm = bilinear(x, v - w) / 2
            pp = bilinear(x, v + w) / 2
            if abs(pm) > 1e-12 and abs(pp) > 1e-12:
                rho = 0.5 * np.log(abs(pm) / abs(pp))
                v, w = np.cosh(rho) * v + np.sinh(rho) * w, np.sinh(rho) * v + np.cosh(rho) * w
                if w[-1] < 0:
                    w = -w
            else:
                propagated = True
        else:
            propagated = True
        prev[(p, q)] = (v, w)
        if pred is None:
            seed_pair = (v, w)
        F[p, q, :, d - 2] = v
        F[p, q, :, d - 1] = w
    if bad:
        raise FrameDegeneracyError("orthogonal complement is not of signature (1,1)", bad)
    det = np.linalg.det(F)
    F[..., d - 2] *= np.sign(det)[..., None]

    monodromy = 0.0
    if propagated:
        # carry the pair once more around each period and compare
        for start, path in (((0, M - 1), (0, 0)), ((N - 1, 0), (0, 0))):
            cols = F[path[0], path[1], :, : 2 * n - 1]
            pair = _complement_pair(cols, *prev[start])
            if pair is not None and seed_pair is not None:
                monodromy = max(
                    monodromy,
                    float(np.abs(pair[0] - seed_pair[0]).max()),
                    float(np.abs(pair[1] - seed_pair[1]).max()),
                )
    return FramedMap(f.lattice, F.astype(complex), "extracted_from_map", 0, float("nan"), monodromy)


# Loop-parameter flatness and finite-type certificates

def _check_lambda(lam: complex) -> None:
    if abs(abs(lam) - 1.0) > 1e-12:
        raise ValueError(f"loop parameter must lie on the unit circle, |lambda| = {abs(lam)!r}")


def _graded_parts(conn: PrimitiveConnection, rs: RootSystem):
    """Grade-0 and grade-1 parts of A, grade-0 and grade-(-1) parts of B, with derivatives."""
    Az, Azb, Bz, Bzb = conn.derivatives()
    g = lambda X, j: grade_project(rs, X, j)
    m1 = rs.period - 1
    return {
        "A0": g(conn.A, 0), "A1": g(conn.A, 1),
        "B0": g(conn.B, 0), "Bm": g(conn.B, m1),
        "A0zb": g(Azb, 0), "A1zb": g(Azb, 1),
        "B0z": g(Bz, 0), "Bmz": g(Bz, m1),
        "A0z": g(Az, 0), "A1z": g(Az, 1),
        "B0zb": g(Bzb, 0), "Bmzb": g(Bzb, m1),
    }


def extended_connection(parts: dict, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """(A_lambda, B_lambda) = (A_0 + lambda A_1, B_0 + lambda^{-1} B_{-1})."""
    return parts["A0"] + lam * parts["A1"], parts["B0"] + parts["Bm"] / lam


def extended_curvature(conn: PrimitiveConnection, lam: complex, rs: RootSystem | None = None, parts=None) -> float:
    """max |d_z B_lambda - d_zbar A_lambda + [A_lambda, B_lambda]| over the grid."""
    _check_lambda(lam)
    rs = rs or build_root_system(conn.n)
    parts = parts if parts is not None else _graded_parts(conn, rs)
    Al, Bl = extended_connection(parts, lam)
    Bl_z = parts["B0z"] + parts["Bmz"] / lam
    Al_zb = parts["A0zb"] + lam * parts["A1zb"]
    R = Bl_z - Al_zb + Al @ Bl - Bl @ Al
    return float(np.abs(R).max())


def unit_roots(k: int = 8) -> list[complex]:
    return [complex(np.exp(2j * np.pi * j / k)) for j in range(k)]


def max_extended_curvature(conn: PrimitiveConnection, lams=None, rs=None) -> float:
    rs = rs or build_root_system(conn.n)
    parts = _graded_parts(conn, rs)
    lams = unit_roots() if lams is None else lams
    return max(extended_curvature(conn, l, rs, parts) for l in lams)


@dataclass(frozen=True)
class LoopPolynomial:
    """xi(lambda) = sum_d lambda^d xi_d for d = -degree..degree.

    Coefficients are constant matrices (d, d) or grids (N, M, d, d).
    """

    coeffs: dict

    @property
    def degree(self) -> int:
        return max((abs(k) for k in self.coeffs), default=0)

    def __call__(self, lam: complex) -> np.ndarray:
        return sum(lam**k * np.asarray(c) for k, c in self.coeffs.items())

    def is_zero(self) -> bool:
        return all(not np.any(np.asarray(c)) for c in self.coeffs.values())

    def reality_residual(self) -> float:
        """max |xi_{-d} - conj(xi_d)|, which makes xi(lambda) real on |lambda| = 1."""
        out = 0.0
        for k, c in self.coeffs.items():
            other = self.coeffs.get(-k)
            other = np.zeros_like(c) if other is None else other
            out = max(out, float(np.abs(np.asarray(other) - np.conj(c)).max()))
        return out

    def twisting_residual(self, rs: RootSystem) -> float:
        """max over d of the part of xi_d outside grade d (mod 2n)."""
        out = 0.0
        for k, c in self.coeffs.items():
            c = np.asarray(c, dtype=complex)
            out = max(out, float(np.abs(c - grade_project(rs, c, k % rs.period)).max()))
        return out


@dataclass(frozen=True)
class CertificateReport:
    residual: float
    trivial: bool
    reality: float
    twisting: float
    lambdas: tuple

    def passed(self, tol: float) -> bool:
        return self.residual < tol and not self.trivial


def finite_type_certificate(
    xi: LoopPolynomial, conn: PrimitiveConnection, lambdas=None, rs: RootSystem | None = None
) -> CertificateReport:
    """max over lambda and nodes of |d_z xi - [xi, A_lambda]| and |d_zbar xi - [xi, B_lambda]|."""
    rs = rs or build_root_system(conn.n)
    lambdas = tuple(unit_roots() if lambdas is None else lambdas)
    for l in lambdas:
        _check_lambda(l)
    parts = _graded_parts(conn, rs)
    shape = conn.A.shape

    def deriv(c, p, q):
        c = np.asarray(c, dtype=complex)
        if c.ndim == 2:
            return np.zeros(shape, dtype=complex)
        if not conn.periodic:
            raise ValueError("grid-valued polynomial fields need a periodic connection")
        return spectral_derivative(c, conn.lattice, p, q, warn=False)

    dz = {k: deriv(c, 1, 0) for k, c in xi.coeffs.items()}
    dzb = {k: deriv(c, 0, 1) for k, c in xi.coeffs.items()}
    worst = 0.0
    for l in lambdas:
        X = np.broadcast_to(xi(l), shape) if xi.coeffs else np.zeros(shape, dtype=complex)
        Xz = sum(l**k * v for k, v in dz.items()) if dz else 0
        Xzb = sum(l**k * v for k, v in dzb.items()) if dzb else 0
        Al, Bl = extended_connection(parts, l)
        r1 = Xz - (X @ Al - Al @ X)
        r2 = Xzb - (X @ Bl - Bl @ X)
        worst = max(worst, float(np.abs(r1).max()), float(np.abs(r2).max()))
    return CertificateReport(worst, xi.is_zero(), xi.reality_residual(), xi.twisting_residual(rs), lambdas)


def vacuum_killing_field(conn: PrimitiveConnection, rs: RootSystem | None = None) -> LoopPolynomial:
    """xi = lambda^{-1} B_{-1} + lambda A_1 for a constant connection."""
    rs = rs or build_root_system(conn.n)
    A1 = grade_project(rs, conn.A[0, 0], 1)
    Bm = grade_project(rs, conn.B[0, 0], rs.period - 1)
    return LoopPolynomial({1: A1, -1: Bm})


# Vacuum pipeline helpers

@dataclass(frozen=True)
class Vacuum:
    W: CyclicElement
    omega: np.ndarray
    A: np.ndarray
    lattice: Lattice
    c: np.ndarray


def vacuum(W: CyclicElement, rs: RootSystem | None = None) -> Vacuum:
    """Vacuum solution, its constant connection and the period lattice of its frame."""
    rs = rs or build_root_system(W.n)
    sol = vacuum_solve(W, rs)
    E = exp_omega(sol.omega)
    A = E @ W.matrix(rs) @ exp_omega(-sol.omega)
    lat = vacuum_lattice(A)
    c = np.array(W.r) * np.exp(rs.simple_values(sol.omega))
    return Vacuum(W, sol.omega, A, lat, c)


def vacuum_connection(vac: Vacuum, N: int, M: int, rs=None) -> PrimitiveConnection:
    field_ = TodaField.constant(vac.omega, vac.lattice, N, M)
    return toda_connection(field_, vac.W, rs)
