"""The affine Toda field equation for so(2n,1).

The unknown is Omega = i sum_k omega_k T_k with real omega (see
:func:`desitter_toda.rootsys.omega_matrix`).  For a cyclic element
W = sum r_j R_{alpha_j} the equation reads

    2 Omega_{z zbar} = sum_j m_j exp(2 alpha_j(Omega)) [R_{alpha_j}, R_{-alpha_j}],

with m_j = r_j conj(r_{pi(j)}).  This is the integrability condition of
F^{-1} F_z = Omega_z + Ad_{exp Omega} W together with its conjugate; under the
reality condition conj(r_j) = r_{pi(j)} it gives m_j = r_j^2.  Brackets are
expressed in omega-coordinates, b_j = i sum_k beta_jk T_k, and the right-hand
side is real in those coordinates even though beta_0 and beta_n are not.

Rescaling R_{alpha_j} by s rescales m_j by s^{-2} for the same W, so the
numbers m_j are tied to the stored root-vector normalization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from .lattice import Lattice, check_grid, spectral_derivative
from .rootsys import RootSystem, build_root_system, omega_matrix

BLOWUP = 1e3
REALITY_TOL = 1e-14


class RootTableError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class SingularJacobianError(ConvergenceError):
    pass


@dataclass(frozen=True)
class CyclicElement:
    """W = sum_j r_j R_{alpha_j}, j = 0..n, with conj(r_j) = r_{pi(j)}."""

    r: tuple
    n: int

    def __post_init__(self):
        r = tuple(complex(x) for x in self.r)
        object.__setattr__(self, "r", r)
        if len(r) != self.n + 1:
            raise ValueError(f"need {self.n + 1} coefficients, got {len(r)}")
        if any(abs(x) == 0 for x in r):
            raise ValueError("cyclic element needs every r_j nonzero")
        pi = build_root_system(self.n).pi
        bad = max(abs(np.conj(r[j]) - r[pi[j]]) for j in range(self.n + 1))
        if bad > REALITY_TOL * max(1.0, max(abs(x) for x in r)):
            raise ValueError(f"reality condition conj(r_j) = r_pi(j) violated by {bad:.3e}")

    @property
    def m(self) -> np.ndarray:
        pi = build_root_system(self.n).pi
        return np.array([self.r[j] * np.conj(self.r[pi[j]]) for j in range(self.n + 1)])

    def matrix(self, rs: RootSystem | None = None) -> np.ndarray:
        rs = rs or build_root_system(self.n)
        return sum(c * rs.simple_vector(j) for j, c in enumerate(self.r))

    def scaled(self, t: float) -> "CyclicElement":
        return CyclicElement(tuple(t * x for x in self.r), self.n)

    @classmethod
    def from_m(cls, m, n: int) -> "CyclicElement":
        """Real positive m_j -> r_j = sqrt(m_j)."""
        return cls(tuple(np.sqrt(np.asarray(m, dtype=float))), n)


def default_cyclic(n: int) -> CyclicElement:
    """r = (1, sqrt 2, ..., sqrt 2, 1); for n = 1, r = (1, 1)."""
    if n == 1:
        return CyclicElement((1.0, 1.0), 1)
    return CyclicElement((1.0,) + (np.sqrt(2.0),) * (n - 1) + (1.0,), n)


@dataclass(frozen=True)
class TodaField:
    """omega on a lattice grid (shape (N, M, n)) or on a 1-D interval (shape (L, n))."""

    omega: np.ndarray
    lattice: Optional[Lattice] = None
    h: Optional[float] = None

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "omega", w)
        if self.lattice is not None:
            if w.ndim != 3:
                raise ValueError("2-D Toda field needs omega of shape (N, M, n)")
            check_grid(*w.shape[:2])
        elif self.h is None:
            raise ValueError("give either a lattice or a 1-D step h")

    @property
    def n(self) -> int:
        return self.omega.shape[-1]

    def matrix(self) -> np.ndarray:
        return omega_matrix(self.omega)

    @classmethod
    def constant(cls, omega, lattice: Lattice, N: int, M: int) -> "TodaField":
        omega = np.asarray(omega, dtype=float)
        return cls(np.broadcast_to(omega, (N, M, omega.size)).copy(), lattice=lattice)


def check_brackets(rs: RootSystem, tol: float = 1e-10) -> np.ndarray:
    """Bracket coordinates beta, after checking each bracket lies in t^C."""
    mask = np.zeros((rs.dim, rs.dim), dtype=bool)
    for k in range(1, rs.n + 1):
        mask[2 * k, 2 * k - 1] = mask[2 * k - 1, 2 * k] = True
    for j in range(rs.n + 1):
        P, Q = rs.simple_vector(j), rs.negative_simple_vector(j)
        b = P @ Q - Q @ P
        off = float(np.abs(np.where(mask, 0, b)).max())
        if off > tol:
            raise RootTableError(f"[R_alpha_{j}, R_-alpha_{j}] leaves the Cartan subalgebra by {off:.3e}")
    return rs.bracket_coords()


def toda_rhs(omega: np.ndarray, W: CyclicElement, rs: RootSystem) -> np.ndarray:
    """sum_j m_j exp(2 alpha_j(Omega)) beta_j, complex, shape (..., n)."""
    beta = check_brackets(rs)
    a = rs.simple_values(omega)
    return (W.m * np.exp(2 * a)) @ beta


@dataclass(frozen=True)
class TodaResidual:
    max: float
    grid: np.ndarray
    rhs_imag: float


def toda_residual(field: TodaField, W: CyclicElement, rs: RootSystem | None = None) -> TodaResidual:
    """2 Omega_{z zbar} - RHS in omega-coordinates on a lattice grid."""
    rs = rs or build_root_system(field.n)
    if field.lattice is None:
        raise ValueError("residual evaluation needs a 2-D lattice field")
    lap = spectral_derivative(field.omega, field.lattice, 1, 1, warn=False)
    rhs = toda_rhs(field.omega, W, rs)
    R = 2 * lap - rhs
    return TodaResidual(float(np.abs(R).max()), R, float(np.abs(rhs.imag).max()))


@dataclass(frozen=True)
class VacuumSolution:
    omega: np.ndarray
    residual: float
    iterations: int

    def field(self, lattice: Lattice, N: int, M: int) -> TodaField:
        return TodaField.constant(self.omega, lattice, N, M)


def _rhs_and_jacobian(omega, W, rs, beta, grad):
    e = W.m * np.exp(2 * rs.simple_values(omega))
    G = e @ beta
    # d/d omega_k of e_j = 2 alpha_j(i T_k) e_j
    J = np.einsum("j,jk,jl->lk", e, 2 * grad, beta)
    return G, J


def vacuum_solve(
    W: CyclicElement,
    rs: RootSystem | None = None,
    omega_init=None,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> VacuumSolution:
    """Constant solution of the Toda equation by damped Newton iteration.

    Solves sum_j m_j exp(2 alpha_j(Omega)) beta_j = 0 for real omega with the
    analytic Jacobian.  The real part is driven to zero; the imaginary part
    vanishes identically under the reality condition.

    Without a seed, the real parts of omega start at 0 and the compact
    direction starts where the phases of m_j exp(2 alpha_j) cancel.  This
    is the origin in the gauge where every m_j is positive and avoids the
    spurious zero of the real part at opposite phases.
    """
    rs = rs or build_root_system(W.n)
    beta = check_brackets(rs)
    grad = rs.simple_gradients()
    w = phase_seed(W, rs) if omega_init is None else np.asarray(omega_init, dtype=float).copy()
    G, J = _rhs_and_jacobian(w, W, rs, beta, grad)
    res = float(np.abs(G).max())
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations", res)
        Jr = J.real
        if np.linalg.cond(Jr) > 1e14:
            raise SingularJacobianError("singular Jacobian; try another seed", res)
        step = np.linalg.solve(Jr, -G.real)
        t = 1.0
        while True:
            w_new = w + t * step
            G_new, J_new = _rhs_and_jacobian(w_new, W, rs, beta, grad)
            r_new = float(np.abs(G_new).max())
            if r_new < res or t < 1e-6:
                break
            t *= 0.5
        w, G, J, res = w_new, G_new, J_new, r_new
        it += 1
    return VacuumSolution(w, res, it)


def phase_seed(W: CyclicElement, rs: RootSystem | None = None) -> np.ndarray:
    """Least-squares omega with Im(log m_j + 2 alpha_j(omega)) = 0 for all j."""
    rs = rs or build_root_system(W.n)
    grad = rs.simple_gradients()
    A = 2 * np.array([g.imag for g in grad])
    b = -np.angle(W.m.astype(complex))
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def vacuum_null_vector(rs: RootSystem) -> np.ndarray:
    """Positive nu with sum_j nu_j b_j = 0, normalized so nu_0 = 1."""
    beta = rs.bracket_coords()
    ns = null_space(beta.T)
    if ns.shape[1] != 1:
        raise RootTableError(f"bracket relation space has dimension {ns.shape[1]}")
    nu = ns[:, 0] / ns[0, 0]
    return nu.real


def vacuum_closed_form(W: CyclicElement, rs: RootSystem | None = None) -> tuple[np.ndarray, float]:
    """Vacuum from m_j exp(2 alpha_j(Omega)) = kappa nu_j, solved on logarithms.

    Returns (omega, kappa).  omega_n is determined modulo pi only; compare
    exp(2 alpha_j) rather than omega.
    """
    rs = rs or build_root_system(W.n)
    nu = vacuum_null_vector(rs)
    grad = rs.simple_gradients()
    n = rs.n
    # unknowns: omega (n), log kappa
    A = np.zeros((2 * (n + 1), n + 1))
    rhs = np.zeros(2 * (n + 1))
    logm = np.log(W.m.astype(complex))
    for j in range(n + 1):
        A[2 * j, :n] = 2 * grad[j].real
        A[2 * j, n] = -1.0
        rhs[2 * j] = np.log(nu[j]) - logm[j].real
        A[2 * j + 1, :n] = 2 * grad[j].imag
        rhs[2 * j + 1] = -logm[j].imag
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return sol[:n], float(np.exp(sol[n]))


# One-dimensional reduction Omega = Omega(x), x = Re z, where
# Omega_{z zbar} = Omega_xx / 4 and the equation becomes omega'' = 2 RHS.

def kinetic_form(n: int) -> np.ndarray:
    """(1/2) tr(Omega' Omega') in omega-coordinates: diag(1, ..., 1, -1)."""
    g = np.ones(n)
    g[-1] = -1.0
    return np.diag(g)


def energy(omega, domega, W: CyclicElement, rs: RootSystem) -> np.ndarray:
    """Conserved quantity of the 1-D flow.

    E = (1/2) tr(Omega'^2) - sum_j m_j kappa_j exp(2 alpha_j(Omega)),
    kappa_j = tr(R_{alpha_j} R_{-alpha_j}).  Differentiating and using
    tr(Omega' [R_a, R_-a]) = alpha(Omega') kappa shows dE/dx = 0.
    """
    kappa = rs.trace_pairings()
    kin = np.einsum("...k,kl,...l->...", domega, kinetic_form(rs.n), domega)
    pot = (W.m * kappa * np.exp(2 * rs.simple_values(omega))).sum(axis=-1)
    return kin - pot.real


@dataclass(frozen=True)
class Trajectory:
    x: np.ndarray
    omega: np.ndarray
    domega: np.ndarray
    energy: np.ndarray
    truncated: bool = False
    message: str = ""
    W: Optional[CyclicElement] = field(default=None, compare=False)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0]) if len(self.x) > 1 else 0.0

    def energy_drift(self) -> float:
        return float(np.abs(self.energy - self.energy[0]).max())

    def field(self) -> TodaField:
        return TodaField(self.omega, h=self.h)

    def to_csv(self, path) -> None:
        n = self.omega.shape[1]
        header = ",".join(["x"] + [f"omega{k}" for k in range(1, n + 1)] + ["E"])
        data = np.column_stack([self.x, self.omega, self.energy])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.12e")


def integrate_1d(
    omega0,
    domega0,
    W: CyclicElement,
    rs: RootSystem | None = None,
    length: float = 10.0,
    h: float = 1e-3,
) -> Trajectory:
    """Classical RK4 for omega'' = 2 Re sum_j m_j exp(2 alpha_j(Omega)) beta_j."""
    if h <= 0:
        raise ValueError("step must be positive")
    if length < h:
        raise ValueError("length must be at least one step")
    rs = rs or build_root_system(W.n)
    beta = check_brackets(rs)
    m = W.m

    def acc(w):
        # stages may overflow just before a blow-up; the step check catches it
        with np.errstate(over="ignore", invalid="ignore"):
            return 2 * ((m * np.exp(2 * rs.simple_values(w))) @ beta).real

    steps = int(round(length / h))
    n = rs.n
    W_ = np.empty((steps + 1, n))
    V_ = np.empty((steps + 1, n))
    w = np.asarray(omega0, dtype=float).copy()
    v = np.asarray(domega0, dtype=float).copy()
    W_[0], V_[0] = w, v
    truncated, msg, last = False, "", steps
    for i in range(steps):
        k1w, k1v = v, acc(w)
        k2w, k2v = v + 0.5 * h * k1v, acc(w + 0.5 * h * k1w)
        k3w, k3v = v + 0.5 * h * k2v, acc(w + 0.5 * h * k2w)
        k4w, k4v = v + h * k3v, acc(w + h * k3w)
        w = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not np.all(np.isfinite(w)) or np.abs(w).max() > BLOWUP:
            truncated, msg, last = True, f"blow-up at x = {(i + 1) * h:.6g}: |omega| > {BLOWUP:g}", i
            break
        W_[i + 1], V_[i + 1] = w, v
    W_, V_ = W_[: last + 1], V_[: last + 1]
    x = h * np.arange(last + 1)
    E = energy(W_, V_, W, rs)
    return Trajectory(x, W_, V_, E, truncated, msg, W)


def richardson_ratio(omega0, domega0, W: CyclicElement, length: float, h: float, rs=None) -> float:
    """|y_h - y_{h/2}| / |y_{h/2} - y_{h/4}| at the endpoint; about 16 for RK4."""
    ends = []
    for hh in (h, h / 2, h / 4):
        t = integrate_1d(omega0, domega0, W, rs, length, hh)
        ends.append(np.concatenate([t.omega[-1], t.domega[-1]]))
    return float(np.linalg.norm(ends[0] - ends[1]) / np.linalg.norm(ends[1] - ends[2]))
