"""Root system, Coxeter automorphism and grading of so(2n+1, C) in the so(2n,1) basis.

Conventions
-----------
The Cartan subalgebra t is spanned by T_k = [2k, 2k+1], k = 1..n (one-based
bracket notation from :mod:`desitter_toda.mink`).  For H = sum h_k T_k the
coordinate functionals are

    at_k(H) = -h_k,   k = 1..n,

and a root is stored by its coefficient vector over at_1..at_n.  Every
coefficient is a Gaussian integer in {0, +-1, +-i}.  Simple roots are

    alpha_1 = i at_1,
    alpha_k = i at_k - i at_{k-1}        (1 < k < n),
    alpha_n = at_n - i at_{n-1},
    alpha_0 = -at_n - i at_{n-1} = -2 alpha_1 - ... - 2 alpha_{n-1} - alpha_n.

For n = 1 the system is {+-at_1} with alpha_1 = at_1 and alpha_0 = -at_1.

The Coxeter element is C = exp((pi i / n) sum eta_j) with
eta_j = i sum_{l=j}^{n-1} T_l - T_n, the basis of t^C dual to the simple
roots.  It equals diag(1, R(pi/n), ..., R((n-1)pi/n), -I_2) where
R(t) = [[cos t, sin t], [-sin t, cos t]].  sigma = Ad C multiplies the root
vector of a root of height s by exp(i pi s / n), so eigenvalues are indexed by
j = 0..2n-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .mink import ALGEBRA, bracket_basis, commutator, membership_residual

MAX_EXACT_RANK = 5


class InvalidRankError(ValueError):
    pass


class GradePreconditionError(ValueError):
    """Raised when an element expected in a fixed grade has other components."""

    def __init__(self, grade: int, residual: float, tol: float):
        super().__init__(
            f"element is not in grade {grade}: off-grade residual {residual:.3e} >= {tol:.3e}"
        )
        self.grade = grade
        self.residual = residual
        self.tol = tol


@dataclass(frozen=True)
class RootLabel:
    """A root of so(2n+1, C).

    Attributes
    ----------
    coeffs : tuple of complex
        Coefficients over the functionals at_1..at_n (Gaussian integers).
    simple : tuple of int
        Integer coefficients over alpha_1..alpha_n.
    """

    coeffs: tuple
    simple: tuple

    @property
    def height(self) -> int:
        return int(sum(self.simple))

    def __neg__(self) -> "RootLabel":
        return RootLabel(tuple(-c for c in self.coeffs), tuple(-s for s in self.simple))

    def __call__(self, H: np.ndarray) -> complex:
        """Evaluate on a Cartan element given as a matrix."""
        return complex(np.dot(self.coeffs, -cartan_coords(H)))

    def name(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs, start=1):
            c = complex(c)
            if c == 0:
                continue
            if c.imag == 0:
                coef = {1: "+", -1: "-"}.get(int(c.real), f"{int(c.real):+d}")
            else:
                coef = {1: "+i", -1: "-i"}.get(int(c.imag), f"{int(c.imag):+d}i")
            terms.append(f"{coef}at{k}")
        return "".join(terms).lstrip("+") or "0"


def cartan_matrix(n: int, h) -> np.ndarray:
    """sum_k h_k T_k for complex coefficients h."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (n,):
        raise ValueError(f"expected {n} Cartan coefficients, got shape {h.shape}")
    M = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    for k in range(1, n + 1):
        M += h[k - 1] * bracket_basis(n, 2 * k, 2 * k + 1)
    return M


def cartan_coords(H: np.ndarray) -> np.ndarray:
    """Coefficients h_k of H on T_k.  Broadcasts over leading axes."""
    H = np.asarray(H)
    d = H.shape[-1]
    n = (d - 1) // 2
    idx = np.arange(1, n + 1)
    # T_k carries +1 at zero-based (2k, 2k-1)
    return H[..., 2 * idx, 2 * idx - 1]


def omega_matrix(omega) -> np.ndarray:
    """Omega = i sum_k omega_k T_k; broadcasts over leading axes of omega.

    omega may be complex, e.g. for Omega_z.
    """
    omega = np.asarray(omega)
    n = omega.shape[-1]
    d = 2 * n + 1
    M = np.zeros(omega.shape[:-1] + (d, d), dtype=complex)
    for k in range(1, n + 1):
        M[..., 2 * k, 2 * k - 1] = 1j * omega[..., k - 1]
        if k < n:
            M[..., 2 * k - 1, 2 * k] = -1j * omega[..., k - 1]
        else:
            M[..., 2 * k - 1, 2 * k] = 1j * omega[..., k - 1]
    return M


def _row_roots(n: int) -> list[tuple[dict, np.ndarray]]:
    """All 2n^2 (root, vector) pairs; roots as {k: coefficient} on at_k."""
    I = 1j
    b = lambda j, k: bracket_basis(n, j, k)
    rows: list[tuple[dict, np.ndarray]] = []
    for k in range(1, n):
        rows.append(({k: I}, b(1, 2 * k) + I * b(1, 2 * k + 1)))
        rows.append(({k: -I}, b(1, 2 * k) - I * b(1, 2 * k + 1)))
    rows.append(({n: 1}, b(1, 2 * n) - b(1, 2 * n + 1)))
    rows.append(({n: -1}, b(1, 2 * n) + b(1, 2 * n + 1)))
    for j in range(1, n):
        for k in range(j + 1, n):
            a, bb, c, d = b(2 * j, 2 * k), b(2 * j, 2 * k + 1), b(2 * j + 1, 2 * k), b(2 * j + 1, 2 * k + 1)
            rows.append(({j: I, k: I}, a + I * bb + I * c - d))
            rows.append(({j: I, k: -I}, a - I * bb + I * c + d))
            rows.append(({j: -I, k: I}, a + I * bb - I * c + d))
            rows.append(({j: -I, k: -I}, a - I * bb - I * c - d))
        a, bb, c, d = b(2 * j, 2 * n), b(2 * j, 2 * n + 1), b(2 * j + 1, 2 * n), b(2 * j + 1, 2 * n + 1)
        rows.append(({j: I, n: 1}, a - bb + I * c - I * d))
        rows.append(({j: I, n: -1}, a + bb + I * c + I * d))
        rows.append(({j: -I, n: 1}, a - bb - I * c + I * d))
        rows.append(({j: -I, n: -1}, a + bb - I * c - I * d))
    return rows


def _simple_coeff_matrix(n: int) -> np.ndarray:
    """Rows: alpha_0..alpha_n as coefficient vectors over at_1..at_n."""
    A = np.zeros((n + 1, n), dtype=complex)
    if n == 1:
        A[0, 0], A[1, 0] = -1, 1
        return A
    A[1, 0] = 1j
    for k in range(2, n):
        A[k, k - 1] = 1j
        A[k, k - 2] = -1j
    A[n, n - 1] = 1
    A[n, n - 2] = -1j
    A[0, n - 1] = -1
    A[0, n - 2] = -1j
    return A


@dataclass(frozen=True)
class RootSystem:
    """Root data of so(2n+1, C) in the so(2n,1) matrix basis.

    ``extended[j]`` is alpha_j for j = 0..n; ``simple_roots`` is alpha_1..alpha_n.
    ``pi`` is the permutation with conj(alpha_j) = -alpha_{pi(j)}.
    """

    n: int
    roots: tuple
    root_vectors: dict = field(repr=False)
    extended: tuple = field(repr=False)
    eta_basis: tuple = field(repr=False)
    cartan_basis: tuple = field(repr=False)
    coxeter_element: np.ndarray = field(repr=False)
    pi: tuple = ()

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def simple_roots(self) -> tuple:
        return self.extended[1:]

    @property
    def lowest_root(self) -> RootLabel:
        return self.extended[0]

    @property
    def period(self) -> int:
        """Scalar period of the sigma eigenvalues on root vectors."""
        return 2 * self.n

    def vector(self, root: RootLabel) -> np.ndarray:
        return self.root_vectors[root].copy()

    def simple_vector(self, j: int) -> np.ndarray:
        """R_{alpha_j}, j = 0..n."""
        return self.vector(self.extended[j])

    def negative_simple_vector(self, j: int) -> np.ndarray:
        """R_{-alpha_j}, j = 0..n."""
        return self.vector(-self.extended[j])

    def coxeter_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.coxeter_element)

    def evaluate(self, j: int, H: np.ndarray) -> complex:
        """alpha_j(H) for a single Cartan matrix H."""
        return self.extended[j](H)

    def simple_values(self, omega) -> np.ndarray:
        """alpha_j(Omega) for Omega = i sum omega_k T_k; shape (..., n+1)."""
        omega = np.asarray(omega, dtype=float)
        A = _simple_coeff_matrix(self.n)
        # at_k(Omega) = -i omega_k
        return (-1j * omega) @ A.T

    def simple_gradients(self) -> np.ndarray:
        """alpha_j(i T_k) as an (n+1, n) complex array."""
        return -1j * _simple_coeff_matrix(self.n)

    def bracket_coords(self) -> np.ndarray:
        """[R_{alpha_j}, R_{-alpha_j}] in omega-coordinates, shape (n+1, n).

        The bracket b_j lies in t^C; writing b_j = i sum beta_jk T_k the row j
        holds beta_j (complex in general).
        """
        out = np.zeros((self.n + 1, self.n), dtype=complex)
        for j in range(self.n + 1):
            b = commutator(self.simple_vector(j), self.negative_simple_vector(j))
            out[j] = cartan_coords(b) / 1j
        return out

    def trace_pairings(self) -> np.ndarray:
        """tr(R_{alpha_j} R_{-alpha_j}) for j = 0..n."""
        return np.array(
            [np.trace(self.simple_vector(j) @ self.negative_simple_vector(j)) for j in range(self.n + 1)]
        )


@lru_cache(maxsize=None)
def build_root_system(n: int) -> RootSystem:
    """Construct the root system of rank n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidRankError(f"rank must be an integer >= 1, got {n!r}")
    n = int(n)
    A = _simple_coeff_matrix(n)
    S = A[1:]
    vectors = {}
    labels = []
    for coeffs, M in _row_roots(n):
        v = np.zeros(n, dtype=complex)
        for k, c in coeffs.items():
            v[k - 1] += c
        s = np.linalg.solve(S.T, v)
        si = np.rint(s.real).astype(int)
        if np.abs(s - si).max() > 1e-9:
            raise RuntimeError(f"root {v} is not an integer combination of simple roots")
        lab = RootLabel(tuple(complex(c) for c in v), tuple(int(x) for x in si))
        vectors[lab] = M
        labels.append(lab)

    by_coeffs = {lab.coeffs: lab for lab in labels}
    extended = tuple(by_coeffs[tuple(complex(c) for c in A[j])] for j in range(n + 1))

    eta = []
    for j in range(1, n + 1):
        E = -bracket_basis(n, 2 * n, 2 * n + 1)
        for l in range(j, n):
            E = E + 1j * bracket_basis(n, 2 * l, 2 * l + 1)
        eta.append(E)
    C = expm((np.pi * 1j / n) * sum(eta))
    # the exact element is real; drop round-off in the imaginary part
    C = C.real.astype(complex)
    pi = (n,) + tuple(range(1, n)) + (0,)
    cartan = tuple(bracket_basis(n, 2 * k, 2 * k + 1) for k in range(1, n + 1))
    return RootSystem(
        n=n,
        roots=tuple(labels),
        root_vectors=vectors,
        extended=extended,
        eta_basis=tuple(eta),
        cartan_basis=cartan,
        coxeter_element=C,
        pi=pi,
    )


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def coxeter_closed_form(n: int) -> np.ndarray:
    """diag(1, R(pi/n), ..., R((n-1)pi/n), -I_2)."""
    C = np.zeros((2 * n + 1, 2 * n + 1))
    C[0, 0] = 1.0
    for k in range(1, n):
        C[2 * k - 1 : 2 * k + 1, 2 * k - 1 : 2 * k + 1] = rotation(k * np.pi / n)
    C[2 * n - 1 : 2 * n + 1, 2 * n - 1 : 2 * n + 1] = -np.eye(2)
    return C


def coxeter_deviation(rs: RootSystem) -> float:
    return float(np.abs(rs.coxeter_element - coxeter_closed_form(rs.n)).max())


def bracket(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return commutator(np.asarray(X), np.asarray(Y))


def apply_coxeter(rs: RootSystem, X: np.ndarray, power: int = 1) -> np.ndarray:
    """sigma^power(X) = C^p X C^{-p}; broadcasts over leading axes."""
    C = np.linalg.matrix_power(rs.coxeter_element, power % rs.period)
    Ci = np.linalg.matrix_power(rs.coxeter_inverse(), power % rs.period)
    return C @ X @ Ci


def grade_project(rs: RootSystem, X: np.ndarray, j: int) -> np.ndarray:
    """Component of X in the exp(i pi j / n) eigenspace of sigma."""
    p = rs.period
    X = np.asarray(X, dtype=complex)
    out = np.zeros_like(X)
    Y = X
    for k in range(p):
        out = out + np.exp(-1j * np.pi * j * k / rs.n) * Y
        Y = apply_coxeter(rs, Y)
    return out / p


def grade_decomposition(rs: RootSystem, X: np.ndarray) -> list[np.ndarray]:
    return [grade_project(rs, X, j) for j in range(rs.period)]


class KillingShortcutError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def killing_factor(n: int) -> float:
    """Factor k with (1/2) tr(ad_X ad_Y) = k tr(XY), checked once per rank.

    On so(N) the Killing form equals (N-2) tr(XY); for N = 2n+1 the factor
    with the 1/2 normalization is (2n-1)/2.  The first call compares it with
    the adjoint computation on a spread of basis pairs.
    """
    k = 0.5 * (2 * n - 1)
    d = 2 * n + 1
    basis = [bracket_basis(n, j, k) for j, k in sorted({(1, 2), (1, d), (d - 1, d), (2, d)})]
    basis.append(sum(basis))
    ads = [adjoint_matrix(X) for X in basis]
    for X, aX in zip(basis, ads):
        for Y, aY in zip(basis, ads):
            ref = 0.5 * np.trace(aX @ aY)
            if abs(ref - k * np.trace(X @ Y)) > 1e-9 * max(1.0, abs(ref)):
                raise KillingShortcutError(f"Killing form is not {k} tr(XY) for n = {n}")
    return k


def killing(X: np.ndarray, Y: np.ndarray) -> complex:
    """(1/2) tr(ad_X ad_Y) through the trace form; see :func:`killing_factor`."""
    n = (X.shape[-1] - 1) // 2
    return killing_factor(n) * complex(np.trace(X @ Y))


@lru_cache(maxsize=None)
def _bracket_frame(n: int) -> tuple[list, np.ndarray]:
    """Bracket basis of so(2n,1) and the map from flattened matrices to coordinates."""
    basis = [bracket_basis(n, j, k) for j in range(1, 2 * n + 2) for k in range(j + 1, 2 * n + 2)]
    B = np.array([b.ravel() for b in basis]).T
    return basis, np.linalg.pinv(B)


def adjoint_matrix(X: np.ndarray) -> np.ndarray:
    """ad_X in the bracket basis."""
    n = (X.shape[-1] - 1) // 2
    basis, coords = _bracket_frame(n)
    return coords @ np.array([commutator(X, b).ravel() for b in basis]).T


def killing_adjoint(X: np.ndarray, Y: np.ndarray) -> complex:
    """(1/2) tr(ad_X ad_Y) from explicit adjoint matrices (slow reference)."""
    return 0.5 * complex(np.trace(adjoint_matrix(X) @ adjoint_matrix(Y)))


def root_coefficients(rs: RootSystem, X: np.ndarray) -> np.ndarray:
    """Coefficients of X along R_{alpha_j}, j = 0..n, via the Killing pairing.

    Root spaces pair only with their negatives, so the coefficient along
    R_alpha is B(X, R_{-alpha}) / B(R_alpha, R_{-alpha}); the Killing form is a
    multiple of the trace form, so the ratio is computed with traces.
    """
    killing_factor(rs.n)  # the ratio below relies on proportionality
    out = np.zeros(X.shape[:-2] + (rs.n + 1,), dtype=complex)
    for j in range(rs.n + 1):
        Rm = rs.negative_simple_vector(j)
        norm = np.trace(rs.simple_vector(j) @ Rm)
        out[..., j] = np.einsum("...ab,ba->...", X, Rm) / norm
    return out


@dataclass(frozen=True)
class CyclicReport:
    cyclic: bool
    coefficients: np.ndarray
    magnitudes: np.ndarray
    semisimple: bool | None = None


def is_cyclic(rs: RootSystem, X: np.ndarray, tol: float = 1e-10) -> CyclicReport:
    """Test whether a grade-1 element has nonzero projection on every R_{alpha_j}.

    For n = 1 the grade-1 space is spanned by R_{alpha_1}, R_{alpha_0}, and the
    report additionally records semisimplicity, tested as tr(X^2) != 0.
    """
    X = np.asarray(X, dtype=complex)
    off = X - grade_project(rs, X, 1)
    res = float(np.abs(off).max())
    scale = max(1.0, float(np.abs(X).max()))
    if res >= tol * scale:
        raise GradePreconditionError(1, res, tol * scale)
    c = root_coefficients(rs, X)
    mags = np.abs(c)
    semisimple = None
    if rs.n == 1:
        semisimple = bool(abs(np.trace(X @ X)) > tol)
    return CyclicReport(bool(np.all(mags > tol)), c, mags, semisimple)


# Exact verification in Gaussian rational arithmetic.

def _to_exact(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Exact Gaussian-rational copy (re, im, den) with int64 numerators."""
    M = np.asarray(M, dtype=complex)
    fr = [Fraction(x).limit_denominator(1 << 20) for x in M.real.ravel()]
    fi = [Fraction(x).limit_denominator(1 << 20) for x in M.imag.ravel()]
    if any(float(a) != x for a, x in zip(fr, M.real.ravel())) or any(
        float(a) != x for a, x in zip(fi, M.imag.ravel())
    ):
        raise ValueError("matrix entries are not exact small rationals")
    den = math.lcm(*(f.denominator for f in fr + fi))
    re = np.array([int(f * den) for f in fr], dtype=np.int64).reshape(M.shape)
    im = np.array([int(f * den) for f in fi], dtype=np.int64).reshape(M.shape)
    if max(np.abs(re).max(initial=0), np.abs(im).max(initial=0), den) > 1 << 20:
        raise ValueError("exact entries too large for int64 products")
    return re, im, den


def _exact_mul(a, b):
    return a[0] @ b[0] - a[1] @ b[1], a[0] @ b[1] + a[1] @ b[0], a[2] * b[2]


def _exact_scale(z: complex, a):
    zr, zi = Fraction(z.real), Fraction(z.imag)
    d = math.lcm(zr.denominator, zi.denominator)
    p, q = int(zr * d), int(zi * d)
    return p * a[0] - q * a[1], p * a[1] + q * a[0], d * a[2]


def _exact_sub(a, b):
    return a[0] * b[2] - b[0] * a[2], a[1] * b[2] - b[1] * a[2], a[2] * b[2]


def _exact_max(a) -> Fraction:
    m = max(int(np.abs(a[0]).max(initial=0)), int(np.abs(a[1]).max(initial=0)))
    return Fraction(m, a[2])


@dataclass(frozen=True)
class ExactReport:
    n: int
    root_action: Fraction
    conjugation: Fraction
    cartan_brackets: Fraction
    eta_duality: Fraction
    lowest_root_ok: bool
    count: int

    @property
    def passed(self) -> bool:
        return (
            self.root_action == 0
            and self.conjugation == 0
            and self.cartan_brackets == 0
            and self.eta_duality == 0
            and self.lowest_root_ok
            and self.count == 2 * self.n * self.n
        )


def verify_exact(n: int) -> ExactReport:
    """Check the root table in exact arithmetic.

    * [T_k, R_alpha] = alpha(T_k) R_alpha for every stored root and k;
    * conj(R_{alpha_j}) = R_{-alpha_{pi(j)}};
    * [R_{alpha_j}, R_{-alpha_j}] lies in t^C;
    * alpha_k(eta_j) = delta_kj;
    * alpha_0 = -2 alpha_1 - ... - 2 alpha_{n-1} - alpha_n.
    """
    rs = build_root_system(n)
    Ts = [_to_exact(T) for T in rs.cartan_basis]
    worst = Fraction(0)
    for lab in rs.roots:
        R = _to_exact(rs.root_vectors[lab])
        for k, T in enumerate(Ts):
            lhs = _exact_sub(_exact_mul(T, R), _exact_mul(R, T))
            # alpha(T_k) = -coeff_k
            rhs = _exact_scale(-lab.coeffs[k], R)
            worst = max(worst, _exact_max(_exact_sub(lhs, rhs)))

    conj_worst = Fraction(0)
    for j in range(n + 1):
        R = _to_exact(rs.simple_vector(j))
        Rc = (R[0], -R[1], R[2])
        target = _to_exact(rs.vector(-rs.extended[rs.pi[j]]))
        conj_worst = max(conj_worst, _exact_max(_exact_sub(Rc, target)))

    cart_worst = Fraction(0)
    d = 2 * n + 1
    mask = np.zeros((d, d), dtype=bool)
    for k in range(1, n + 1):
        mask[2 * k, 2 * k - 1] = mask[2 * k - 1, 2 * k] = True
    for j in range(n + 1):
        P = _to_exact(rs.simple_vector(j))
        Q = _to_exact(rs.negative_simple_vector(j))
        b = _exact_sub(_exact_mul(P, Q), _exact_mul(Q, P))
        off = (np.where(mask, 0, b[0]), np.where(mask, 0, b[1]), b[2])
        cart_worst = max(cart_worst, _exact_max(off))

    dual_worst = Fraction(0)
    for k in range(1, n + 1):
        lab = rs.extended[k]
        for j, E in enumerate(rs.eta_basis, start=1):
            Ex = _to_exact(E)
            h = [(Fraction(int(Ex[0][2 * m, 2 * m - 1]), Ex[2]), Fraction(int(Ex[1][2 * m, 2 * m - 1]), Ex[2])) for m in range(1, n + 1)]
            val_re, val_im = Fraction(0), Fraction(0)
            for c, (hr, hi) in zip(lab.coeffs, h):
                cr, ci = Fraction(c.real), Fraction(c.imag)
                val_re += -(cr * hr - ci * hi)
                val_im += -(cr * hi + ci * hr)
            target = Fraction(1 if j == k else 0)
            dual_worst = max(dual_worst, abs(val_re - target), abs(val_im))

    expect = tuple([-2] * (n - 1) + [-1])
    lowest_ok = rs.lowest_root.simple == expect and rs.lowest_root.height == -(2 * n - 1)
    return ExactReport(n, worst, conj_worst, cart_worst, dual_worst, lowest_ok, len(rs.roots))


def algebra_residual_all(rs: RootSystem) -> float:
    return max(membership_residual(M, ALGEBRA) for M in rs.root_vectors.values())


def root_table(rs: RootSystem) -> list[dict]:
    """Table rows for reporting, one per root."""
    from .mink import to_json

    rows = []
    for lab in sorted(rs.roots, key=lambda r: (-r.height, r.simple)):
        rows.append(
            {
                "root": lab.name(),
                "simple_coefficients": list(lab.simple),
                "height": lab.height,
                "vector": to_json(rs.root_vectors[lab]),
            }
        )
    return rows
