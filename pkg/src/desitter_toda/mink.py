"""Linear algebra on R^{2n,1} and its complexification.

Vectors live in C^{2n+1} with the complex *bilinear* form

    <x, y> = x_1 y_1 + ... + x_{2n} y_{2n} - x_{2n+1} y_{2n+1} = x^T U y,

U = diag(1, ..., 1, -1).  Documentation counts basis vectors e_1 ... e_{2n+1}
from one; every array index in this module is zero-based, so e_k is
``basis_vector(n, k)`` but lives at position ``k - 1``.

All functions broadcast over leading axes, so a grid of vectors of shape
(N, M, 2n+1) is handled exactly like a single vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GROUP = "group"
ALGEBRA = "algebra"
GENERAL = "general"


class DimensionError(ValueError):
    """Raised when two operands do not share the same ambient dimension."""

    def __init__(self, left: int, right: int, what: str = "vectors"):
        super().__init__(f"dimension mismatch between {what}: {left} != {right}")
        self.left = left
        self.right = right


def rank_of(dim: int) -> int:
    """Return n for an ambient dimension 2n+1."""
    if dim < 3 or dim % 2 == 0:
        raise ValueError(f"ambient dimension must be odd and >= 3, got {dim}")
    return (dim - 1) // 2


def signature(n: int) -> np.ndarray:
    """Diagonal of U as a float array of length 2n+1."""
    s = np.ones(2 * n + 1)
    s[-1] = -1.0
    return s


def upsilon(n: int) -> np.ndarray:
    """The Gram matrix U = diag(1, ..., 1, -1)."""
    return np.diag(signature(n))


def basis_vector(n: int, k: int) -> np.ndarray:
    """e_k for 1 <= k <= 2n+1 (one-based, as in the literature)."""
    if not 1 <= k <= 2 * n + 1:
        raise IndexError(f"e_{k} does not exist in dimension {2 * n + 1}")
    e = np.zeros(2 * n + 1, dtype=complex)
    e[k - 1] = 1.0
    return e


def elementary(n: int, j: int, k: int) -> np.ndarray:
    """E_{jk}: one in entry (j, k), one-based."""
    E = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    E[j - 1, k - 1] = 1.0
    return E


def bracket_basis(n: int, j: int, k: int) -> np.ndarray:
    """The generator [j, k] of so(2n, 1), one-based, j < k.

    [j, k] = E_kj - E_jk for k < 2n+1 (a rotation) and E_kj + E_jk for
    k = 2n+1 (a boost).
    """
    if not 1 <= j < k <= 2 * n + 1:
        raise ValueError(f"[{j},{k}] needs 1 <= j < k <= {2 * n + 1}")
    M = elementary(n, k, j)
    if k == 2 * n + 1:
        M += elementary(n, j, k)
    else:
        M -= elementary(n, j, k)
    return M


def _check_dims(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError(x.shape[-1], y.shape[-1])


def bilinear(x, y) -> np.ndarray | complex:
    """Complex bilinear Minkowski pairing, no conjugation."""
    x = np.asarray(x)
    y = np.asarray(y)
    _check_dims(x, y)
    prod = x * y
    out = prod[..., :-1].sum(axis=-1) - prod[..., -1]
    return out[()] if out.ndim == 0 else out


def norm2(v) -> np.ndarray | float:
    """||v||^2 = <v, conj(v)>; real, of either sign."""
    v = np.asarray(v)
    out = bilinear(v, np.conj(v)).real
    return out[()] if np.ndim(out) == 0 else out


def euclidean_norm(v) -> np.ndarray:
    return np.sqrt((np.abs(np.asarray(v)) ** 2).sum(axis=-1))


def conjugate_transpose_u(M: np.ndarray) -> np.ndarray:
    """U M^T U, which is M^{-1} when M lies in the group."""
    n = rank_of(M.shape[-1])
    s = signature(n)
    return s[:, None] * np.swapaxes(M, -1, -2) * s[None, :]


def group_inverse(M: np.ndarray) -> np.ndarray:
    return conjugate_transpose_u(M)


@dataclass(frozen=True)
class MembershipReport:
    kind: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tol


def membership_residual(M: np.ndarray, kind: str = GROUP) -> float:
    """Max-norm of M^T U M - U (group) or M^T U + U M (algebra).

    Broadcasts over leading axes and returns the maximum over all of them.
    """
    M = np.asarray(M)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError("membership test needs square matrices")
    n = rank_of(M.shape[-1])
    s = signature(n)
    MT = np.swapaxes(M, -1, -2)
    if kind == GROUP:
        R = MT @ (s[:, None] * M) - np.diag(s)
    elif kind == ALGEBRA:
        R = MT * s[None, :] + s[:, None] * M
    else:
        raise ValueError(f"unknown membership kind {kind!r}")
    return float(np.abs(R).max()) if R.size else 0.0


def membership(M, kind: str = GROUP, tol: float = 1e-10) -> MembershipReport:
    return MembershipReport(kind, membership_residual(M, kind), tol)


def project_to_group(M: np.ndarray, iterations: int = 3) -> np.ndarray:
    """Pull a near-group matrix back onto SO(2n,1).

    Newton-Schulz iteration for M S^{-1/2} with S = U M^T U M; quadratically
    convergent when S is close to the identity.
    """
    I = np.eye(M.shape[-1])
    for _ in range(iterations):
        S = conjugate_transpose_u(M) @ M
        M = M @ (1.5 * I - 0.5 * S)
    return M


def commutator(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    if X.shape[-2:] != Y.shape[-2:]:
        raise DimensionError(X.shape[-1], Y.shape[-1], "matrices")
    return X @ Y - Y @ X


# JSON encoding: complex numbers as [re, im] pairs, arrays nested row-major.

def to_json(a) -> list:
    a = np.asarray(a, dtype=complex)
    pairs = np.stack([a.real, a.imag], axis=-1)
    return pairs.tolist()


def from_json(obj) -> np.ndarray:
    pairs = np.asarray(obj, dtype=float)
    if pairs.shape[-1] != 2:
        raise ValueError("expected [re, im] pairs in the innermost axis")
    return pairs[..., 0] + 1j * pairs[..., 1]
