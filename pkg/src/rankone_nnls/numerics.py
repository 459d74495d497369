"""Dense complex linear-algebra kernel.

Matrices and vectors are plain numpy arrays (complex128 / float64).
All functions are pure; nothing here mutates its inputs.
"""

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "frobenius_inner",
    "p_vectorize",
    "off_diagonal_dim",
    "lp_norm",
    "best_s_term_residual",
    "hermitian_part",
    "is_hermitian",
]


def frobenius_inner(X, Y):
    """Hilbert-Schmidt inner product trace(X* Y).

    Conjugate-linear in the first argument, so
    ``frobenius_inner(X, Y) == conj(frobenius_inner(Y, X))``.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    if X.shape != Y.shape or X.ndim != 2:
        raise DimensionError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return complex(np.vdot(X, Y))


def off_diagonal_dim(n):
    """Length of the off-diagonal embedding of an n x n matrix: 2n(n-1)."""
    return 2 * n * (n - 1)


def p_vectorize(M):
    """Embed the off-diagonal part of a square complex matrix into R^{2n(n-1)}.

    The output stacks sqrt(2)*Re(M[k, l]) for all ordered pairs k != l in
    row-major order ((0,1), (0,2), ..., (1,0), (1,2), ...), followed by
    sqrt(2)*Im(M[k, l]) in the same order.  The scaling makes
    ``norm(p_vectorize(M))**2 == 2 * sum(|M[k, l]|**2 for k != l)``.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if n < 2:
        raise DimensionError("matrix must be at least 2 x 2 (no off-diagonal part)")
    mask = ~np.eye(n, dtype=bool)
    off = M[mask]  # row-major order over k != l
    root2 = np.sqrt(2.0)
    return np.concatenate([root2 * off.real, root2 * off.imag])


def lp_norm(v, p):
    """The l^p norm of a real vector, p >= 1 or p = inf."""
    v = np.asarray(v, dtype=float)
    if p == np.inf:
        return float(np.max(np.abs(v))) if v.size else 0.0
    if p < 1:
        raise ParameterError(f"p must be >= 1 or inf, got {p}")
    if p == 1:
        return float(np.sum(np.abs(v)))
    if p == 2:
        return float(np.linalg.norm(v))
    return float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def best_s_term_residual(x, s):
    """Sum of the N - s smallest magnitudes of x.

    Equals the l^1 distance from x to its best s-sparse approximation.
    Computed by partial selection, which agrees with the minimum over
    all supports of size s by the rearrangement inequality.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 <= s <= n:
        raise ParameterError(f"s must be in [0, {n}], got {s}")
    if s == 0:
        return float(np.sum(np.abs(x)))
    if s >= n:
        return 0.0
    mags = np.abs(x)
    smallest = np.partition(mags, n - s - 1)[: n - s]
    return float(np.sum(smallest))


def hermitian_part(M):
    """(M + M*) / 2."""
    M = np.asarray(M)
    return (M + M.conj().T) / 2.0


def is_hermitian(M, rtol=1e-12):
    """True when M equals its conjugate transpose up to rtol * max|M|."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale == 0.0:
        return True
    return float(np.max(np.abs(M - M.conj().T))) <= rtol * scale
