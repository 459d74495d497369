"""Rank-one measurement ensembles.

An ensemble holds N complex vectors a_i of dimension n drawn iid from a
zero-mean law with E[Re(a_ik)^2] = E[Im(a_ik)^2] = 1/2 (so E|a_ik|^2 = 1
and E||a_i||^2 = n).  The associated linear map and its adjoint are

    forward(e, x)  = sum_i x_i a_i a_i*          (n x n, Hermitian)
    adjoint(e, T)  = (a_i* T a_i)_i              (R^N for Hermitian T)

and ``build_phi`` materializes the real m x N matrix whose column i is the
scaled off-diagonal embedding of a_i a_i*, m = 2n(n-1).

Sampling is counter-based (Philox): vector i is a pure function of
(seed, i), so ensembles regenerate bit-for-bit from their header and can
be produced in parallel slices.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .numerics import is_hermitian, off_diagonal_dim, p_vectorize

__all__ = [
    "SubgaussianLaw",
    "MeasurementEnsemble",
    "SparseNonnegSignal",
    "sample_ensemble",
    "regenerate_vector",
    "forward",
    "adjoint",
    "build_phi",
    "gram_matrix",
    "gram_column",
    "save_ensemble",
    "load_ensemble",
]

# psi_2 bounds per component part (Re or Im), never below the model floor 1.
# gaussian: exact psi_2 of N(0, 1/2) is sqrt(4/3).
# rademacher: |part| = 1/sqrt(2) a.s., bound 1/sqrt(2 ln 2) ~ 0.85, floored at 1.
# uniform-symmetric: bounded by h/sqrt(ln 2) with half-width h = sqrt(3/2).
# real-gaussian: sensitivity variant with Re ~ N(0,1), Im = 0; psi_2 = sqrt(8/3).
_LAW_PSI2 = {
    "complex-gaussian": float(np.sqrt(4.0 / 3.0)),
    "complex-rademacher": 1.0,
    "uniform-symmetric": float(np.sqrt(1.5) / np.sqrt(np.log(2.0))),
    "real-gaussian": float(np.sqrt(8.0 / 3.0)),
}


@dataclass(frozen=True)
class SubgaussianLaw:
    """Component law of the ensemble vectors.

    The three complex kinds have iid real and imaginary parts with mean 0
    and variance 1/2 each.  ``real-gaussian`` is the real-entry variant
    (unit-variance real parts, zero imaginary part) used for sensitivity
    runs of the recovery experiments.
    """

    kind: str = "complex-gaussian"
    psi2_bound: float = _LAW_PSI2["complex-gaussian"]

    def __post_init__(self):
        if self.kind not in _LAW_PSI2:
            raise ParameterError(f"unknown law kind {self.kind!r}")
        if self.psi2_bound < 1.0:
            raise ParameterError("psi2_bound must be >= 1")

    @classmethod
    def named(cls, kind):
        return cls(kind=kind, psi2_bound=_LAW_PSI2[kind])

    @classmethod
    def gaussian(cls):
        return cls.named("complex-gaussian")

    @classmethod
    def rademacher(cls):
        return cls.named("complex-rademacher")

    @classmethod
    def uniform(cls):
        return cls.named("uniform-symmetric")

    @classmethod
    def real_gaussian(cls):
        return cls.named("real-gaussian")


@dataclass
class MeasurementEnsemble:
    """N sampled vectors plus the header needed to regenerate them."""

    n: int
    N: int
    seed: int
    law: SubgaussianLaw
    vectors: np.ndarray  # (N, n) complex128, row i = a_i

    def header(self):
        return {
            "n": self.n,
            "N": self.N,
            "seed": self.seed,
            "law": self.law.kind,
            "psi2_bound": self.law.psi2_bound,
        }


@dataclass
class SparseNonnegSignal:
    """Nonnegative sparse ground truth: strictly positive values on a support."""

    N: int
    support: np.ndarray  # sorted int indices
    values: np.ndarray   # positive floats, aligned with support

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=int)
        self.values = np.asarray(self.values, dtype=float)
        if self.support.size != self.values.size:
            raise DimensionError("support and values must have equal length")
        if self.support.size:
            if np.any((self.support < 0) | (self.support >= self.N)):
                raise ParameterError("support indices out of range")
            if np.unique(self.support).size != self.support.size:
                raise ParameterError("support indices must be distinct")
            if np.any(self.values <= 0):
                raise ParameterError("values on the support must be strictly positive")
            order = np.argsort(self.support)
            self.support = self.support[order]
            self.values = self.values[order]

    @property
    def s(self):
        return int(self.support.size)

    def to_dense(self):
        x = np.zeros(self.N)
        x[self.support] = self.values
        return x


def _blocks_per_vector(n):
    # Philox emits 4 uint64 per counter block; pad each vector's draw
    # budget (2n doubles, one uint64 each) to a whole number of blocks.
    return (2 * n + 3) // 4


def _uniforms(seed, n, N, start=0):
    """Uniforms in [0,1) of shape (N, 2n); row i depends only on (seed, start+i)."""
    bg = np.random.Philox(key=seed)
    if start:
        bg.advance(start * _blocks_per_vector(n))
    width = 4 * _blocks_per_vector(n)
    raw = np.random.Generator(bg).random(size=(N, width))
    return raw[:, : 2 * n]


def _components_from_uniforms(u, kind):
    """Map (N, 2n) uniforms to (N, 2n) real components (Re block, Im block)."""
    N, twon = u.shape
    n = twon // 2
    if kind in ("complex-gaussian", "real-gaussian"):
        # Box-Muller on pairs: consumes exactly two uniforms per two normals.
        u1 = u[:, 0::2]
        u2 = u[:, 1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        z = np.empty_like(u)
        z[:, 0::2] = r * np.cos(2.0 * np.pi * u2)
        z[:, 1::2] = r * np.sin(2.0 * np.pi * u2)
        if kind == "complex-gaussian":
            return z / np.sqrt(2.0)
        out = np.zeros_like(z)
        out[:, :n] = z[:, :n]  # real parts ~ N(0,1), imaginary parts zero
        return out
    if kind == "complex-rademacher":
        return np.where(u >= 0.5, 1.0, -1.0) / np.sqrt(2.0)
    if kind == "uniform-symmetric":
        h = np.sqrt(1.5)  # half-width for variance 1/2
        return (2.0 * u - 1.0) * h
    raise ParameterError(f"unknown law kind {kind!r}")


def sample_ensemble(n, N, law=None, seed=0):
    """Draw an ensemble of N iid vectors in C^n under the given law."""
    if n < 2:
        raise DimensionError(f"n must be >= 2, got {n}")
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    if law is None:
        law = SubgaussianLaw.gaussian()
    comp = _components_from_uniforms(_uniforms(seed, n, N), law.kind)
    vectors = comp[:, :n] + 1j * comp[:, n:]
    return MeasurementEnsemble(n=n, N=N, seed=int(seed), law=law, vectors=vectors)


def regenerate_vector(e, i):
    """Vector a_i recomputed from (seed, i) alone; equals e.vectors[i] exactly."""
    comp = _components_from_uniforms(_uniforms(e.seed, e.n, 1, start=i), e.law.kind)
    return comp[0, : e.n] + 1j * comp[0, e.n :]


def forward(e, x):
    """Apply the measurement map: sum_i x_i a_i a_i*."""
    x = np.asarray(x, dtype=float)
    if x.shape != (e.N,):
        raise DimensionError(f"x must have shape ({e.N},), got {x.shape}")
    A = e.vectors
    return (A * x[:, None]).T @ A.conj()


def adjoint(e, T, check=True):
    """Apply the adjoint map: the vector of quadratic forms a_i* T a_i.

    T must be Hermitian; the output is real only in that case and
    non-Hermitian input is rejected rather than silently truncated.
    """
    T = np.asarray(T)
    if T.shape != (e.n, e.n):
        raise DimensionError(f"T must have shape ({e.n}, {e.n}), got {T.shape}")
    if check and not is_hermitian(T, rtol=1e-10):
        raise ParameterError("adjoint requires a Hermitian matrix")
    A = e.vectors
    return np.einsum("ij,jk,ik->i", A.conj(), T, A).real


def build_phi(e):
    """The real m x N matrix with column i = p_vectorize(a_i a_i*) / sqrt(m)."""
    n, N = e.n, e.N
    m = off_diagonal_dim(n)
    A = e.vectors
    mask = ~np.eye(n, dtype=bool)
    # outer[i] = a_i a_i*; extract off-diagonal entries in row-major order
    outer = A[:, :, None] * A.conj()[:, None, :]
    off = outer[:, mask]  # (N, n(n-1))
    root2 = np.sqrt(2.0)
    phi = np.empty((m, N))
    half = n * (n - 1)
    phi[:half] = (root2 * off.real).T
    phi[half:] = (root2 * off.imag).T
    return phi / np.sqrt(m)


def gram_matrix(e, block=512):
    """Gram matrix of the real-embedded design: G[i, j] = |a_i* a_j|^2.

    This is the normal-equation kernel of the NNLS objective, since the
    Frobenius inner product of a_i a_i* and a_j a_j* equals |a_i* a_j|^2.
    Built in row blocks to bound the complex intermediate.
    """
    A = e.vectors
    N = e.N
    G = np.empty((N, N))
    for lo in range(0, N, block):
        hi = min(lo + block, N)
        G[lo:hi] = np.abs(A[lo:hi].conj() @ A.T) ** 2
    return G


def gram_column(e, j):
    """Column j of gram_matrix(e) without forming the full matrix."""
    A = e.vectors
    return np.abs(A.conj() @ A[j]) ** 2


_FORMAT_NAME = "rankone-nnls-ensemble"
_FORMAT_VERSION = 1


def save_ensemble(e, path):
    """Write the regeneration header (seed, n, N, law) as JSON.

    Vectors are not stored; ``load_ensemble`` regenerates them
    deterministically.  See FORMATS.md for the schema.
    """
    doc = {"format": _FORMAT_NAME, "version": _FORMAT_VERSION}
    doc.update(e.header())
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_ensemble(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT_NAME:
        raise ParameterError(f"not an ensemble artifact: {path}")
    if doc.get("version") != _FORMAT_VERSION:
        raise ParameterError(f"unsupported ensemble format version {doc.get('version')}")
    law = SubgaussianLaw(kind=doc["law"], psi2_bound=doc["psi2_bound"])
    return sample_ensemble(doc["n"], doc["N"], law=law, seed=doc["seed"])
