"""Circulant matrices, the DFT, and the matrix form of the kernel constraint.

With circular boundaries a 1D convolution is a circulant matrix.  The
constraint between a kernel ``kappa`` on the coarse grid and an unknown
kernel on the fine grid reads::

    K L = L K'

with ``K`` (``n_out x n_out``) and ``K'`` (``n_in x n_in``) circulant and
``L`` the downscaler.  :func:`solve_exact` solves it in the Fourier domain
when a solution exists (integer factors); :func:`solve_lemma_residual`
finds the least-squares best ``K'`` for any factor, which measures how far
the constraint is from being satisfiable.
"""
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import linalg

from .errors import ExistenceError, SizeError
from .grid import BoundaryMode, as_kernel

RIDGE = 1e-12
REFINE_STEPS = 2


@dataclass(frozen=True, eq=False)
class CirculantMatrix:
    """``K[i, j] = first_row[(j - i) mod N]``."""

    first_row: np.ndarray

    def __post_init__(self):
        row = np.array(self.first_row, dtype=np.float64)
        if row.ndim != 1 or row.size < 1:
            raise SizeError(f"first row must be a non-empty vector, got shape {row.shape}")
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    @property
    def size(self):
        return self.first_row.size

    @property
    def first_column(self):
        return self.first_row[(-np.arange(self.size)) % self.size]

    def dense(self):
        n = self.size
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return self.first_row[idx]

    def __matmul__(self, v):
        return self.dense() @ v

    def eigenvalues(self):
        """Eigenvalues ordered by DFT frequency: ``sqrt(N) * F @ first_column``."""
        return np.sqrt(self.size) * (dft_matrix(self.size) @ self.first_column)


def dft_matrix(n):
    """Unitary DFT, ``F[j, k] = exp(-2 pi i j k / n) / sqrt(n)``, built directly."""
    jk = np.outer(np.arange(n), np.arange(n))
    return np.exp(-2j * np.pi * jk / n) / np.sqrt(n)


def embed_kernel_circulant(kernel, n):
    """Circulant whose product with a length-``n`` vector is circular convolution by ``kernel``."""
    kernel = as_kernel(kernel, ndim=1)
    k = kernel.size
    if k > n:
        raise SizeError(f"kernel length {k} exceeds circulant size {n}")
    row = np.zeros(n)
    c = (k - 1) // 2
    for m, v in enumerate(kernel):
        row[(m - c) % n] += v
    return CirculantMatrix(row)


def centered_taps(first_row, length):
    """Read a centered odd-length kernel back out of a circulant first row."""
    n = len(first_row)
    c = (length - 1) // 2
    return np.asarray(first_row)[(np.arange(length) - c) % n]


@dataclass(frozen=True, eq=False)
class ConstraintResidual:
    factor: Fraction          # downscaling factor n_in / n_out
    residual: float           # |K L - L K'|_F / |K L|_F
    solution: np.ndarray = None   # first row of K' (length n_in)
    degenerate: bool = False  # kernel was all zeros

    def kernel(self, length):
        """The solution as a centered kernel of odd ``length``."""
        if self.solution is None:
            return None
        return centered_taps(self.solution, length)


def _setup(kernel, L):
    kernel = as_kernel(kernel, ndim=1)
    K = embed_kernel_circulant(kernel, L.n_out).dense()
    KL = K @ L.matrix
    return kernel, KL


def _residual(KL, L, row):
    diff = KL - L.matrix @ CirculantMatrix(row).dense()
    den = np.linalg.norm(KL)
    return float(np.linalg.norm(diff) / den) if den > 0 else 0.0


def solve_exact(kernel, L):
    """Fourier-domain solution of ``K L = L K'`` for integer factors.

    Column ``j`` of ``K L F*`` must be ``lambda_j`` times column ``j`` of
    ``L F*``; each ``lambda_j`` is the least-squares ratio for its column.
    Columns where ``L F*`` vanishes leave ``lambda_j`` free; they take the
    coarse eigenvalue of the aliasing frequency ``j mod n_out``, which is
    the value the dilated kernel has there.
    """
    if L.boundary is not BoundaryMode.CIRCULAR:
        raise ExistenceError("exact solution needs a circular downscaler")
    if not L.integer_factor:
        raise ExistenceError(
            f"no exact solution for non-integer factor {L.n_in}/{L.n_out}; use solve_lemma_residual")
    kernel, KL = _setup(kernel, L)
    factor = Fraction(L.n_in, L.n_out)
    if not np.any(kernel):
        return ConstraintResidual(factor, 0.0, np.zeros(L.n_in), degenerate=True)
    Fi = dft_matrix(L.n_in).conj().T  # columns are Fourier modes
    A = L.matrix @ Fi
    B = KL @ Fi
    coarse = embed_kernel_circulant(kernel, L.n_out).eigenvalues()
    norms = np.sum(np.abs(A) ** 2, axis=0)
    scale = norms.max()
    lam = np.empty(L.n_in, dtype=np.complex128)
    for j in range(L.n_in):
        if norms[j] > 1e-14 * scale:
            lam[j] = np.vdot(A[:, j], B[:, j]) / norms[j]
        else:
            lam[j] = coarse[j % L.n_out]
    column = (dft_matrix(L.n_in).conj().T @ lam) / np.sqrt(L.n_in)
    column = column.real
    row = column[(-np.arange(L.n_in)) % L.n_in]
    return ConstraintResidual(factor, _residual(KL, L, row), row)


def solve_lemma_residual(kernel, L, ridge=RIDGE):
    """Least-squares ``K'`` over all ``n_in`` circulant parameters, for any factor.

    ``L K'`` is linear in the first row of ``K'``: parameter ``p`` contributes
    ``L`` with its columns rolled by ``p``.  The normal equations carry a
    ridge of ``ridge * mean(diag)`` and are solved by Cholesky, so the result
    is unique and reproducible.  Two refinement steps against the
    unregularised system remove the ridge bias where the fit is exact.
    """
    kernel, KL = _setup(kernel, L)
    factor = Fraction(L.n_in, L.n_out)
    if not np.any(kernel):
        warnings.warn("all-zero kernel: constraint residual defined as 0", RuntimeWarning, stacklevel=2)
        return ConstraintResidual(factor, 0.0, np.zeros(L.n_in), degenerate=True)
    n = L.n_in
    A = np.stack([np.roll(L.matrix, p, axis=1).ravel() for p in range(n)], axis=1)
    b = KL.ravel()
    G = A.T @ A
    Gr = G.copy()
    Gr[np.diag_indices(n)] += ridge * np.mean(np.diag(G))
    chol = linalg.cho_factor(Gr)
    rhs = A.T @ b
    row = linalg.cho_solve(chol, rhs)
    for _ in range(REFINE_STEPS):
        row = row + linalg.cho_solve(chol, rhs - G @ row)
    return ConstraintResidual(factor, _residual(KL, L, row), row)
