"""Exact eigendecomposition-based minor subspace solutions.

These are the ground truth the online learners are scored against. The
T x T similarity matrices built here are only meant for desk-scale checks;
large-T evaluation goes through the n x n covariance instead.

Eigenvalues of the covariance are written ``lam``. Anything living in the
Gram (T x T) domain carries an explicit factor T, so the nonzero spectrum of
``sigma X^T C^-1 X - X^T X`` is ``T * (sigma - lam_i)``.
"""

from dataclasses import dataclass

import numpy as np

from .dataset import empirical_covariance
from .errors import DegenerateGapError, RankError, ValidationError
from .numerics import as_matrix, solve_spd, sym_eig


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    vectors: np.ndarray  # n x m, orthonormal columns
    kind: str = "minor"
    values: np.ndarray = None  # eigenvalues paired with the columns

    @property
    def m(self):
        return self.vectors.shape[1]

    def projector(self):
        return self.vectors @ self.vectors.T


def _check_full_rank(values, what="C"):
    if not values[0] > 0 or values[-1] <= 1e-12 * values[0]:
        raise RankError(f"{what} is rank deficient (eigenvalues {values[-1]:.3e} .. {values[0]:.3e})")


def minor_subspace(C, m):
    """Eigenvectors of the ``m`` smallest eigenvalues of ``C``, ascending by eigenvalue."""
    C = as_matrix(C, "C")
    n = C.shape[0]
    if not 1 <= m <= n:
        raise ValidationError(f"need 1 <= m <= n, got m={m}, n={n}")
    values, vectors = sym_eig(C)
    _check_full_rank(values)
    if m < n and values[n - m - 1] - values[n - m] <= 1e-9 * values[0]:
        raise DegenerateGapError(
            f"eigengap at the {m}-minor cut is {values[n - m - 1] - values[n - m]:.3e}; subspace not unique"
        )
    cols = np.arange(n - 1, n - m - 1, -1)
    return SubspaceBasis(vectors[:, cols], "minor", values[cols])


def principal_subspace(C, m):
    C = as_matrix(C, "C")
    values, vectors = sym_eig(C)
    if m < C.shape[0] and values[m - 1] - values[m] <= 1e-9 * values[0]:
        raise DegenerateGapError("principal subspace not unique")
    return SubspaceBasis(vectors[:, :m], "principal", values[:m])


def _sigma_check(C, sigma):
    lam1 = sym_eig(C).values[0]
    if not sigma > lam1:
        raise ValidationError(f"sigma={sigma} must exceed the top covariance eigenvalue {lam1:.6g}")


def mssm_similarity_matrix(X, sigma):
    """``sigma X^T C^-1 X - X^T X`` for the empirical covariance C of X."""
    X = as_matrix(X, "X")
    C = empirical_covariance(X)
    _check_full_rank(sym_eig(C).values)
    _sigma_check(C, sigma)
    D = sigma * (X.T @ solve_spd(C, X)) - X.T @ X
    return 0.5 * (D + D.T)


def verify_gram_identity(X):
    """Worst relative deviation of ``X^T C^-1 X u = T u`` over the top-n Gram eigenvectors."""
    X = as_matrix(X, "X")
    n, T = X.shape
    if T <= n:
        raise ValidationError(f"need T > n, got n={n}, T={T}")
    C = empirical_covariance(X)
    _check_full_rank(sym_eig(C).values)
    U = sym_eig(X.T @ X).vectors[:, :n]
    lhs = X.T @ solve_spd(C, X @ U)
    dev = np.linalg.norm(lhs - T * U, axis=0) / (T * np.linalg.norm(U, axis=0))
    return float(dev.max())


def optimal_Y(X, sigma, m):
    """An optimal output matrix for the MSSM similarity objective.

    Rows are scaled projections of X onto the minor eigenvectors:
    ``Y = diag(sqrt(sigma / lam_i - 1)) V^T X``, so that ``Y^T Y`` is the
    rank-m spectral truncation of the MSSM similarity matrix.
    """
    X = as_matrix(X, "X")
    C = empirical_covariance(X)
    basis = minor_subspace(C, m)
    _sigma_check(C, sigma)
    scale = np.sqrt(sigma / basis.values - 1.0)
    return scale[:, None] * (basis.vectors.T @ X)


def truncation_residual(X, sigma, m):
    """``(1/T^2) * sum`` of squared similarity eigenvalues outside the top m.

    Uses the covariance spectrum, so it scales to any T.
    """
    C = empirical_covariance(X)
    lam = sym_eig(C).values
    _sigma_check(C, sigma)
    # descending lam -> the last m are kept by the optimum
    return float(np.sum((sigma - lam[: len(lam) - m]) ** 2))
