"""Dense linear-algebra kernels used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The functions
here validate shape and finiteness, then delegate the heavy lifting to LAPACK
through numpy.
"""

from typing import NamedTuple

import numpy as np

from .errors import ConditioningError, ConvergenceError, DimensionError, RankError, ValidationError


class EigPairs(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray  # column i pairs with values[i]


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float64 array or raise."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def _as_square(A, name):
    A = as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def fix_signs(vectors):
    """Flip columns so the largest-magnitude entry of each is positive.

    Ties on magnitude resolve to the first index, which keeps the
    convention deterministic.
    """
    vectors = np.array(vectors, dtype=float, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eig(A):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized before solving. Eigenvectors follow the
    largest-magnitude-entry-positive sign convention.
    """
    A = _as_square(A, "A")
    scale = np.linalg.norm(A)
    if np.max(np.abs(A - A.T)) > 1e-9 * max(scale, np.finfo(float).tiny):
        raise ValidationError("A is not symmetric")
    A = 0.5 * (A + A.T)
    values, vectors = np.linalg.eigh(A)
    order = np.argsort(-values, kind="stable")  # ties keep LAPACK order
    return EigPairs(values[order], fix_signs(vectors[:, order]))


def solve_spd(M, B):
    """Solve ``M Z = B`` for symmetric positive definite ``M``.

    Raises :class:`ConditioningError` when the smallest eigenvalue of ``M``
    is at or below ``1e-12`` times the largest.
    """
    M = np.asarray(M, dtype=float)
    B = np.asarray(B, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"M must be square, got shape {M.shape}")
    if B.ndim not in (1, 2) or B.shape[0] != M.shape[0]:
        raise DimensionError(f"B has shape {B.shape}, incompatible with M of shape {M.shape}")
    # eigvalsh reads one triangle only; NaN in M surfaces as NaN eigenvalues
    ev = np.linalg.eigvalsh(M)
    lo, hi = ev[0], ev[-1]
    if not (hi > 0 and lo > 1e-12 * hi):
        raise ConditioningError(
            f"M is not safely positive definite (smallest eigenvalue {lo:.3e}, largest {hi:.3e})",
            smallest_eigenvalue=float(lo),
        )
    return np.linalg.solve(M, B)


def orthonormalize_rows(W):
    """Orthonormal rows spanning the same row space as ``W``.

    Uses a QR factorization of ``W.T`` with the diagonal of R made positive,
    so rows that are already orthonormal come back unchanged (to rounding).
    """
    W = as_matrix(W, "W")
    m, n = W.shape
    if m > n:
        raise DimensionError(f"cannot orthonormalize {m} rows in R^{n}")
    s = np.linalg.svd(W, compute_uv=False)
    if s[-1] <= 1e-10:
        raise RankError(f"W is rank deficient (smallest singular value {s[-1]:.3e})")
    Q, R = np.linalg.qr(W.T)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return (Q * d).T


def random_orthogonal(n, seed):
    """Haar-distributed n x n orthogonal matrix from a PCG64 stream."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def power_iteration_top_eig(A, tol=1e-8, max_iter=10000):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Stops once the residual ``||A v - lam v||`` drops below ``tol * lam``,
    which bounds the distance from ``lam`` to the spectrum.
    """
    A = _as_square(A, "A")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    if not np.any(A):
        return 0.0
    # fixed start vector, not orthogonal to any coordinate axis
    v = np.random.default_rng(0).uniform(0.5, 1.5, n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        Av = A @ v
        lam = float(v @ Av)
        resid = np.linalg.norm(Av - lam * v)
        if lam > 0 and resid <= tol * lam:
            return lam
        norm = np.linalg.norm(Av)
        if norm == 0:
            # start vector fell in the null space
            v = np.roll(v, 1) + 1.0 / n
            v /= np.linalg.norm(v)
            continue
        v = Av / norm
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (last estimate {lam:.6g})",
        last_iterate=lam,
        iterations=max_iter,
    )


def principal_angles(A, B):
    """Principal angles (radians, ascending) between the column spaces of A and B.

    Computed from the sines, which stays accurate for nearly equal subspaces.
    """
    Qa, _ = np.linalg.qr(as_matrix(A, "A"))
    Qb, _ = np.linalg.qr(as_matrix(B, "B"))
    if Qa.shape[1] < Qb.shape[1]:
        Qa, Qb = Qb, Qa
    s = np.linalg.svd(Qb - Qa @ (Qa.T @ Qb), compute_uv=False)
    return np.sort(np.arcsin(np.clip(s, 0.0, 1.0)))
