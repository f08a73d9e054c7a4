"""Projectors, subspace alignment error and the MSSM objective."""

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import empirical_covariance
from .errors import RankError, ValidationError
from .numerics import as_matrix, solve_spd, sym_eig
from .oracle import SubspaceBasis, mssm_similarity_matrix

DIRECT_OBJECTIVE_MAX_T = 512


@dataclass
class ErrorTrace:
    algorithm: str
    run: int
    points: list = field(default_factory=list)  # (t, err)
    diverged_at: int = None

    @property
    def flag(self):
        return "completed" if self.diverged_at is None else f"diverged:{self.diverged_at}"

    def record(self, t, err):
        if self.points and t <= self.points[-1][0]:
            raise ValidationError(f"trace time must increase, got {t} after {self.points[-1][0]}")
        if not math.isfinite(err):
            raise ValidationError(f"non-finite error at t={t}")
        self.points.append((int(t), float(err)))

    @property
    def final_error(self):
        return self.points[-1][1] if self.points else math.nan

    def error_at(self, t):
        for ti, e in self.points:
            if ti == t:
                return e
        raise KeyError(t)


def mssm_projector_F(W, M, C, sigma):
    """``M^-1 W (sigma I - C)``; its row space estimates the minor subspace."""
    W = as_matrix(W, "W")
    C = as_matrix(C, "C")
    return solve_spd(M, W) @ (sigma * np.eye(C.shape[0]) - C)


def normalized_projector(F):
    """Orthogonal projector ``F^T (F F^T)^-1 F`` onto the row space of F.

    Formed from the right singular vectors, which is the same matrix without
    the explicit inverse.
    """
    F = as_matrix(F, "F")
    _, s, Vt = np.linalg.svd(F, full_matrices=False)
    if s[-1] <= 1e-10 * s[0] or F.shape[0] > F.shape[1]:
        raise RankError(f"F is not of full row rank (singular values {s[-1]:.3e} .. {s[0]:.3e})")
    P = Vt.T @ Vt
    return 0.5 * (P + P.T)


def subspace_alignment_error(P_learned, V_true):
    """``||P_true - P_learned||_F^2 / ||P_true||_F^2``, in [0, 2]."""
    V = V_true.vectors if isinstance(V_true, SubspaceBasis) else as_matrix(V_true, "V_true")
    P = as_matrix(P_learned, "P_learned")
    m = V.shape[1]
    if P.shape != (V.shape[0], V.shape[0]):
        raise ValidationError(f"projector shape {P.shape} does not match ambient dimension {V.shape[0]}")
    if abs(np.trace(P) - m) > 1e-6:
        raise ValidationError(f"learned projector has rank {np.trace(P):.3f}, true subspace has rank {m}")
    P_true = V @ V.T
    return float(np.sum((P_true - P) ** 2) / np.sum(P_true**2))


def alignment_error(rows, V_true):
    """Alignment error of the row space of ``rows`` (m x n) against ``V_true``."""
    return subspace_alignment_error(normalized_projector(rows), V_true)


def mssm_objective(X, Y, sigma, method="auto"):
    """``(1/T^2) ||sigma X^T C^-1 X - X^T X - Y^T Y||_F^2``.

    ``method="trace"`` expands the square into n x n and m x m traces and
    never forms a T x T matrix; ``"direct"`` materializes the similarity
    matrix. ``"auto"`` picks direct for T up to 512.
    """
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    n, T = X.shape
    if Y.shape[1] != T:
        raise ValidationError(f"Y has {Y.shape[1]} columns, X has {T}")
    if method == "auto":
        method = "direct" if T <= DIRECT_OBJECTIVE_MAX_T else "trace"
    if method == "direct":
        D = mssm_similarity_matrix(X, sigma)
        return float(np.sum((D - Y.T @ Y) ** 2) / T**2)
    if method != "trace":
        raise ValidationError(f"unknown objective method {method!r}")

    C = empirical_covariance(X)
    lam1 = sym_eig(C).values[0]
    if not sigma > lam1:
        raise ValidationError(f"sigma={sigma} must exceed the top covariance eigenvalue {lam1:.6g}")
    # ||D||^2 = T^2 ||sigma I - C||^2 ; tr(D Y^T Y) = sigma tr(B^T C^-1 B) - ||B||^2 with B = X Y^T
    S = sigma * np.eye(n) - C
    B = X @ Y.T
    cross = sigma * np.sum(B * solve_spd(C, B)) - np.sum(B * B)
    G = Y @ Y.T
    return float(np.sum(S * S) - 2.0 * cross / T**2 + np.sum(G * G) / T**2)


def eval_grid(t_max, per_decade=20):
    """Sample indices 1..t_max on a geometric grid, always ending at t_max."""
    if t_max < 1:
        return []
    k_max = int(math.floor(per_decade * math.log10(t_max))) + 1
    ts = {int(round(10 ** (k / per_decade))) for k in range(k_max)}
    ts = sorted(t for t in ts if 1 <= t <= t_max)
    if ts[-1] != t_max:
        ts.append(t_max)
    return ts
