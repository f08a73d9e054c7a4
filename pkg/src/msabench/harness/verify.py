"""Oracle property suite behind ``msabench verify``."""

import sys
from dataclasses import dataclass

import numpy as np

from ..dataset import SpectrumSpec, empirical_covariance, generate
from ..errors import MsaError
from ..metrics import alignment_error, mssm_objective
from ..numerics import sym_eig
from ..oracle import minor_subspace, mssm_similarity_matrix, optimal_Y, truncation_residual, verify_gram_identity

GRAM_TOL = 1e-8
REVERSAL_TOL = 1e-7
SUBSPACE_TOL = 1e-8
OBJECTIVE_TOL = 1e-8


@dataclass
class Check:
    name: str
    passed: bool
    worst: float
    tol: float
    cases: int


def _sizes(rng, trials, n, T):
    if n is not None or T is not None:
        if n is None or T is None:
            raise MsaError("--n and --t must be given together")
        return [(n, T)]
    out = []
    for _ in range(trials):
        n_i = int(rng.integers(1, 13))
        out.append((n_i, int(rng.integers(max(n_i + 1, 13), 41))))
    return out


def _problem(rng, n, T):
    """Data with a well-separated population spectrum 1..n and a valid sigma."""
    X = generate(SpectrumSpec.linear(n, 1.0), T, int(rng.integers(2**32))).X
    lam = sym_eig(empirical_covariance(X)).values
    sigma = lam[0] * float(rng.uniform(1.5, 3.0))
    return X, lam, sigma


def gram_check(X, lam, sigma, m):
    return verify_gram_identity(X)


def reversal_check(X, lam, sigma, m):
    """Worst relative mismatch of the nonzero similarity spectrum plus a null-count check."""
    n, T = X.shape
    ev = np.linalg.eigvalsh(mssm_similarity_matrix(X, sigma))[::-1]
    expected = T * (sigma - lam[::-1])  # ascending lam -> descending T (sigma - lam)
    rel = float(np.max(np.abs(ev[:n] - expected) / expected))
    scale = expected[0]
    n_zero = int(np.sum(np.abs(ev) <= 1e-9 * scale))
    # a wrong count of null directions is reported as an infinite error
    return rel if n_zero == T - n else float("inf")


def psd_check(X, lam, sigma, m):
    """Negative part of the similarity spectrum relative to its largest eigenvalue."""
    ev = np.linalg.eigvalsh(mssm_similarity_matrix(X, sigma))
    return float(max(0.0, -ev[0]) / ev[-1])


def eigenvector_check(X, lam, sigma, m):
    """Top-m similarity eigenvectors span the projections of X onto the minor subspace."""
    T = X.shape[1]
    U = sym_eig(mssm_similarity_matrix(X, sigma)).vectors[:, :m]
    V = minor_subspace(empirical_covariance(X), m).vectors
    target = V.T @ X  # m x T, rows span the same T-space as U
    Q, _ = np.linalg.qr(target.T)
    return alignment_error(U.T, Q) if T > m else 0.0


def objective_check(X, lam, sigma, m, rng=None, probes=50):
    """Objective at the oracle output matches the truncation residual and beats random outputs."""
    Y = optimal_Y(X, sigma, m)
    best = mssm_objective(X, Y, sigma)
    resid = truncation_residual(X, sigma, m)
    # when m = n the residual is exactly zero; fall back to the objective's scale
    scale = max(resid, float(np.sum((sigma - lam) ** 2)) * 1e-6)
    rel = abs(best - resid) / scale
    rng = rng or np.random.default_rng(0)
    for _ in range(probes):
        probe = Y + rng.standard_normal(Y.shape) * rng.uniform(0.01, 2.0) * np.abs(Y).max()
        if mssm_objective(X, probe, sigma) < best * (1 - 1e-12):
            return float("inf")
    return rel


CHECKS = (
    ("gram identity", gram_check, GRAM_TOL),
    ("spectrum reversal", reversal_check, REVERSAL_TOL),
    ("similarity PSD", psd_check, 1e-10),
    ("minor eigenvectors", eigenvector_check, SUBSPACE_TOL),
    ("optimal objective", objective_check, OBJECTIVE_TOL),
)


def run_verify(seed=0, n=None, T=None, trials=50):
    rng = np.random.default_rng(seed)
    sizes = _sizes(rng, trials, n, T)
    worst = {name: 0.0 for name, _, _ in CHECKS}
    for n_i, T_i in sizes:
        X, lam, sigma = _problem(rng, n_i, T_i)
        m = int(rng.integers(1, min(3, n_i) + 1))
        for name, fn, _ in CHECKS:
            try:
                value = fn(X, lam, sigma, m)
            except MsaError:
                value = float("inf")
            if not value == value:  # NaN counts as a failure
                value = float("inf")
            worst[name] = max(worst[name], value)
    return [Check(name, worst[name] <= tol, worst[name], tol, len(sizes)) for name, _, tol in CHECKS]


def format_report(checks, seed):
    lines = [f"seed = {seed}", f"{'check':<20} {'cases':>5} {'worst':>11} {'tol':>8}  result"]
    for c in checks:
        lines.append(f"{c.name:<20} {c.cases:>5} {c.worst:>11.3e} {c.tol:>8.0e}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)


def main(seed=0, n=None, T=None, trials=50, out=None):
    out = out or sys.stdout
    checks = run_verify(seed, n, T, trials)
    print(format_report(checks, seed), file=out)
    return 0 if all(c.passed for c in checks) else 1
