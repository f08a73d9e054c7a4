"""Minor Subspace Similarity Matching: offline min-max solver and online network.

The online network has feedforward weights ``W`` (m x n) and lateral weights
``M`` (m x m). Each sample is gated by the scalar ``z = sigma - ||x||^2``;
the output is the fixed point of ``dy/dg = z W x - M y`` and the weights
follow local Hebbian / anti-Hebbian rules::

    W <- W + 2 eta (z y - W x) x^T
    M <- M + (eta / tau) (y y^T - M)

The learned minor subspace is the row space of ``M^-1 W (sigma I - C)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import empirical_covariance
from .errors import ConditioningError, ConvergenceError, NumericalBlowupError, ValidationError
from .numerics import as_matrix, orthonormalize_rows, power_iteration_top_eig, solve_spd

BLOWUP_BOUND = 1e9
DYNAMICS_MODES = ("closed_form", "euler")


@dataclass
class NeuralDynamicsConfig:
    step_scale: float = 1.0  # Euler step as a fraction of 1 / lambda_max(M)
    rel_tol: float = 1e-12
    max_iters: int = 100_000

    def __post_init__(self):
        if not 0 < self.step_scale <= 1:
            raise ValidationError("step_scale must lie in (0, 1]")
        if not self.rel_tol > 0 or self.max_iters < 1:
            raise ValidationError("rel_tol must be positive and max_iters at least 1")


@dataclass
class MssmState:
    W: np.ndarray
    M: np.ndarray
    sigma: float
    t: int = 0
    eta0: float = 0.05
    t_half: float = 1000.0
    tau: float = 0.5
    dynamics_mode: str = "closed_form"
    dynamics: NeuralDynamicsConfig = field(default_factory=NeuralDynamicsConfig)

    def __post_init__(self):
        if not (self.sigma > 0 and self.tau > 0 and self.eta0 > 0 and self.t_half > 0):
            raise ValidationError("sigma, tau, eta0 and t_half must all be positive")
        if self.dynamics_mode not in DYNAMICS_MODES:
            raise ValidationError(f"dynamics_mode must be one of {DYNAMICS_MODES}")
        self.W = np.array(self.W, dtype=float)
        self.M = np.array(self.M, dtype=float)

    @property
    def m(self):
        return self.W.shape[0]

    @property
    def n(self):
        return self.W.shape[1]

    def learning_rate(self):
        return self.eta0 / (1.0 + self.t / self.t_half)

    def copy(self):
        return MssmState(
            self.W.copy(), self.M.copy(), self.sigma, self.t, self.eta0, self.t_half,
            self.tau, self.dynamics_mode, NeuralDynamicsConfig(**vars(self.dynamics)),
        )


def init(n, m, sigma, eta0=0.05, t_half=1000.0, tau=0.5, seed=0, dynamics_mode="closed_form"):
    """Fresh state: orthonormal random ``W`` (never zero, which is a spurious fixed point), ``M = I``."""
    if not 1 <= m <= n:
        raise ValidationError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    W = orthonormalize_rows(rng.standard_normal((m, n)))
    return MssmState(W, np.eye(m), float(sigma), 0, eta0, t_half, tau, dynamics_mode)


def gate(state, x):
    return state.sigma - float(x @ x)


def _check_finite(state):
    # NaN fails the comparison as well
    if not (np.abs(state.W).max() <= BLOWUP_BOUND and np.abs(state.M).max() <= BLOWUP_BOUND):
        raise NumericalBlowupError(f"weights non-finite or beyond {BLOWUP_BOUND:g} at t={state.t}", t=state.t)


def _euler_fixed_point(M, drive, cfg):
    lam_max = np.linalg.eigvalsh(M)[-1]
    h = cfg.step_scale / lam_max
    y = np.zeros_like(drive)
    for it in range(1, cfg.max_iters + 1):
        dy = h * (drive - M @ y)
        y = y + dy
        ny = np.linalg.norm(y)
        if ny == 0.0 or np.linalg.norm(dy) < cfg.rel_tol * ny:
            return y
    raise ConvergenceError(
        f"neural dynamics did not settle in {cfg.max_iters} Euler steps", last_iterate=y, iterations=cfg.max_iters
    )


def neural_output(state, x, cfg=None):
    """Equilibrium output ``y`` with ``M y = z W x``.

    ``closed_form`` solves the linear system; ``euler`` integrates the
    dynamics from ``y = 0``.
    """
    z = gate(state, x)
    drive = z * (state.W @ x)
    if state.dynamics_mode == "closed_form":
        return solve_spd(state.M, drive)
    cfg = cfg or state.dynamics
    ev = np.linalg.eigvalsh(0.5 * (state.M + state.M.T))
    if ev[0] <= 1e-12 * ev[-1]:
        raise ConditioningError("lateral weights M are not positive definite", smallest_eigenvalue=float(ev[0]))
    if not np.any(drive):
        return np.zeros(state.m)
    return _euler_fixed_point(state.M, drive, cfg)


def update_weights(state, x, y):
    """Apply one local learning step in place and return ``state``."""
    eta = state.learning_rate()
    z = gate(state, x)
    Wx = state.W @ x
    state.W += np.outer(2.0 * eta * (z * y - Wx), x)
    a = eta / state.tau
    state.M += a * (np.outer(y, y) - state.M)
    state.t += 1
    _check_finite(state)
    return state


def step(state, x, cfg=None):
    y = neural_output(state, x, cfg)
    update_weights(state, x, y)
    return y, state


def snapshot(state):
    """Learner-side subspace representative ``M^-1 W``; multiply by ``sigma I - C`` to evaluate."""
    return solve_spd(state.M, state.W)


def components(state, C):
    """Rows spanning the learned minor subspace: ``M^-1 W (sigma I - C)``."""
    return snapshot(state) @ (state.sigma * np.eye(state.n) - C)


def auto_sigma(X_warmup, margin=6.0):
    """Gate threshold from a warm-up block: ``trace(C) + margin * lambda_1(C)``.

    The gated rule weighs direction ``i`` by roughly
    ``E[z^2 x_i^2] / lambda_i``; for Gaussian inputs that gain only falls
    with ``lambda_i`` once sigma exceeds ``trace(C) + 4 lambda_1``, so a
    smaller sigma drives the network toward high-variance directions.
    """
    C = empirical_covariance(X_warmup)
    return float(np.trace(C)) + margin * power_iteration_top_eig(C, tol=1e-6)


def twice_top_sigma(X_warmup):
    """Twice the top warm-up eigenvalue: valid for the offline solver only."""
    return 2.0 * power_iteration_top_eig(empirical_covariance(X_warmup), tol=1e-6)


# ---------------------------------------------------------------- offline


@dataclass
class OfflineParams:
    sigma: float
    eta: float = 0.05
    tau: float = 0.5
    max_outer_iters: int = 2000
    rel_tol: float = 1e-12

    def __post_init__(self):
        if not all(v > 0 for v in (self.sigma, self.eta, self.tau, self.max_outer_iters, self.rel_tol)):
            raise ValidationError("offline parameters must all be positive")


@dataclass
class OfflineResult:
    W: np.ndarray
    M: np.ndarray
    objective: list
    iterations: int
    converged: bool


def fit_offline(X, m, params, seed=0, W0=None, M0=None, callback=None):
    """Alternating min-max optimization of the MSSM objective on a full batch.

    Each outer iteration solves for ``Y`` in closed form and then takes one
    gradient descent step in ``W`` and one ascent step in ``M``. The
    objective list holds the similarity-matching cost at every ``Y``.
    ``callback(it, W, M)`` runs after every update.
    """
    from .metrics import mssm_objective

    X = as_matrix(X, "X")
    n, T = X.shape
    if T <= n:
        raise ValidationError(f"need T > n, got n={n}, T={T}")
    C = empirical_covariance(X)
    sigma = params.sigma
    lam1 = power_iteration_top_eig(C, tol=1e-10)
    if not sigma > lam1:
        raise ValidationError(f"sigma={sigma} must exceed the top covariance eigenvalue {lam1:.6g}")
    if W0 is None:
        W0 = orthonormalize_rows(np.random.default_rng(seed).standard_normal((m, n)))
    W = np.array(W0, dtype=float)
    M = np.eye(m) if M0 is None else np.array(M0, dtype=float)
    S = sigma * np.eye(n) - C
    eta, tau = params.eta, params.tau

    objective = []
    converged = False
    it = 0
    for it in range(1, params.max_outer_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            drive = W @ S @ X
        if not np.all(np.isfinite(drive)):
            raise NumericalBlowupError(f"offline iterates overflowed at outer iteration {it}", t=it)
        try:
            Y = solve_spd(M, drive)
        except ConditioningError as exc:
            raise ConditioningError(
                f"M lost positive definiteness at outer iteration {it}", exc.smallest_eigenvalue
            ) from exc
        objective.append(mssm_objective(X, Y, sigma, method="trace"))
        dW = 2.0 * eta * ((Y @ X.T) @ S / T - W @ C)
        dM = (eta / tau) * (Y @ Y.T / T - M)
        W = W + dW
        M = M + dM
        M = 0.5 * (M + M.T)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(M))):
            raise NumericalBlowupError(f"offline iterates became non-finite at outer iteration {it}", t=it)
        if callback is not None:
            callback(it, W, M)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            change = np.linalg.norm(dW) / np.linalg.norm(W) + np.linalg.norm(dM) / np.linalg.norm(M)
        if change < params.rel_tol:
            converged = True
            break
    return OfflineResult(W, M, objective, it, converged)
