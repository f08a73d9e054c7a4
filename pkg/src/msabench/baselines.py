"""Single-layer online minor subspace rules used as competitors.

All three share the feedforward output ``y = W x`` and differ only in the
normalization of the anti-Hebbian term:

* ``oja``: ``W <- W - eta (y x^T - y y^T W)``
* ``cal``: ``W <- W - eta (W W^T y x^T - y y^T W)``
* ``dka``: ``W <- W - eta ((W W^T)^2 y x^T - y y^T W)``

The plain Oja rule for minor subspaces is known to blow up; that outcome is
reported through :class:`~msabench.errors.NumericalBlowupError`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalBlowupError, ValidationError
from .numerics import orthonormalize_rows

KINDS = ("oja", "cal", "dka")
BLOWUP_BOUND = 1e9


@dataclass
class BaselineState:
    W: np.ndarray
    kind: str
    t: int = 0
    eta0: float = 0.05
    t_half: float = 1000.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown baseline {self.kind!r}; expected one of {KINDS}")
        if not (self.eta0 > 0 and self.t_half > 0):
            raise ValidationError("eta0 and t_half must be positive")
        self.W = np.array(self.W, dtype=float)

    @property
    def m(self):
        return self.W.shape[0]

    @property
    def n(self):
        return self.W.shape[1]

    def learning_rate(self):
        return self.eta0 / (1.0 + self.t / self.t_half)

    def copy(self):
        return BaselineState(self.W.copy(), self.kind, self.t, self.eta0, self.t_half)


def init(kind, n, m, eta0=0.05, t_half=1000.0, seed=0):
    if not 1 <= m <= n:
        raise ValidationError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    W = orthonormalize_rows(rng.standard_normal((m, n)))
    return BaselineState(W, kind, 0, eta0, t_half)


def baseline_output(state, x):
    return state.W @ x


def snapshot(state):
    """Subspace representative: the rows of ``W``."""
    return state.W.copy()


def _apply(state, dW):
    state.W -= dW
    state.t += 1
    W = state.W
    if not np.all(np.isfinite(W)) or np.abs(W).max() > BLOWUP_BOUND:
        raise NumericalBlowupError(f"{state.kind} weights diverged at t={state.t}", t=state.t)
    return state


def oja_step(state, x):
    eta = state.learning_rate()
    y = state.W @ x
    _apply(state, eta * (np.outer(y, x) - np.outer(y, y @ state.W)))
    return y, state


def cal_step(state, x):
    eta = state.learning_rate()
    W = state.W
    y = W @ x
    G = W @ W.T
    _apply(state, eta * (np.outer(G @ y, x) - np.outer(y, y @ W)))
    return y, state


def dka_step(state, x):
    eta = state.learning_rate()
    W = state.W
    y = W @ x
    G = W @ W.T
    _apply(state, eta * (np.outer(G @ (G @ y), x) - np.outer(y, y @ W)))
    return y, state


STEPS = {"oja": oja_step, "cal": cal_step, "dka": dka_step}


def step(state, x):
    return STEPS[state.kind](state, x)
