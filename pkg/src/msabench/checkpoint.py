"""Plain-text checkpoints for learner states.

One ``key = value`` pair per line; matrices are written row-major as
comma-separated floats in shortest round-trip form, preceded by their
shape keys ``n`` and ``m``. Baseline checkpoints omit ``sigma``, ``tau``,
``dynamics`` and ``M``.
"""

import numpy as np

from .baselines import KINDS, BaselineState
from .errors import ValidationError
from .mssm import MssmState

HEADER = "# msabench checkpoint v1"


def _floats(a):
    return ", ".join(repr(float(v)) for v in np.ravel(a))


def dumps(state):
    lines = [HEADER]
    if isinstance(state, MssmState):
        fields = [
            ("kind", "mssm"), ("n", state.n), ("m", state.m), ("t", state.t),
            ("sigma", repr(float(state.sigma))), ("eta0", repr(float(state.eta0))),
            ("t_half", repr(float(state.t_half))), ("tau", repr(float(state.tau))),
            ("dynamics", state.dynamics_mode), ("W", _floats(state.W)), ("M", _floats(state.M)),
        ]
    elif isinstance(state, BaselineState):
        fields = [
            ("kind", state.kind), ("n", state.n), ("m", state.m), ("t", state.t),
            ("eta0", repr(float(state.eta0))), ("t_half", repr(float(state.t_half))),
            ("W", _floats(state.W)),
        ]
    else:
        raise TypeError(f"cannot checkpoint {type(state).__name__}")
    lines += [f"{k} = {v}" for k, v in fields]
    return "\n".join(lines) + "\n"


def loads(text):
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"checkpoint line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value
    try:
        kind = kv["kind"]
        n, m = int(kv["n"]), int(kv["m"])
        W = np.array([float(v) for v in kv["W"].split(",")]).reshape(m, n)
        if kind == "mssm":
            M = np.array([float(v) for v in kv["M"].split(",")]).reshape(m, m)
            return MssmState(
                W, M, float(kv["sigma"]), int(kv["t"]), float(kv["eta0"]),
                float(kv["t_half"]), float(kv["tau"]), kv["dynamics"],
            )
        if kind in KINDS:
            return BaselineState(W, kind, int(kv["t"]), float(kv["eta0"]), float(kv["t_half"]))
    except KeyError as exc:
        raise ValidationError(f"checkpoint is missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ValidationError(f"malformed checkpoint: {exc}") from None
    raise ValidationError(f"unknown checkpoint kind {kind!r}")


def save(state, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(state))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
