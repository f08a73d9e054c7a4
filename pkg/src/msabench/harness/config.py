"""Flat ``key = value`` experiment configuration.

Recognized keys (defaults in parentheses)::

    n (20)            ambient dimension
    T (2000)          samples per dataset
    spectrum (linear) linear | explicit | gaussian
    slope (0.1)       linear spectrum: lambda_k = slope * k
    values ()         explicit spectrum, comma separated
    spectrum_scale (1.0), spectrum_seed (0)   gaussian spectrum
    m (1)             subspace dimension
    runs (1)          independent runs
    epochs (1)        passes over the dataset per run
    algorithms (mssm) comma separated subset of mssm, oja, cal, dka, mssm-offline
    seed (0)          global seed; per-run seeds are derived from it
    data_seed (per-run)   per-run | shared  (fresh data per run or one dataset)
    init_seed (per-run)   per-run | shared  (fresh initial weights per run or not)
    sigma (auto)      auto | twice-top | <number>
    sigma_margin (6.0)    auto sigma = trace + margin * top eigenvalue (warm-up)
    eta0 (0.05), t_half (1000), tau (0.5), dynamics (closed_form)
    eval_per_decade (20)
    offline_sigma (twice-top)   auto | twice-top | <number>, for mssm-offline
    offline_eta (0.05), offline_tau (0.5), offline_max_iters (20000), offline_rel_tol (1e-12)
    output (results)  output directory
    workers (1)       parallel runs
    save_datasets (false)

Any of ``eta0``, ``t_half``, ``tau``, ``sigma``, ``dynamics`` can be
overridden per algorithm with ``<algorithm>.<key> = value``.
"""

import hashlib
import math
from dataclasses import dataclass, field, fields, replace

from ..dataset import SpectrumSpec, gaussian_spectrum
from ..errors import ValidationError

ALGORITHMS = ("mssm", "oja", "cal", "dka", "mssm-offline")
OVERRIDABLE = {
    "mssm": ("eta0", "t_half", "tau", "sigma", "dynamics"),
    "oja": ("eta0", "t_half"),
    "cal": ("eta0", "t_half"),
    "dka": ("eta0", "t_half"),
    "mssm-offline": (),
}
# excluded from the fingerprint: they do not change results
NON_SEMANTIC = ("output", "workers")


class ConfigError(ValidationError):
    def __init__(self, message, line=None, key=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 20
    T: int = 2000
    spectrum: str = "linear"
    slope: float = 0.1
    values: tuple = ()
    spectrum_scale: float = 1.0
    spectrum_seed: int = 0
    m: int = 1
    runs: int = 1
    epochs: int = 1
    algorithms: tuple = ("mssm",)
    seed: int = 0
    data_seed: str = "per-run"
    init_seed: str = "per-run"
    sigma: str = "auto"
    sigma_margin: float = 6.0
    eta0: float = 0.05
    t_half: float = 1000.0
    tau: float = 0.5
    dynamics: str = "closed_form"
    eval_per_decade: int = 20
    offline_eta: float = 0.05
    offline_tau: float = 0.5
    offline_sigma: str = "twice-top"
    offline_max_iters: int = 20000
    offline_rel_tol: float = 1e-12
    output: str = "results"
    workers: int = 1
    save_datasets: bool = False
    overrides: tuple = ()  # sorted ((algorithm, key), value) pairs

    def validate(self):
        def bad(key, msg):
            raise ConfigError(f"{key}: {msg}", key=key)

        if self.n < 1:
            bad("n", "must be at least 1")
        if self.m < 1:
            bad("m", "must be at least 1")
        if self.m > self.n:
            raise ConfigError(f"m = {self.m} exceeds n = {self.n} (keys 'm' and 'n')", key="m")
        if self.T <= self.n or self.T < 2:
            raise ConfigError(f"T = {self.T} must exceed n = {self.n} (keys 'T' and 'n')", key="T")
        if self.runs < 1:
            bad("runs", "must be at least 1")
        if self.epochs < 1:
            bad("epochs", "must be at least 1")
        if not self.algorithms:
            bad("algorithms", "at least one algorithm is required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                bad("algorithms", f"unknown algorithm {a!r}; expected one of {', '.join(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            bad("algorithms", "duplicate algorithm")
        if self.spectrum not in ("linear", "explicit", "gaussian"):
            bad("spectrum", f"unknown spectrum {self.spectrum!r}")
        if self.spectrum == "explicit" and len(self.values) != self.n:
            raise ConfigError(f"values has {len(self.values)} entries but n = {self.n} (keys 'values' and 'n')", key="values")
        for key in ("data_seed", "init_seed"):
            if getattr(self, key) not in ("per-run", "shared"):
                bad(key, "must be 'per-run' or 'shared'")
        _check_sigma("sigma", self.sigma)
        _check_sigma("offline_sigma", self.offline_sigma)
        for key in ("sigma_margin", "slope", "spectrum_scale", "eta0", "t_half", "tau",
                    "offline_eta", "offline_tau", "offline_rel_tol"):
            if not getattr(self, key) > 0:
                bad(key, "must be positive")
        if self.dynamics not in ("closed_form", "euler"):
            bad("dynamics", "must be 'closed_form' or 'euler'")
        if self.eval_per_decade < 1 or self.offline_max_iters < 1 or self.workers < 1:
            bad("eval_per_decade/offline_max_iters/workers", "must be at least 1")
        for (alg, key), value in self.overrides:
            name = f"{alg}.{key}"
            if alg not in self.algorithms:
                bad(name, f"override for algorithm {alg!r} which is not in 'algorithms'")
            if key == "sigma":
                _check_sigma(name, value)
            elif key == "dynamics":
                if value not in ("closed_form", "euler"):
                    bad(name, "must be 'closed_form' or 'euler'")
            elif not value > 0:
                bad(name, "must be positive")
        self.spectrum_spec()
        return self

    def spectrum_spec(self):
        try:
            if self.spectrum == "linear":
                return SpectrumSpec.linear(self.n, self.slope)
            if self.spectrum == "explicit":
                return SpectrumSpec.explicit(self.values)
            return gaussian_spectrum(self.n, self.spectrum_seed, self.spectrum_scale)
        except ValidationError as exc:
            raise ConfigError(f"spectrum: {exc}", key="spectrum") from None

    def param(self, algorithm, key):
        """Hyperparameter ``key`` for ``algorithm``, honouring per-algorithm overrides."""
        for (alg, k), value in self.overrides:
            if alg == algorithm and k == key:
                return value
        return getattr(self, key)


def _check_sigma(key, value):
    if value in ("auto", "twice-top"):
        return
    try:
        ok = float(value) > 0
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ConfigError(f"{key}: must be 'auto', 'twice-top' or a positive number, got {value!r}", key=key)


_FIELDS = {f.name: f for f in fields(ExperimentConfig) if f.name != "overrides"}
_INT = {"n", "T", "spectrum_seed", "m", "runs", "epochs", "seed", "eval_per_decade", "offline_max_iters", "workers"}
_FLOAT = {"slope", "spectrum_scale", "sigma_margin", "eta0", "t_half", "tau",
          "offline_eta", "offline_tau", "offline_rel_tol"}


def _convert(key, raw, line):
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            value = float(raw)
            if not math.isfinite(value) and not (key == "t_half" and value == math.inf):
                raise ValueError(raw)
            return value
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number", line=line, key=key) from None
    if key == "values":
        try:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"values: cannot parse {raw!r}", line=line, key=key) from None
    if key == "algorithms":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if key == "save_datasets":
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"save_datasets: expected true/false, got {raw!r}", line=line, key=key)
    if key in ("sigma", "offline_sigma"):
        return raw if raw in ("auto", "twice-top") else _canonical_number(raw)
    return raw


def _canonical_number(raw):
    try:
        return repr(float(raw))
    except ValueError:
        return raw  # rejected by validate with the key name


def parse_config(text):
    """Parse and validate configuration text."""
    values, overrides, seen = {}, {}, set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", line=lineno, key=key)
        seen.add(key)
        if "." in key:
            alg, sub = key.split(".", 1)
            if alg not in OVERRIDABLE or sub not in OVERRIDABLE[alg]:
                raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
            if sub == "sigma":
                overrides[(alg, sub)] = value if value in ("auto", "twice-top") else _canonical_number(value)
            elif sub == "dynamics":
                overrides[(alg, sub)] = value
            else:
                overrides[(alg, sub)] = _convert(sub, value, lineno)
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", line=lineno, key=key)
        values[key] = _convert(key, value, lineno)
    cfg = ExperimentConfig(**values, overrides=tuple(sorted(overrides.items())))
    return cfg.validate()


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def serialize_config(cfg):
    lines = [f"{name} = {_format(getattr(cfg, name))}" for name in _FIELDS]
    lines += [f"{alg}.{key} = {_format(value)}" for (alg, key), value in cfg.overrides]
    return "\n".join(lines) + "\n"


def _semantic_names(cfg):
    """Fields that can influence results under this configuration."""
    skip = set(NON_SEMANTIC)
    skip |= {"linear": {"values", "spectrum_scale", "spectrum_seed"},
             "explicit": {"slope", "spectrum_scale", "spectrum_seed"},
             "gaussian": {"slope", "values"}}[cfg.spectrum]
    if "mssm-offline" not in cfg.algorithms:
        skip |= {"offline_sigma", "offline_eta", "offline_tau", "offline_max_iters", "offline_rel_tol"}
    sigmas = []
    if "mssm" in cfg.algorithms:
        sigmas.append(cfg.param("mssm", "sigma"))
    else:
        skip |= {"sigma", "tau", "dynamics"}
    if "mssm-offline" in cfg.algorithms:
        sigmas.append(cfg.offline_sigma)
    if "auto" not in sigmas:
        skip.add("sigma_margin")
    return [name for name in _FIELDS if name not in skip]


def fingerprint(cfg):
    """SHA-256 over the canonical form of the result-affecting fields.

    Key order in the source text, comments and non-semantic keys (output
    directory, worker count, fields unused by the chosen spectrum or
    algorithms) do not affect it.
    """
    lines = [f"{name} = {_format(getattr(cfg, name))}" for name in _semantic_names(cfg)]
    lines += [f"{alg}.{key} = {_format(value)}" for (alg, key), value in cfg.overrides]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def with_changes(cfg, **changes):
    return replace(cfg, **changes).validate()
