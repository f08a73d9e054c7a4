"""Synthetic zero-mean Gaussian data with a prescribed covariance spectrum.

All randomness comes from numpy's ``PCG64`` bit generator. The generating
basis is drawn from ``seed`` directly; the Gaussian sample matrix uses the
stream ``SeedSequence([seed, 1])`` so the two never overlap.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ValidationError
from .numerics import as_matrix, random_orthogonal

RNG_NAME = "numpy.PCG64"
MAGIC = b"MSA1"


@dataclass(frozen=True)
class SpectrumSpec:
    """Target covariance eigenvalues.

    ``kind="linear"`` gives ``lambda_k = slope * k`` for ``k = 1..n``;
    ``kind="explicit"`` takes ``values`` verbatim (any order).
    """

    kind: str
    n: int
    slope: float = 0.1
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("linear", "explicit"):
            raise ValidationError(f"unknown spectrum kind {self.kind!r}")
        if self.n < 1:
            raise ValidationError("spectrum dimension n must be at least 1")
        if self.kind == "explicit" and len(self.values) != self.n:
            raise ValidationError(f"explicit spectrum has {len(self.values)} values, expected n={self.n}")
        if np.any(self.eigenvalues() <= 0):
            raise ValidationError("spectrum entries must be strictly positive")

    @classmethod
    def linear(cls, n, slope=0.1):
        return cls("linear", int(n), slope=float(slope))

    @classmethod
    def explicit(cls, values):
        values = tuple(float(v) for v in values)
        return cls("explicit", len(values), values=values)

    def eigenvalues(self):
        """Descending target eigenvalues."""
        if self.kind == "linear":
            lam = self.slope * np.arange(1, self.n + 1, dtype=float)
        else:
            lam = np.asarray(self.values, dtype=float)
        return np.sort(lam)[::-1]


def gaussian_spectrum(n, seed, scale=1.0, floor=0.01):
    """Random spectrum: sorted magnitudes of n Gaussian draws, shifted by a floor.

    Returns an explicit :class:`SpectrumSpec`.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    lam = scale * (np.abs(rng.standard_normal(n)) + floor)
    return SpectrumSpec.explicit(np.sort(lam)[::-1])


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray  # n x T, samples as columns
    target_spectrum: np.ndarray
    basis: np.ndarray = field(default=None, repr=False)
    seed: int = None

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def T(self):
        return self.X.shape[1]


def generate(spec, T, seed):
    lam = spec.eigenvalues()
    n = spec.n
    if T < 2 or T <= n:
        raise ValidationError(f"need T > n and T >= 2, got T={T}, n={n}")
    Q = random_orthogonal(n, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    G = rng.standard_normal((n, T))
    X = Q @ (np.sqrt(lam)[:, None] * G)
    X -= X.mean(axis=1, keepdims=True)
    X.setflags(write=False)
    return Dataset(X=X, target_spectrum=lam, basis=Q, seed=seed)


def empirical_covariance(X):
    X = as_matrix(X, "X")
    C = (X @ X.T) / X.shape[1]
    return 0.5 * (C + C.T)


def stream(d, epochs=1):
    """Yield ``(t, x_t)`` with ``t = 1, 2, ...`` over ``epochs`` passes of the columns."""
    X = d.X if isinstance(d, Dataset) else np.asarray(d)
    T = X.shape[1]
    t = 0
    for _ in range(epochs):
        for j in range(T):
            t += 1
            yield t, X[:, j]


def save(d, path):
    """Write ``d`` in the MSA1 binary layout (little-endian, X column-major)."""
    n, T = d.X.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", n, T))
        fh.write(np.asarray(d.X, dtype="<f8").tobytes(order="F"))
        fh.write(np.asarray(d.target_spectrum, dtype="<f8").tobytes())


def load(path):
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValidationError(f"{path}: bad magic {raw[:4]!r}")
    n, T = struct.unpack_from("<QQ", raw, 4)
    expected = 20 + 8 * (n * T + n)
    if len(raw) != expected:
        raise DimensionError(f"{path}: expected {expected} bytes for n={n}, T={T}, found {len(raw)}")
    X = np.frombuffer(raw, dtype="<f8", count=n * T, offset=20).reshape((n, T), order="F")
    spectrum = np.frombuffer(raw, dtype="<f8", count=n, offset=20 + 8 * n * T)
    return Dataset(X=X.astype(float), target_spectrum=spectrum.astype(float))
