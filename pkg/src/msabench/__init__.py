"""Minor subspace analysis benchmark: MSSM, baselines, oracle and harness."""

from . import baselines, checkpoint, dataset, metrics, mssm, numerics, oracle
from .errors import (
    ConditioningError,
    ConvergenceError,
    DegenerateGapError,
    DimensionError,
    MsaError,
    NumericalBlowupError,
    RankError,
    ValidationError,
)

__version__ = "0.1.0"
