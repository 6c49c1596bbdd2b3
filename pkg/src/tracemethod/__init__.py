"""Trace-condition test for the causal direction between two high-dimensional variables."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateInputError,
    DimensionError,
    IngestError,
    InsufficientDataError,
    NumericalError,
    TraceMethodError,
)
from .estimators import CovarianceSet, Direction, PairedDataset, StructureEstimate, covariances, structure_estimate  # noqa: E402
from .trace_method import (  # noqa: E402
    DeltaReport,
    EpsilonDecision,
    NullDistribution,
    TestResult,
    Verdict,
    empirical_delta,
    epsilon_decide,
    infer,
    null_sample,
    p_value,
)

__all__ = [
    "CovarianceSet",
    "DegenerateInputError",
    "DeltaReport",
    "DimensionError",
    "Direction",
    "EpsilonDecision",
    "IngestError",
    "InsufficientDataError",
    "NullDistribution",
    "NumericalError",
    "PairedDataset",
    "StructureEstimate",
    "TestResult",
    "TraceMethodError",
    "Verdict",
    "covariances",
    "empirical_delta",
    "epsilon_decide",
    "infer",
    "null_sample",
    "p_value",
    "structure_estimate",
]
