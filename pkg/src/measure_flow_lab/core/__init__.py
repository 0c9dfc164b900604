"""Domain types, reports, interfaces and errors."""

from measure_flow_lab.core.errors import (
    CapacityExceededError,
    ConfigError,
    HypothesisViolationError,
    IndependenceViolationError,
    InvalidArgumentError,
    LabError,
    NumericFailureError,
)
from measure_flow_lab.core.models import (
    CoefficientModel,
    EmpiricalMeasure,
    PathBundle,
    TimeGrid,
)
from measure_flow_lab.core.registry import Registry
from measure_flow_lab.core.reports import FormulaReport, InequalityReport, RunReport

__all__ = [
    "CapacityExceededError",
    "CoefficientModel",
    "ConfigError",
    "EmpiricalMeasure",
    "FormulaReport",
    "HypothesisViolationError",
    "IndependenceViolationError",
    "InequalityReport",
    "InvalidArgumentError",
    "LabError",
    "NumericFailureError",
    "PathBundle",
    "Registry",
    "RunReport",
    "TimeGrid",
]
