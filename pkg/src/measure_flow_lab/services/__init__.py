"""Simulation, measure calculus, functionals and the formula checks."""

from measure_flow_lab.services.formula import (
    convergence_study,
    verify_extended,
    verify_measure_flow,
    verify_time_linear,
)
from measure_flow_lab.services.measure import mollifier_make, mollify, wasserstein2
from measure_flow_lab.services.process import marginal, simulate_paths, validate_coefficients

__all__ = [
    "convergence_study",
    "marginal",
    "mollifier_make",
    "mollify",
    "simulate_paths",
    "validate_coefficients",
    "verify_extended",
    "verify_measure_flow",
    "verify_time_linear",
    "wasserstein2",
]
