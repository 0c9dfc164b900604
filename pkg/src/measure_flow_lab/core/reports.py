"""Report types produced by the formula checks and the diagnostics."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError


@dataclass(frozen=True)
class FormulaReport:
    """Both sides of an Ito-Krylov identity on the grid times.

    ``terms`` keeps insertion order; it is the column order of every export.
    ``residual`` is lhs minus the sum of the terms, so residual[0] is 0.
    """

    scenario: str
    times: np.ndarray
    lhs: np.ndarray
    terms: dict[str, np.ndarray]
    residual: np.ndarray
    mc_stderr: np.ndarray
    term_stderr: dict[str, np.ndarray] = field(default_factory=dict)
    extras: dict[str, np.ndarray] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.times)
        series = {"lhs": self.lhs, "residual": self.residual, "mc_stderr": self.mc_stderr}
        series.update(self.terms)
        series.update(self.term_stderr)
        series.update(self.extras)
        for name, values in series.items():
            if len(values) != n:
                raise InvalidArgumentError(f"series {name!r} has length {len(values)}, expected {n}")
        if self.residual[0] != 0.0:
            raise InvalidArgumentError(f"residual at t=0 must be exactly 0, got {self.residual[0]!r}")
        if np.any(self.mc_stderr < 0):
            raise InvalidArgumentError("mc_stderr must be nonnegative")

    @property
    def term_names(self) -> list[str]:
        return list(self.terms)

    @property
    def rhs_total(self) -> np.ndarray:
        total = np.zeros(len(self.times))
        for values in self.terms.values():
            total = total + values
        return total

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def within(self, multiplier: float = 3.0, atol: float = 1e-12) -> bool:
        """True when |residual| <= multiplier * mc_stderr + atol at every grid time."""
        return bool(np.all(np.abs(self.residual) <= multiplier * self.mc_stderr + atol))

    def columns(self) -> dict[str, np.ndarray]:
        """Export columns: t, lhs, each term, residual, mc_stderr."""
        out = {"t": self.times, "lhs": self.lhs}
        out.update(self.terms)
        out["residual"] = self.residual
        out["mc_stderr"] = self.mc_stderr
        return out


def term_gap(first: FormulaReport, second: FormulaReport) -> dict[str, float]:
    """Largest absolute difference of lhs and each shared term between two reports."""
    if len(first.times) != len(second.times) or not np.allclose(first.times, second.times):
        raise InvalidArgumentError("reports are on different time grids")
    gaps = {"lhs": float(np.max(np.abs(first.lhs - second.lhs)))}
    for name in first.terms:
        if name in second.terms:
            gaps[name] = float(np.max(np.abs(first.terms[name] - second.terms[name])))
    return gaps


@dataclass(frozen=True)
class InequalityReport:
    """(lhs, rhs) samples of an inequality with its verdict.

    ``max_ratio`` only counts samples with rhs > 0 and is nan when there are none.
    """

    name: str
    samples: np.ndarray
    max_ratio: float
    passed: bool
    tolerance: float = 0.0
    notes: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_samples(
        cls,
        name: str,
        lhs,
        rhs,
        *,
        atol: float = 0.0,
        rtol: float = 0.0,
        bounded: bool = False,
        notes: list[str] | None = None,
        details: dict[str, Any] | None = None,
    ) -> "InequalityReport":
        """Build a report; ``bounded`` checks only that every ratio is finite."""
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if lhs.shape != rhs.shape:
            raise InvalidArgumentError("lhs and rhs need one entry per sample")
        if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
            raise InvalidArgumentError(f"{name}: inequality samples must be finite")
        positive = rhs > 0
        ratios = lhs[positive] / rhs[positive]
        max_ratio = float(np.max(ratios)) if ratios.size else math.nan
        if bounded:
            passed = bool(np.all(np.isfinite(ratios)))
        else:
            passed = bool(np.all(lhs <= rhs * (1.0 + rtol) + atol))
        return cls(
            name=name,
            samples=np.column_stack([lhs, rhs]),
            max_ratio=max_ratio,
            passed=passed,
            tolerance=max(atol, rtol),
            notes=list(notes or []),
            details=dict(details or {}),
        )


@dataclass(frozen=True)
class ConvergenceTable:
    """Max |residual| per (step, n_paths) cell, root mean square over replicates, with fitted log-log slopes."""

    steps: np.ndarray
    n_paths: np.ndarray
    max_residual: np.ndarray
    max_stderr: np.ndarray
    slope_step: float
    slope_paths: float
    refinement_monotone: bool
    replicates: int = 1

    @property
    def finest(self) -> float:
        return float(self.max_residual[-1, -1])

    @property
    def coarsest(self) -> float:
        return float(self.max_residual[0, 0])


@dataclass
class RunReport:
    """Everything one run produced, with the config that reproduces it."""

    scenario: str
    config: dict[str, Any]
    passed: bool
    formula: FormulaReport | None = None
    inequalities: list[InequalityReport] = field(default_factory=list)
    convergence: ConvergenceTable | None = None
    validation: dict[str, Any] | None = None
    empirical_constants: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    rng_scheme: str = ""
    wall_clock: float = 0.0
    versions: dict[str, str] = field(default_factory=dict)
