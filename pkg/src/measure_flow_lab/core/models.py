"""Data models for simulated Ito processes and empirical measures."""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError

WEIGHT_TOLERANCE = 1e-12

DriftFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
DiffusionFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
DistanceTag = Literal["W2", "dk"]


def _readonly(array: np.ndarray) -> np.ndarray:
    if array.flags.writeable:
        array.flags.writeable = False
    return array


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_n = T."""

    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise InvalidArgumentError(f"horizon must be positive, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidArgumentError(f"n_steps must be a positive integer, got {self.n_steps}")

    @classmethod
    def from_step(cls, horizon: float, step: float) -> "TimeGrid":
        """Build a grid from a target step; horizon/step must be (close to) an integer."""
        if step <= 0:
            raise InvalidArgumentError(f"step must be positive, got {step}")
        n_steps = int(round(horizon / step))
        if n_steps < 1 or abs(n_steps * step - horizon) > 1e-9 * max(1.0, horizon):
            raise InvalidArgumentError(f"step {step} does not divide horizon {horizon}")
        return cls(horizon=horizon, n_steps=n_steps)

    @property
    def step(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        times = np.arange(self.n_steps + 1, dtype=float) * self.step
        times[-1] = self.horizon  # last step absorbs rounding
        return _readonly(times)

    @cached_property
    def widths(self) -> np.ndarray:
        return _readonly(np.diff(self.times))


@dataclass(frozen=True)
class CoefficientModel:
    """The pair (b, sigma) with declared bound K and ellipticity delta.

    ``drift(t, x, aux)`` maps (N, d) states to (N, d); ``diffusion`` maps them to
    (N, d, d1). ``aux`` is the per-path auxiliary stream, shape (N, aux_dim).
    """

    dim: int
    noise_dim: int
    drift: DriftFn
    diffusion: DiffusionFn
    bound: float
    ellipticity: float
    aux_dim: int = 0
    constant: bool = False
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {self.dim}")
        if self.noise_dim < self.dim:
            raise InvalidArgumentError(
                f"noise_dim ({self.noise_dim}) must be >= dim ({self.dim})"
            )
        if self.bound <= 0:
            raise InvalidArgumentError(f"bound K must be positive, got {self.bound}")
        if self.ellipticity <= 0:
            raise InvalidArgumentError(f"ellipticity delta must be positive, got {self.ellipticity}")
        if self.aux_dim < 0:
            raise InvalidArgumentError(f"aux_dim must be >= 0, got {self.aux_dim}")

    def evaluate(
        self, t: float, states: np.ndarray, aux: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate (b, sigma) at left-endpoint time ``t`` for a batch of states."""
        n = states.shape[0]
        if aux is None:
            aux = np.zeros((n, self.aux_dim))
        drift = np.asarray(self.drift(t, states, aux), dtype=float)
        diffusion = np.asarray(self.diffusion(t, states, aux), dtype=float)
        drift = np.broadcast_to(drift, (n, self.dim))
        diffusion = np.broadcast_to(diffusion, (n, self.dim, self.noise_dim))
        return drift, diffusion

    @staticmethod
    def covariance(diffusion: np.ndarray) -> np.ndarray:
        """a = sigma sigma^* for a batch of (d, d1) matrices."""
        return np.einsum("...ik,...jk->...ij", diffusion, diffusion)


@dataclass(frozen=True)
class SamplePoints:
    """Sampled (t, x, lambda) inputs for coefficient validation."""

    times: np.ndarray
    states: np.ndarray
    directions: np.ndarray
    aux: np.ndarray

    def __post_init__(self) -> None:
        if len(self.times) == 0 or len(self.directions) == 0:
            raise InvalidArgumentError("sample points must contain at least one point and one direction")
        if self.states.shape[0] != len(self.times) or self.aux.shape[0] != len(self.times):
            raise InvalidArgumentError("sample times, states and aux must have equal length")


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the declared bound K and ellipticity delta on a set of sample points."""

    max_bound: float
    min_ellipticity: float
    declared_bound: float
    declared_ellipticity: float
    n_checks: int
    tolerance: float = 1e-12

    @property
    def bound_ok(self) -> bool:
        return self.max_bound <= self.declared_bound * (1 + self.tolerance)

    @property
    def ellipticity_ok(self) -> bool:
        return self.min_ellipticity >= self.declared_ellipticity * (1 - self.tolerance)

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.ellipticity_ok


@dataclass(frozen=True)
class PathBundle:
    """Euler-Maruyama trajectories of an ensemble of independent copies.

    ``states`` has shape (n_paths, n_steps + 1, d); ``drift_values``,
    ``diffusion_values`` and ``increments`` are indexed by the left endpoint
    of each step. Arrays are read-only.
    """

    grid: TimeGrid
    states: np.ndarray
    drift_values: np.ndarray
    diffusion_values: np.ndarray
    increments: np.ndarray
    seed: int
    rng_scheme: str
    model_name: str = "custom"

    def __post_init__(self) -> None:
        n_paths, n_points, dim = self.states.shape
        if n_points != self.grid.n_steps + 1:
            raise InvalidArgumentError("states do not match the time grid")
        if self.drift_values.shape != (n_paths, self.grid.n_steps, dim):
            raise InvalidArgumentError("drift cache has the wrong shape")
        if self.diffusion_values.shape[:3] != (n_paths, self.grid.n_steps, dim):
            raise InvalidArgumentError("diffusion cache has the wrong shape")
        for array in (self.states, self.drift_values, self.diffusion_values, self.increments):
            _readonly(array)

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[2]

    @property
    def noise_dim(self) -> int:
        return self.increments.shape[2]

    def covariance_values(self, step: int) -> np.ndarray:
        """a = sigma sigma^* at the left endpoint of ``step``, shape (n_paths, d, d)."""
        return CoefficientModel.covariance(self.diffusion_values[:, step])


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atom cloud standing in for a measure in P_2(R^d)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        weights = np.asarray(self.weights, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise InvalidArgumentError("points must be a nonempty (N, d) array")
        if weights.shape != (points.shape[0],):
            raise InvalidArgumentError("weights must have one entry per point")
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("points must be finite")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        if abs(float(np.sum(weights)) - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidArgumentError(f"weights sum to {np.sum(weights)!r}, expected 1")
        if points.flags.writeable:
            points = points.copy()
        if weights.flags.writeable:
            weights = weights.copy()
        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "weights", _readonly(weights))

    @classmethod
    def uniform(cls, points: np.ndarray) -> "EmpiricalMeasure":
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        n = points.shape[0]
        return cls(points=points, weights=np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, location) -> "EmpiricalMeasure":
        location = np.atleast_1d(np.asarray(location, dtype=float))
        return cls(points=location[None, :], weights=np.ones(1))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def with_weights(self, weights: np.ndarray) -> "EmpiricalMeasure":
        return EmpiricalMeasure(points=self.points, weights=weights)

    def mixture(self, other: "EmpiricalMeasure", t: float) -> "EmpiricalMeasure":
        """t * self + (1 - t) * other, atoms concatenated."""
        if other.dim != self.dim:
            raise InvalidArgumentError("cannot mix measures of different dimension")
        return EmpiricalMeasure(
            points=np.concatenate([self.points, other.points]),
            weights=np.concatenate([t * self.weights, (1.0 - t) * other.weights]),
        )

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def second_moment(self) -> float:
        return float(self.weights @ np.sum(self.points**2, axis=1))


@dataclass(frozen=True)
class FunctionalMetadata:
    """Growth and regularity bookkeeping for a measure functional."""

    name: str
    sobolev_exponent: float
    growth_exponent: int
    distance: DistanceTag = "W2"
    hypothesis_certified: bool = False
    measure_degree: int = 1


@dataclass(frozen=True)
class ExtendedMetadata:
    """Bookkeeping for functionals of (t, x, mu)."""

    name: str
    space_exponent: float
    derivative_exponent: float
    space_growth: int = 0
    derivative_growth: int = 0
    distance: DistanceTag = "W2"
    hypothesis_certified: bool = False
