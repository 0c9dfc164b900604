"""Euler-Maruyama simulation of bounded, uniformly elliptic Ito processes."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError, NumericFailureError
from measure_flow_lab.core.interfaces import IInitialLaw
from measure_flow_lab.core.models import (
    CoefficientModel,
    EmpiricalMeasure,
    PathBundle,
    SamplePoints,
    TimeGrid,
    ValidationReport,
)
from measure_flow_lab.utils.rng import POINTS_TAG, block_bounds, scheme_name, stream
from measure_flow_lab.utils.stats import loglog_slope, weighted_mean

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 4096


# Initial laws


@dataclass(frozen=True)
class PointMassLaw:
    """X_0 = location almost surely."""

    location: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.location)

    @property
    def description(self) -> str:
        return f"point{list(self.location)}"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.tile(np.asarray(self.location, dtype=float), (size, 1))

    def second_moment(self) -> float:
        return float(np.sum(np.square(self.location)))


@dataclass(frozen=True)
class GaussianLaw:
    """X_0 ~ N(mean, scale^2 I)."""

    mean: tuple[float, ...]
    scale: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def description(self) -> str:
        return f"gaussian{list(self.mean)},scale={self.scale}"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.mean, dtype=float) + self.scale * rng.standard_normal((size, self.dim))

    def second_moment(self) -> float:
        return float(np.sum(np.square(self.mean)) + self.dim * self.scale**2)


@dataclass(frozen=True)
class UniformBallLaw:
    """X_0 uniform on the closed ball B(center, radius)."""

    center: tuple[float, ...]
    radius: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def description(self) -> str:
        return f"ball{list(self.center)},radius={self.radius}"

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + self.radius * uniform_ball(rng, size, self.dim)

    def second_moment(self) -> float:
        d = self.dim
        return float(np.sum(np.square(self.center)) + self.radius**2 * d / (d + 2))


def uniform_ball(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    """Uniform draws from the closed unit ball of R^dim."""
    directions = rng.standard_normal((size, dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    radii = rng.random((size, 1)) ** (1.0 / dim)
    return directions / norms * radii


# Coefficient presets


def _padded_identity(dim: int, noise_dim: int, scale: float) -> np.ndarray:
    sigma = np.zeros((dim, noise_dim))
    sigma[:, :dim] = scale * np.eye(dim)
    return sigma


def _constant_model(
    name: str,
    drift: np.ndarray,
    sigma: np.ndarray,
    bound: float | None,
    ellipticity: float | None,
) -> CoefficientModel:
    dim, noise_dim = sigma.shape
    if bound is None:
        bound = float(np.linalg.norm(drift) + np.linalg.norm(sigma))
    if ellipticity is None:
        ellipticity = float(np.min(np.linalg.eigvalsh(sigma @ sigma.T)))
    drift_row = drift[None, :]
    sigma_block = sigma[None, :, :]
    return CoefficientModel(
        dim=dim,
        noise_dim=noise_dim,
        drift=lambda t, x, aux: np.broadcast_to(drift_row, (x.shape[0], dim)),
        diffusion=lambda t, x, aux: np.broadcast_to(sigma_block, (x.shape[0], dim, noise_dim)),
        bound=bound,
        ellipticity=ellipticity if ellipticity > 0 else 1.0,
        constant=True,
        name=name,
    )


def brownian(
    dim: int,
    noise_dim: int | None = None,
    scale: float = 1.0,
    bound: float | None = None,
    ellipticity: float | None = None,
) -> CoefficientModel:
    """b = 0, sigma = scale * [I_d | 0]."""
    noise_dim = noise_dim or dim
    return _constant_model(
        "brownian", np.zeros(dim), _padded_identity(dim, noise_dim, scale), bound, ellipticity
    )


def constant_drift(
    beta,
    noise_dim: int | None = None,
    scale: float = 1.0,
    bound: float | None = None,
    ellipticity: float | None = None,
) -> CoefficientModel:
    """b = beta, sigma = scale * [I_d | 0]."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    dim = beta.shape[0]
    noise_dim = noise_dim or dim
    return _constant_model(
        "constant_drift", beta, _padded_identity(dim, noise_dim, scale), bound, ellipticity
    )


def rotation(
    angle: float, scale: float = 1.0, bound: float | None = None, ellipticity: float | None = None
) -> CoefficientModel:
    """b = 0 and sigma a scaled 2x2 rotation, so a = scale^2 I."""
    c, s = math.cos(angle), math.sin(angle)
    sigma = scale * np.array([[c, -s], [s, c]])
    if ellipticity is None:
        ellipticity = scale**2
    return _constant_model("rotation", np.zeros(2), sigma, bound, ellipticity)


def degenerate(dim: int, bound: float = 1.0, ellipticity: float = 1.0) -> CoefficientModel:
    """sigma = 0; violates uniform ellipticity for every declared delta."""
    return _constant_model(
        "degenerate", np.zeros(dim), np.zeros((dim, dim)), bound, ellipticity
    )


def oscillating(
    beta,
    scale: float = 1.0,
    epsilon: float = 0.5,
    bound: float | None = None,
    ellipticity: float | None = None,
) -> CoefficientModel:
    """b(t, x) = beta * sin(x), sigma(t, x) = scale * diag(1 + epsilon * cos(x))."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    dim = beta.shape[0]
    if not 0 <= epsilon < 1:
        raise InvalidArgumentError(f"epsilon must lie in [0, 1), got {epsilon}")
    if bound is None:
        bound = float(np.linalg.norm(beta) + scale * (1 + epsilon) * math.sqrt(dim))
    if ellipticity is None:
        ellipticity = (scale * (1 - epsilon)) ** 2

    def drift(t, x, aux):
        return beta * np.sin(x)

    def diffusion(t, x, aux):
        diag = scale * (1.0 + epsilon * np.cos(x))
        return diag[:, :, None] * np.eye(dim)[None, :, :]

    return CoefficientModel(
        dim=dim,
        noise_dim=dim,
        drift=drift,
        diffusion=diffusion,
        bound=bound,
        ellipticity=ellipticity,
        name="oscillating",
    )


def randomized(
    beta,
    scale: float = 1.0,
    bound: float | None = None,
    ellipticity: float | None = None,
) -> CoefficientModel:
    """b = beta * (2U - 1) with U a fresh per-path uniform at each step."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    dim = beta.shape[0]
    if bound is None:
        bound = float(np.linalg.norm(beta) + scale * math.sqrt(dim))
    if ellipticity is None:
        ellipticity = scale**2
    sigma = _padded_identity(dim, dim, scale)[None, :, :]

    def drift(t, x, aux):
        return beta[None, :] * (2.0 * aux[:, :1] - 1.0)

    def diffusion(t, x, aux):
        return np.broadcast_to(sigma, (x.shape[0], dim, dim))

    return CoefficientModel(
        dim=dim,
        noise_dim=dim,
        drift=drift,
        diffusion=diffusion,
        bound=bound,
        ellipticity=ellipticity,
        aux_dim=1,
        name="randomized",
    )


# Simulation


def _first_bad_row(*arrays: np.ndarray) -> int | None:
    bad = np.zeros(arrays[0].shape[0], dtype=bool)
    for array in arrays:
        bad |= ~np.all(np.isfinite(array.reshape(array.shape[0], -1)), axis=1)
    rows = np.flatnonzero(bad)
    return int(rows[0]) if rows.size else None


def simulate_paths(
    model: CoefficientModel,
    grid: TimeGrid,
    n_paths: int,
    init: IInitialLaw,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
    threads: int = 1,
) -> PathBundle:
    """Simulate ``n_paths`` independent copies of X with left-endpoint coefficients.

    Args:
        model: Coefficients (b, sigma) and their declared bounds
        grid: Uniform time grid
        n_paths: Ensemble size
        init: Sampler for X_0
        seed: Root seed of the per-block Philox streams
        block_size: Paths per RNG block; part of the reproducibility key
        threads: Worker threads; results do not depend on this

    Returns:
        PathBundle with states, cached coefficients and Brownian increments

    Raises:
        InvalidArgumentError: On nonpositive sizes or dimension mismatch
        NumericFailureError: If a coefficient evaluation is not finite
    """
    if int(n_paths) != n_paths or n_paths < 1:
        raise InvalidArgumentError(f"n_paths must be a positive integer, got {n_paths}")
    if block_size < 1:
        raise InvalidArgumentError(f"block_size must be positive, got {block_size}")
    if init.dim != model.dim:
        raise InvalidArgumentError(
            f"initial law has dimension {init.dim}, model has {model.dim}"
        )

    d, d1, m = model.dim, model.noise_dim, model.aux_dim
    n_steps = grid.n_steps
    times, widths = grid.times, grid.widths
    states = np.empty((n_paths, n_steps + 1, d))
    increments = np.empty((n_paths, n_steps, d1))

    if model.constant:
        b0, sigma0 = model.evaluate(0.0, np.zeros((1, d)), np.zeros((1, m)))
        if _first_bad_row(b0, sigma0) is not None:
            raise NumericFailureError("constant coefficients are not finite", path=0, step=0)
        b0, sigma0 = np.array(b0[0]), np.array(sigma0[0])
        drift_values = np.broadcast_to(b0, (n_paths, n_steps, d))
        diffusion_values = np.broadcast_to(sigma0, (n_paths, n_steps, d, d1))
    else:
        drift_values = np.empty((n_paths, n_steps, d))
        diffusion_values = np.empty((n_paths, n_steps, d, d1))

    def run_block(block: int, start: int, stop: int) -> None:
        rng = stream(seed, block)
        size = stop - start
        x = np.asarray(init.sample(rng, size), dtype=float).reshape(size, d)
        states[start:stop, 0] = x
        for i in range(n_steps):
            dw = rng.standard_normal((size, d1)) * math.sqrt(widths[i])
            aux = rng.random((size, m)) if m else np.empty((size, 0))
            increments[start:stop, i] = dw
            if model.constant:
                x = x + b0 * widths[i] + dw @ sigma0.T
            else:
                b, sigma = model.evaluate(float(times[i]), x, aux)
                bad = _first_bad_row(b, sigma)
                if bad is not None:
                    raise NumericFailureError(
                        "coefficient evaluation is not finite", path=start + bad, step=i
                    )
                drift_values[start:stop, i] = b
                diffusion_values[start:stop, i] = sigma
                x = x + b * widths[i] + np.einsum("pij,pj->pi", sigma, dw)
            states[start:stop, i + 1] = x

    blocks = block_bounds(n_paths, block_size)
    logger.debug(
        "simulating %d paths x %d steps (%s) in %d blocks", n_paths, n_steps, model.name, len(blocks)
    )
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(blocks))) as executor:
            futures = [
                executor.submit(run_block, index, start, stop)
                for index, (start, stop) in enumerate(blocks)
            ]
            # surface the failure of the lowest block first
            for future in futures:
                future.result()
    else:
        for index, (start, stop) in enumerate(blocks):
            run_block(index, start, stop)

    return PathBundle(
        grid=grid,
        states=states,
        drift_values=drift_values,
        diffusion_values=diffusion_values,
        increments=increments,
        seed=seed,
        rng_scheme=scheme_name(block_size),
        model_name=model.name,
    )


def marginal(paths: PathBundle, t_index: int) -> EmpiricalMeasure:
    """Uniform empirical measure of the ensemble at grid index ``t_index``."""
    if int(t_index) != t_index or not 0 <= t_index <= paths.grid.n_steps:
        raise InvalidArgumentError(
            f"t_index must lie in [0, {paths.grid.n_steps}], got {t_index}"
        )
    return EmpiricalMeasure(
        points=paths.states[:, int(t_index), :],
        weights=np.full(paths.n_paths, 1.0 / paths.n_paths),
    )


# Coefficient validation against the declared K and delta


def make_sample_points(
    dim: int,
    horizon: float = 1.0,
    aux_dim: int = 0,
    n_points: int = 64,
    n_directions: int = 16,
    radius: float = 3.0,
    seed: int = 0,
) -> SamplePoints:
    """Sample points: random (t, x) plus canonical basis and random unit directions."""
    rng = stream(seed, 0, POINTS_TAG)
    random_dirs = rng.standard_normal((n_directions, dim))
    random_dirs /= np.linalg.norm(random_dirs, axis=1, keepdims=True)
    return SamplePoints(
        times=rng.random(n_points) * horizon,
        states=radius * rng.standard_normal((n_points, dim)),
        directions=np.concatenate([np.eye(dim), random_dirs]),
        aux=rng.random((n_points, aux_dim)),
    )


def validate_coefficients(model: CoefficientModel, points: SamplePoints) -> ValidationReport:
    """Certify |b| + |sigma| <= K and (sigma sigma^*) lambda . lambda >= delta |lambda|^2 on ``points``.

    |sigma| is the Frobenius norm. Failures are reported, never raised.
    """
    bounds = np.empty(len(points.times))
    ratios = np.empty(len(points.times))
    directions = points.directions
    sq_norms = np.sum(directions**2, axis=1)
    for j, t in enumerate(points.times):
        b, sigma = model.evaluate(float(t), points.states[j : j + 1], points.aux[j : j + 1])
        bounds[j] = np.linalg.norm(b[0]) + np.linalg.norm(sigma[0])
        a = sigma[0] @ sigma[0].T
        quad = np.einsum("li,ij,lj->l", directions, a, directions)
        ratios[j] = np.min(quad / sq_norms)
    max_bound = float(np.max(np.where(np.isfinite(bounds), bounds, np.inf)))
    min_ratio = float(np.min(np.where(np.isfinite(ratios), ratios, -np.inf)))
    report = ValidationReport(
        max_bound=max_bound,
        min_ellipticity=min_ratio,
        declared_bound=model.bound,
        declared_ellipticity=model.ellipticity,
        n_checks=len(points.times) * len(directions),
    )
    if not report.passed:
        logger.warning(
            "coefficients %s fail validation: max |b|+|sigma|=%g (K=%g), min ratio=%g (delta=%g)",
            model.name,
            max_bound,
            model.bound,
            min_ratio,
            model.ellipticity,
        )
    return report


def weak_error_slope(
    dim: int,
    steps: list[float],
    n_paths: int,
    seed: int,
    init: IInitialLaw,
    horizon: float = 1.0,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> dict[str, np.ndarray | float]:
    """|mean |X_T|^2 - (E|X_0|^2 + d T)| for b = 0, sigma = I over a list of steps.

    Returns the errors, their Monte Carlo standard errors and the log-log slope
    of error against step.
    """
    model = brownian(dim)
    errors, stderrs = [], []
    target = init.second_moment() + dim * horizon
    for step in steps:
        paths = simulate_paths(
            model, TimeGrid.from_step(horizon, step), n_paths, init, seed, block_size
        )
        sq = np.sum(paths.states[:, -1, :] ** 2, axis=1)
        errors.append(abs(float(weighted_mean(sq)) - target))
        stderrs.append(float(np.std(sq) / math.sqrt(n_paths)))
    return {
        "steps": np.asarray(steps, dtype=float),
        "errors": np.asarray(errors),
        "stderrs": np.asarray(stderrs),
        "slope": loglog_slope(np.asarray(steps), np.asarray(errors)),
    }
