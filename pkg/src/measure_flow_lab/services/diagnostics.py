"""Empirical checks of Krylov's inequality and the supporting integrability, convolution and contraction bounds."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal, special, stats

from measure_flow_lab.core.errors import HypothesisViolationError, InvalidArgumentError
from measure_flow_lab.core.interfaces import ISpaceTimeField
from measure_flow_lab.core.models import CoefficientModel, EmpiricalMeasure, PathBundle, TimeGrid
from measure_flow_lab.core.reports import InequalityReport
from measure_flow_lab.services.measure import (
    ASSIGNMENT_CAP,
    CONVOLUTION_ATOM_CAP,
    MOLLIFIED_ATOM_CAP,
    QUANTILE_CAP,
    TRANSPORT_CAP,
    conjugate_exponent,
    convolve_measures,
    mollifier_make,
    mollify,
    wasserstein2,
)
from measure_flow_lab.utils.rng import SAMPLING_TAG, stream
from measure_flow_lab.utils.stats import ideal_bootstrap_stderr, loglog_slope, weighted_mean

logger = logging.getLogger(__name__)

REGRESSION_TIMES = tuple(2.0**-j for j in range(1, 7))
SLOPE_TOLERANCE = 0.02
INTEGRAL_TOLERANCE = 1e-6


def ball_volume(radius: float, dim: int) -> float:
    return math.pi ** (dim / 2.0) * radius**dim / special.gamma(dim / 2.0 + 1.0)


# Gaussian flow densities


@dataclass(frozen=True)
class GaussianDensity:
    """p(s, x) = (2 pi s)^{-d/2} exp(-|x - c|^2 / (2 s)), the law of c + B_s."""

    dim: int
    time: float
    center: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.time <= 0:
            raise InvalidArgumentError(f"time must be positive, got {self.time}")

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        center = np.zeros(self.dim) if self.center is None else np.asarray(self.center)
        sq = np.sum((x - center) ** 2, axis=1)
        return (2.0 * math.pi * self.time) ** (-self.dim / 2.0) * np.exp(-sq / (2.0 * self.time))

    def lq_norm(self, q: float) -> float:
        """Closed form (2 pi s)^{d (1 - q) / (2 q)} q^{-d / (2 q)}; q = inf gives the peak."""
        if q < 1:
            raise InvalidArgumentError(f"q must be >= 1, got {q}")
        two_pi_s = 2.0 * math.pi * self.time
        if math.isinf(q):
            return two_pi_s ** (-self.dim / 2.0)
        return two_pi_s ** (self.dim * (1.0 - q) / (2.0 * q)) * q ** (-self.dim / (2.0 * q))

    def lq_norm_quadrature(self, q: float) -> float:
        """The same norm from 1-D adaptive quadrature of one factor, raised to the d-th power."""
        if not math.isfinite(q) or q < 1:
            raise InvalidArgumentError(f"q must be finite and >= 1, got {q}")
        s = self.time
        factor, _ = integrate.quad(
            lambda x: ((2.0 * math.pi * s) ** -0.5 * math.exp(-x * x / (2.0 * s))) ** q,
            -np.inf,
            np.inf,
            epsabs=0.0,
            epsrel=1e-12,
            limit=200,
        )
        return float(factor ** (self.dim / q))


# Krylov test fields f(t, x)


@dataclass(frozen=True)
class BallIndicator:
    """1{|x - center| <= radius}."""

    radius: float = 1.0
    center: tuple[float, ...] | None = None
    name: str = "ball"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        center = 0.0 if self.center is None else np.asarray(self.center)
        return (np.sum((x - center) ** 2, axis=1) <= self.radius**2).astype(float)

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        return (horizon * ball_volume(self.radius, dim)) ** (1.0 / q)


@dataclass(frozen=True)
class CubeIndicator:
    """1{max_i |x_i| <= half_width}."""

    half_width: float = 1.0
    name: str = "cube"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return (np.max(np.abs(x), axis=1) <= self.half_width).astype(float)

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        return (horizon * (2.0 * self.half_width) ** dim) ** (1.0 / q)


@dataclass(frozen=True)
class GaussianField:
    """amplitude * exp(-|x|^2 / (2 scale^2))."""

    scale: float = 1.0
    amplitude: float = 1.0
    name: str = "gaussian"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.exp(-np.sum(x**2, axis=1) / (2.0 * self.scale**2))

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        space = (2.0 * math.pi * self.scale**2 / q) ** (dim / 2.0)
        return abs(self.amplitude) * (horizon * space) ** (1.0 / q)


@dataclass(frozen=True)
class TimeRampGaussian:
    """(t / horizon) * exp(-|x|^2 / (2 scale^2))."""

    horizon: float
    scale: float = 1.0
    name: str = "time_ramp_gaussian"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return (t / self.horizon) * np.exp(-np.sum(x**2, axis=1) / (2.0 * self.scale**2))

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        # int_0^T (t / horizon)^q dt with T = horizon
        time_part = horizon ** (q + 1.0) / (self.horizon**q * (q + 1.0))
        space = (2.0 * math.pi * self.scale**2 / q) ** (dim / 2.0)
        return (time_part * space) ** (1.0 / q)


@dataclass(frozen=True)
class ZeroField:
    name: str = "zero"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(len(x))

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        return 0.0


@dataclass(frozen=True)
class ScaledField:
    """factor * base."""

    base: ISpaceTimeField
    factor: float

    @property
    def name(self) -> str:
        return f"{self.factor:g}*{self.base.name}"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.factor * self.base.value(t, x)

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        return abs(self.factor) * self.base.lq_norm(q, horizon, dim)


def krylov_family(horizon: float, dim: int) -> list[ISpaceTimeField]:
    """The fixed five-member test family."""
    shifted = tuple([0.5] + [0.0] * (dim - 1))
    return [
        BallIndicator(radius=1.0),
        BallIndicator(radius=0.5, center=shifted, name="shifted_ball"),
        CubeIndicator(half_width=0.5),
        GaussianField(scale=0.5),
        TimeRampGaussian(horizon=horizon, scale=0.5),
    ]


def gaussian_ball_occupation(radius: float, grid: TimeGrid, dim: int) -> float:
    """Left Riemann sum of P(|B_s| <= radius) for a standard Brownian motion from 0."""
    total = 0.0
    for t, width in zip(grid.times[:-1], grid.widths):
        probability = 1.0 if t == 0 else float(stats.chi2.cdf(radius**2 / t, dim))
        total += width * probability
    return total


def krylov_check(
    paths: PathBundle,
    model: CoefficientModel,
    family: list[ISpaceTimeField],
    p_exp: float,
) -> InequalityReport:
    """Ratios E int_0^T |f(s, X_s)| ds / ||f||_{L^{p+1}} over a family of test fields.

    The constant is unknown, so the report passes when every ratio is finite
    and records the largest one as the empirical constant. Fields with zero
    norm are skipped with a note.
    """
    if not family:
        raise InvalidArgumentError("krylov_check needs a nonempty family")
    if paths.dim != model.dim:
        raise InvalidArgumentError(f"paths have dimension {paths.dim}, model has {model.dim}")
    if p_exp < paths.dim:
        raise HypothesisViolationError(f"p must be >= d = {paths.dim}, got {p_exp}")
    q = p_exp + 1.0
    grid = paths.grid
    lhs, rhs, notes = [], [], []
    per_field = {}
    for f in family:
        occupation = np.zeros(paths.n_paths)
        for i, (t, width) in enumerate(zip(grid.times[:-1], grid.widths)):
            occupation += width * np.abs(f.value(float(t), paths.states[:, i]))
        mean = float(weighted_mean(occupation))
        stderr = float(ideal_bootstrap_stderr(occupation))
        norm = f.lq_norm(q, grid.horizon, paths.dim)
        entry = {"lhs": mean, "lhs_stderr": stderr, "rhs": norm}
        if norm <= 0:
            notes.append(f"{f.name}: zero L^{q:g} norm, skipped")
            logger.warning("krylov field %s has zero norm; skipped", f.name)
        else:
            lhs.append(mean)
            rhs.append(norm)
            entry["ratio"] = mean / norm
            entry["ratio_stderr"] = stderr / norm
        per_field[f.name] = entry
    report = InequalityReport.from_samples(
        "krylov",
        lhs,
        rhs,
        bounded=True,
        notes=notes,
        details={"fields": per_field, "q": q, "model": model.name},
    )
    report.details["empirical_constant"] = report.max_ratio
    return report


# Integrability of Gaussian flow densities


def _time_exponent(k: float, dim: int) -> float:
    """Power of s in ||p(s, .)||_{L^{k'}}: -d / (2k)."""
    return 0.0 if math.isinf(k) else -dim / (2.0 * k)


def density_integrability_check(k: float, dim: int, horizon: float) -> InequalityReport:
    """s -> ||p(s, .)||_{L^{k'}} lies in L^{k/d}([0, T]) for the Gaussian flow.

    The integrand (||p(s, .)||_{L^{k'}})^{k/d} behaves like C s^{-1/2}; the
    exponent is checked by regression on quadrature norms and the integral
    against 2 C sqrt(T).
    """
    if k < dim + 1:
        raise HypothesisViolationError(f"k must be >= d + 1 = {dim + 1}, got {k}")
    if horizon <= 0:
        raise InvalidArgumentError(f"horizon must be positive, got {horizon}")
    k_prime = conjugate_exponent(k)
    l1_norms = [GaussianDensity(dim, s).lq_norm_quadrature(1.0) for s in REGRESSION_TIMES]
    if math.isinf(k):
        # k' = 1: every norm is 1, the integrand is constant
        return InequalityReport.from_samples(
            "density_integrability",
            [max(abs(v - 1.0) for v in l1_norms)],
            [INTEGRAL_TOLERANCE],
            details={"exponent": 0.0, "integral": horizon, "closed_form": horizon, "l1_norms": l1_norms},
        )

    power = k / dim
    quadrature_values = [
        GaussianDensity(dim, s).lq_norm_quadrature(k_prime) ** power for s in REGRESSION_TIMES
    ]
    slope = loglog_slope(np.array(REGRESSION_TIMES), np.array(quadrature_values))
    constant = GaussianDensity(dim, 1.0).lq_norm(k_prime) ** power
    closed_form = 2.0 * constant * math.sqrt(horizon)
    # s = u^2 removes the endpoint singularity
    integral, _ = integrate.quad(
        lambda u: 2.0 * u * GaussianDensity(dim, u * u).lq_norm(k_prime) ** power if u > 0 else 2.0 * constant,
        0.0,
        math.sqrt(horizon),
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    return InequalityReport.from_samples(
        "density_integrability",
        [abs(slope + 0.5), abs(integral - closed_form)],
        [SLOPE_TOLERANCE, INTEGRAL_TOLERANCE * closed_form],
        details={
            "exponent": _time_exponent(k, dim) * power,
            "slope": slope,
            "integral": integral,
            "closed_form": closed_form,
            "constant": constant,
            "l1_norms": l1_norms,
        },
    )


def joint_integrability_check(
    k: float,
    alpha: int,
    dim: int,
    horizon: float,
    q_offset: float = 0.0,
    enforce_hypothesis: bool = True,
) -> InequalityReport:
    """int_0^T ||p(s)||^alpha_{L^{k'}} ||q(s)||_{L^{k'}} ds < inf for two Gaussian flows.

    ``q`` starts ``q_offset`` earlier than ``p``, so its norm is evaluated at
    s + q_offset. With ``enforce_hypothesis=False`` a violating (k, alpha) is
    evaluated and the report fails when the integrand power at 0 is <= -1.
    """
    if alpha < 0:
        raise InvalidArgumentError(f"alpha must be >= 0, got {alpha}")
    if q_offset < 0:
        raise InvalidArgumentError(f"q_offset must be >= 0, got {q_offset}")
    required = max(dim + 1, dim * (alpha + 1))
    if enforce_hypothesis and k < required:
        raise HypothesisViolationError(f"k must be >= max(d + 1, d (alpha + 1)) = {required}, got {k}")
    k_prime = conjugate_exponent(k)
    exponent = _time_exponent(k, dim)
    power = alpha * exponent + (exponent if q_offset == 0 else 0.0)

    def integrand(s: float) -> float:
        p_norm = GaussianDensity(dim, s).lq_norm(k_prime)
        q_norm = GaussianDensity(dim, s + q_offset).lq_norm(k_prime)
        return p_norm**alpha * q_norm

    details = {"power": power, "required_k": required, "alpha": alpha, "k": k}
    if power <= -1.0:
        cutoffs = [10.0**-j for j in range(2, 7)]
        partial = [integrate.quad(integrand, eps, horizon, limit=200)[0] for eps in cutoffs]
        details.update({"cutoffs": cutoffs, "partial_integrals": partial})
        logger.info("integrand power %g <= -1: integral diverges", power)
        return InequalityReport(
            name="joint_integrability",
            samples=np.column_stack([partial, np.full(len(partial), np.inf)]),
            max_ratio=math.nan,
            passed=False,
            notes=[f"integrand power {power:g} <= -1 near s = 0: not integrable"],
            details=details,
        )

    integral, _ = integrate.quad(integrand, 0.0, horizon, epsabs=0.0, epsrel=1e-10, limit=400)
    details["integral"] = integral
    if q_offset == 0:
        constant = integrand(1.0)
        closed_form = constant * horizon ** (power + 1.0) / (power + 1.0)
        details["closed_form"] = closed_form
        return InequalityReport.from_samples(
            "joint_integrability",
            [abs(integral - closed_form)],
            [INTEGRAL_TOLERANCE * closed_form],
            details=details,
        )
    return InequalityReport.from_samples(
        "joint_integrability", [integral], [integral], bounded=True, details=details
    )


# Bounds with exact constants


def contraction_check(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    m: EmpiricalMeasure,
    atol: float = 1e-9,
    assignment_cap: int = ASSIGNMENT_CAP,
    quantile_cap: int = QUANTILE_CAP,
    transport_cap: int = TRANSPORT_CAP,
    atom_cap: int = CONVOLUTION_ATOM_CAP,
) -> InequalityReport:
    """W2(mu * m, nu * m) <= W2(mu, nu) on exact finite convolutions."""
    caps = {"assignment_cap": assignment_cap, "quantile_cap": quantile_cap, "transport_cap": transport_cap}
    lhs = wasserstein2(convolve_measures(mu, m, atom_cap), convolve_measures(nu, m, atom_cap), **caps)
    rhs = wasserstein2(mu, nu, **caps)
    return InequalityReport.from_samples("contraction", [lhs], [rhs], atol=atol)


def mollify_convergence_check(
    mu: EmpiricalMeasure,
    n_list: list[int],
    nodes_per_axis: int = 3,
    method: str = "nodes",
    seed: int = 0,
    atol: float = 1e-12,
    quantile_cap: int = QUANTILE_CAP,
    atom_cap: int = MOLLIFIED_ATOM_CAP,
) -> InequalityReport:
    """W2(mu * rho_n, mu) <= 1/n for each n, and the values do not increase with n.

    ``method`` is ``"nodes"`` (deterministic node expansion) or ``"matched"``
    (one rho_n perturbation per atom). Matched draws reuse one stream for every
    n, so the perturbations at n are the unit draws scaled by 1/n.
    """
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidArgumentError(f"n_list must be nonempty and increasing, got {n_list}")
    if method not in ("nodes", "matched"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    values = []
    for n in n_list:
        smoothed = mollify(mu, mollifier_make(n, mu.dim))
        if method == "nodes":
            approx = smoothed.node_expansion(nodes_per_axis, atom_cap)
        else:
            approx = smoothed.sample_matched(stream(seed, 0, SAMPLING_TAG))
        values.append(
            wasserstein2(approx, mu, quantile_cap=quantile_cap, transport_cap=max(TRANSPORT_CAP, approx.size))
        )
    bounds = [1.0 / n for n in n_list]
    nonincreasing = all(b <= a + atol for a, b in zip(values, values[1:]))
    if not nonincreasing:
        logger.warning("mollifier distances %s increase with n", values)
    # each value against its 1/n bound, then each value against its predecessor
    return InequalityReport.from_samples(
        "mollify_convergence",
        values + values[1:],
        bounds + values[:-1],
        atol=atol,
        details={"n": list(n_list), "values": values, "method": method, "nonincreasing": nonincreasing},
    )


@dataclass(frozen=True)
class GriddedField:
    """Samples of a compactly supported field on a regular grid of spacing ``spacing``."""

    values: np.ndarray
    spacing: float

    def __post_init__(self) -> None:
        if self.spacing <= 0:
            raise InvalidArgumentError(f"spacing must be positive, got {self.spacing}")

    @property
    def dim(self) -> int:
        return np.ndim(self.values)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def lp_norm(self, p: float) -> float:
        return float((np.sum(np.abs(self.values) ** p) * self.cell_volume) ** (1.0 / p))


def lp_convolution_check(f: GriddedField, g: GriddedField, p_exp: float, rtol: float = 1e-6) -> InequalityReport:
    """||f * g||_p <= ||f||_p ||g||_1 and ||f * mu||_p <= ||f||_p with mu = |g| normalized."""
    if p_exp < 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p_exp}")
    if f.dim != g.dim or not math.isclose(f.spacing, g.spacing, rel_tol=1e-12):
        raise InvalidArgumentError("fields live on different grids")
    conv = GriddedField(signal.convolve(f.values, g.values, mode="full") * f.cell_volume, f.spacing)
    mass = np.abs(g.values)
    if not np.any(mass > 0):
        raise InvalidArgumentError("g must not vanish identically")
    measure_weights = mass / np.sum(mass)
    smoothed = GriddedField(signal.convolve(f.values, measure_weights, mode="full"), f.spacing)
    lhs = [conv.lp_norm(p_exp), smoothed.lp_norm(p_exp)]
    rhs = [f.lp_norm(p_exp) * g.lp_norm(1.0), f.lp_norm(p_exp)]
    return InequalityReport.from_samples(
        "lp_convolution", lhs, rhs, rtol=rtol, details={"p": p_exp, "checks": ["young", "measure"]}
    )
