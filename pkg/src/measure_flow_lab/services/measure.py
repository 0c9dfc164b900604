"""Empirical-measure calculus: W2, mollification, density norms and the d_k distance."""

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import ot
from scipy import integrate, special
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from measure_flow_lab.core.errors import (
    CapacityExceededError,
    InvalidArgumentError,
    NumericFailureError,
)
from measure_flow_lab.core.models import EmpiricalMeasure
from measure_flow_lab.services.process import uniform_ball
from measure_flow_lab.utils.quadrature import cube_rule, integrate_over_balls

logger = logging.getLogger(__name__)

ASSIGNMENT_CAP = 512
QUANTILE_CAP = 100_000
TRANSPORT_CAP = 512
CONVOLUTION_ATOM_CAP = 1_000_000
MOLLIFIED_ATOM_CAP = 1_000_000
EMD_MAX_ITER = 10_000_000


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1}; 2 for dim = 1."""
    return 2.0 * math.pi ** (dim / 2.0) / special.gamma(dim / 2.0)


def bump(scaled_sq: np.ndarray, power: float = 1.0) -> np.ndarray:
    """exp(-power / (1 - s^2)) for s^2 < 1, else 0, given s^2."""
    scaled_sq = np.asarray(scaled_sq, dtype=float)
    out = np.zeros_like(scaled_sq)
    inside = scaled_sq < 1.0
    out[inside] = np.exp(-power / (1.0 - scaled_sq[inside]))
    return out


def conjugate_exponent(k: float) -> float:
    """k' with 1/k + 1/k' = 1; k = inf gives 1."""
    if math.isinf(k):
        return 1.0
    if k <= 1:
        raise InvalidArgumentError(f"exponent must exceed 1, got {k}")
    return k / (k - 1.0)


def _radial_integral(dim: int, power: float) -> float:
    value, error = integrate.quad(
        lambda s: s ** (dim - 1) * math.exp(-power / (1.0 - s * s)) if s < 1.0 else 0.0,
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    if not math.isfinite(value) or value <= 0 or error > 1e-10 * value:
        raise NumericFailureError(
            f"radial bump quadrature did not converge (value={value!r}, error={error!r})"
        )
    return value


@dataclass(frozen=True)
class Mollifier:
    """rho_n(x) = c_n exp(-1 / (1 - |n x|^2)) on |x| < 1/n, zero elsewhere."""

    index: int
    dim: int
    normalization: float

    @property
    def radius(self) -> float:
        return 1.0 / self.index

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        return self.normalization * bump(np.sum((self.index * x) ** 2, axis=1))

    def density_at_distance(self, r: np.ndarray) -> np.ndarray:
        return self.normalization * bump((self.index * np.asarray(r, dtype=float)) ** 2)

    def lq_norm(self, q: float) -> float:
        """||rho_n||_{L^q} by radial quadrature; q = inf gives the peak value."""
        if math.isinf(q):
            return self.normalization * math.exp(-1.0)
        if q < 1:
            raise InvalidArgumentError(f"q must be >= 1, got {q}")
        integral = sphere_area(self.dim) * self.index ** (-self.dim) * _radial_integral(self.dim, q)
        return float((self.normalization**q * integral) ** (1.0 / q))

    def nodes(self, per_axis: int) -> EmpiricalMeasure:
        """Tensor Gauss-Legendre nodes on [-1/n, 1/n]^d weighted by rho_n, renormalized.

        The node set is symmetric under x -> -x.
        """
        if per_axis < 1:
            raise InvalidArgumentError(f"per_axis must be >= 1, got {per_axis}")
        unit_nodes, unit_weights = cube_rule(per_axis, self.dim)
        points = (2.0 * unit_nodes - 1.0) * self.radius
        weights = unit_weights * self.density(points)
        keep = weights > 0
        if not np.any(keep):
            raise NumericFailureError(f"no mollifier node has positive weight (per_axis={per_axis})")
        weights = weights[keep]
        return EmpiricalMeasure(points=points[keep], weights=weights / np.sum(weights))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Rejection sampling from rho_n with uniform-ball proposals."""
        accepted = np.empty((0, self.dim))
        while len(accepted) < size:
            proposal = uniform_ball(rng, 2 * (size - len(accepted)) + 8, self.dim)
            # bump peaks at exp(-1) in the centre
            ratio = bump(np.sum(proposal**2, axis=1)) * math.e
            keep = rng.random(len(proposal)) < ratio
            accepted = np.concatenate([accepted, proposal[keep]])
        return accepted[:size] * self.radius


def mollifier_make(n: int, dim: int) -> Mollifier:
    """Build rho_n on R^dim with c_n from deterministic radial quadrature.

    Raises:
        InvalidArgumentError: If n or dim is below 1
        NumericFailureError: If the normalizing quadrature does not converge
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"mollifier index must be a positive integer, got {n}")
    if int(dim) != dim or dim < 1:
        raise InvalidArgumentError(f"dim must be a positive integer, got {dim}")
    n, dim = int(n), int(dim)
    normalization = n**dim / (sphere_area(dim) * _radial_integral(dim, 1.0))
    return Mollifier(index=n, dim=dim, normalization=normalization)


# Wasserstein-2


def _quantile_cost(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    order_x = np.argsort(mu.points[:, 0], kind="stable")
    order_y = np.argsort(nu.points[:, 0], kind="stable")
    xs, ys = mu.points[order_x, 0], nu.points[order_y, 0]
    cdf_x = np.cumsum(mu.weights[order_x])
    cdf_y = np.cumsum(nu.weights[order_y])
    levels = np.unique(np.concatenate([cdf_x, cdf_y]))
    levels = levels[levels > 0]
    levels[-1] = 1.0
    lower = np.concatenate([[0.0], levels[:-1]])
    mids = 0.5 * (lower + levels)
    ix = np.minimum(np.searchsorted(cdf_x, mids, side="left"), len(xs) - 1)
    iy = np.minimum(np.searchsorted(cdf_y, mids, side="left"), len(ys) - 1)
    return float(np.sum((levels - lower) * (xs[ix] - ys[iy]) ** 2))


def _is_uniform(measure: EmpiricalMeasure) -> bool:
    return bool(np.all(np.abs(measure.weights - 1.0 / measure.size) <= 1e-15))


def wasserstein2(
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    assignment_cap: int = ASSIGNMENT_CAP,
    quantile_cap: int = QUANTILE_CAP,
    transport_cap: int = TRANSPORT_CAP,
) -> float:
    """Exact W2 between two empirical measures.

    d = 1 uses the sorted quantile coupling; equal-size uniform clouds in d >= 2
    use optimal assignment; anything else goes through exact network-simplex
    transport.

    Raises:
        InvalidArgumentError: On dimension mismatch
        CapacityExceededError: If a measure is larger than the exact solver's cap
        NumericFailureError: If the transport solver stops early
    """
    if mu.dim != nu.dim:
        raise InvalidArgumentError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    largest = max(mu.size, nu.size)
    if mu.dim == 1:
        if largest > quantile_cap:
            raise CapacityExceededError(
                f"{largest} atoms exceed the quantile-coupling cap {quantile_cap}; subsample first"
            )
        cost = _quantile_cost(mu, nu)
    elif mu.size == nu.size and _is_uniform(mu) and _is_uniform(nu):
        if largest > assignment_cap:
            raise CapacityExceededError(
                f"{largest} atoms exceed the assignment cap {assignment_cap}; subsample first"
            )
        matrix = cdist(mu.points, nu.points, metric="sqeuclidean")
        rows, cols = linear_sum_assignment(matrix)
        cost = float(np.sum(matrix[rows, cols])) / mu.size
    else:
        if largest > transport_cap:
            raise CapacityExceededError(
                f"{largest} atoms exceed the transport cap {transport_cap}; subsample first"
            )
        matrix = cdist(mu.points, nu.points, metric="sqeuclidean")
        a = np.ascontiguousarray(mu.weights, dtype=np.float64)
        b = np.ascontiguousarray(nu.weights, dtype=np.float64)
        cost, log = ot.emd2(a, b, matrix, numItermax=EMD_MAX_ITER, log=True)
        if log.get("warning"):
            raise NumericFailureError(f"exact transport did not converge: {log['warning']}")
        cost = float(cost)
    return math.sqrt(max(cost, 0.0))


# Convolutions and mollified measures


def convolve_measures(
    mu: EmpiricalMeasure, m: EmpiricalMeasure, atom_cap: int = CONVOLUTION_ATOM_CAP
) -> EmpiricalMeasure:
    """Exact mu * m: all pairwise sums of atoms with product weights."""
    if mu.dim != m.dim:
        raise InvalidArgumentError(f"dimension mismatch: {mu.dim} vs {m.dim}")
    count = mu.size * m.size
    if count > atom_cap:
        raise CapacityExceededError(f"convolution needs {count} atoms, cap is {atom_cap}")
    points = (mu.points[:, None, :] + m.points[None, :, :]).reshape(-1, mu.dim)
    weights = np.outer(mu.weights, m.weights).reshape(-1)
    return EmpiricalMeasure(points=points, weights=weights)


@dataclass(frozen=True)
class MollifiedMeasure:
    """mu * rho_n with analytic density x -> sum_j w_j rho_n(x - x_j)."""

    base: EmpiricalMeasure
    mollifier: Mollifier

    def __post_init__(self) -> None:
        if self.base.dim != self.mollifier.dim:
            raise InvalidArgumentError(
                f"measure dimension {self.base.dim} does not match mollifier dimension {self.mollifier.dim}"
            )

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def radius(self) -> float:
        return self.mollifier.radius

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.base.points)

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        pairs = cKDTree(x).sparse_distance_matrix(self._tree, self.radius, output_type="ndarray")
        if len(pairs) == 0:
            return np.zeros(len(x))
        contributions = self.base.weights[pairs["j"]] * self.mollifier.density_at_distance(pairs["v"])
        return np.bincount(pairs["i"], weights=contributions, minlength=len(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw an atom by weight, then add an independent rho_n perturbation."""
        atoms = rng.choice(self.base.size, size=size, p=self.base.weights)
        return self.base.points[atoms] + self.mollifier.sample(rng, size)

    def sample_matched(self, rng: np.random.Generator) -> EmpiricalMeasure:
        """One perturbation per atom, weights kept; W2 to the base is at most 1/n."""
        return EmpiricalMeasure(
            points=self.base.points + self.mollifier.sample(rng, self.base.size),
            weights=self.base.weights,
        )

    def node_expansion(self, per_axis: int, atom_cap: int = MOLLIFIED_ATOM_CAP) -> EmpiricalMeasure:
        """Deterministic realization of mu * rho_n on the mollifier's quadrature nodes."""
        return convolve_measures(self.base, self.mollifier.nodes(per_axis), atom_cap)


def mollify(mu: EmpiricalMeasure, mollifier: Mollifier) -> MollifiedMeasure:
    return MollifiedMeasure(base=mu, mollifier=mollifier)


def density_norm(measure: MollifiedMeasure, q: float, rel_tol: float = 1e-6) -> float:
    """||d(mu * rho_n)/dx||_{L^q} by quadrature over the union of atom balls."""
    if not math.isfinite(q) or q < 1:
        raise InvalidArgumentError(f"q must be finite and >= 1, got {q}")
    integral = integrate_over_balls(
        lambda x: measure.density(x) ** q, measure.base.points, measure.radius, rel_tol
    )
    return float(integral ** (1.0 / q))


def dk_distance(
    mu: MollifiedMeasure, nu: MollifiedMeasure, k: float, rel_tol: float = 1e-6
) -> float:
    """d_k(mu, nu) = ||dmu/dx - dnu/dx||_{L^{k'}} with k' = k / (k - 1).

    Raises:
        InvalidArgumentError: On dimension mismatch or k < d + 1
        NumericFailureError: If the quadrature does not converge
    """
    if mu.dim != nu.dim:
        raise InvalidArgumentError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if k < mu.dim + 1:
        raise InvalidArgumentError(f"d_k needs k >= d + 1 = {mu.dim + 1}, got {k}")
    k_prime = conjugate_exponent(k)
    centers = np.concatenate([mu.base.points, nu.base.points])
    radius = max(mu.radius, nu.radius)
    integral = integrate_over_balls(
        lambda x: np.abs(mu.density(x) - nu.density(x)) ** k_prime, centers, radius, rel_tol
    )
    return float(integral ** (1.0 / k_prime))
