"""Measure functionals with closed-form linear derivatives.

A measure functional exposes u(mu), delta u / delta m (mu)(v) and its first and
second v-derivatives. Extended functionals add time and space arguments.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError, NumericFailureError
from measure_flow_lab.core.interfaces import (
    IExtendedFunctional,
    IMeasureFunctional,
    IOuterField,
    IPairField,
    IScalarField,
)
from measure_flow_lab.core.models import EmpiricalMeasure, ExtendedMetadata, FunctionalMetadata
from measure_flow_lab.services.fields import SquareNorm
from measure_flow_lab.services.measure import MOLLIFIED_ATOM_CAP, Mollifier, convolve_measures
from measure_flow_lab.utils.quadrature import unit_rule
from measure_flow_lab.utils.stats import weighted_mean

logger = logging.getLogger(__name__)

CHUNK_ELEMENTS = 1 << 22


def _checked(values: np.ndarray, term: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericFailureError("functional evaluation is not finite", term=term)
    return values


def _chunks(total: int, per_item: int) -> list[slice]:
    size = max(1, CHUNK_ELEMENTS // max(1, per_item))
    return [slice(start, min(start + size, total)) for start in range(0, total, size)]


def _points(v: np.ndarray, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v.reshape(-1, dim)
    if v.shape[1] != dim:
        raise InvalidArgumentError(f"expected points of dimension {dim}, got {v.shape[1]}")
    return v


def _require_dim(functional_dim: int, measure: EmpiricalMeasure) -> None:
    if measure.dim != functional_dim:
        raise InvalidArgumentError(
            f"functional has dimension {functional_dim}, measure has {measure.dim}"
        )


# Measure functionals u(mu)


@dataclass(frozen=True)
class LinearFunctional:
    """u(mu) = int g dmu, delta u / delta m = g."""

    dim: int
    g: IScalarField
    metadata: FunctionalMetadata

    def value(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        return float(weighted_mean(_checked(self.g.value(measure.points), "value"), measure.weights))

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return _checked(self.g.value(_points(v, self.dim)), "lin_deriv")

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return _checked(self.g.grad(_points(v, self.dim)), "lin_deriv_grad")

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return _checked(self.g.hess(_points(v, self.dim)), "lin_deriv_hess")


def make_linear(g: IScalarField, dim: int, name: str | None = None) -> LinearFunctional:
    metadata = FunctionalMetadata(
        name=name or f"linear[{g.name}]",
        sobolev_exponent=dim + 1,
        growth_exponent=0,
        hypothesis_certified=g.sobolev_certified,
        measure_degree=1,
    )
    return LinearFunctional(dim=dim, g=g, metadata=metadata)


def second_moment(dim: int) -> LinearFunctional:
    """u(mu) = int |x|^2 dmu."""
    return make_linear(SquareNorm(), dim, name="second_moment")


@dataclass(frozen=True)
class QuadraticFunctional:
    """u(mu) = int int g(x, y) dmu(x) dmu(y).

    delta u / delta m (mu)(v) = int g(v, y) dmu(y) + int g(y, v) dmu(y).
    """

    dim: int
    g: IPairField
    metadata: FunctionalMetadata

    def value(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        x, w = measure.points, measure.weights
        total = 0.0
        for rows in _chunks(len(x), len(x)):
            total += float(w[rows] @ _checked(self.g.value(x[rows], x), "value") @ w)
        return total

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(len(v))
        for rows in _chunks(len(v), len(x)):
            out[rows] = self.g.value(v[rows], x) @ w + w @ self.g.value(x, v[rows])
        return _checked(out, "lin_deriv")

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(v.shape)
        for rows in _chunks(len(v), len(x) * self.dim):
            out[rows] = np.einsum("qjd,j->qd", self.g.grad_x(v[rows], x), w) + np.einsum(
                "jqd,j->qd", self.g.grad_y(x, v[rows]), w
            )
        return _checked(out, "lin_deriv_grad")

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(v.shape + (self.dim,))
        for rows in _chunks(len(v), len(x) * self.dim**2):
            out[rows] = np.einsum("qjde,j->qde", self.g.hess_xx(v[rows], x), w) + np.einsum(
                "jqde,j->qde", self.g.hess_yy(x, v[rows]), w
            )
        return _checked(out, "lin_deriv_hess")


def make_quadratic(g: IPairField, dim: int, name: str | None = None) -> QuadraticFunctional:
    metadata = FunctionalMetadata(
        name=name or f"quadratic[{g.name}]",
        sobolev_exponent=2 * dim,
        growth_exponent=1,
        distance="dk",
        hypothesis_certified=g.sobolev_certified,
        measure_degree=2,
    )
    return QuadraticFunctional(dim=dim, g=g, metadata=metadata)


@dataclass(frozen=True)
class ConvolutionFunctional:
    """u(mu) = int f * mu dmu with delta u / delta m (mu)(v) = f * mu (v) + f~ * mu (v)."""

    dim: int
    f: IScalarField
    metadata: FunctionalMetadata

    def _diffs(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        return v[:, None, :] - x[None, :, :]

    def value(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        x, w = measure.points, measure.weights
        total = 0.0
        for rows in _chunks(len(x), len(x)):
            total += float(w[rows] @ _checked(self.f.value(self._diffs(x[rows], x)), "value") @ w)
        return total

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(len(v))
        for rows in _chunks(len(v), len(x) * self.dim):
            diff = self._diffs(v[rows], x)
            out[rows] = (self.f.value(diff) + self.f.value(-diff)) @ w
        return _checked(out, "lin_deriv")

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(v.shape)
        for rows in _chunks(len(v), len(x) * self.dim):
            diff = self._diffs(v[rows], x)
            out[rows] = np.einsum("qjd,j->qd", self.f.grad(diff) - self.f.grad(-diff), w)
        return _checked(out, "lin_deriv_grad")

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        x, w = measure.points, measure.weights
        out = np.empty(v.shape + (self.dim,))
        for rows in _chunks(len(v), len(x) * self.dim**2):
            diff = self._diffs(v[rows], x)
            out[rows] = np.einsum("qjde,j->qde", self.f.hess(diff) + self.f.hess(-diff), w)
        return _checked(out, "lin_deriv_hess")


def make_convolution(f: IScalarField, dim: int, name: str | None = None) -> ConvolutionFunctional:
    metadata = FunctionalMetadata(
        name=name or f"convolution[{f.name}]",
        sobolev_exponent=dim + 1,
        growth_exponent=1,
        hypothesis_certified=f.sobolev_certified,
        measure_degree=2,
    )
    return ConvolutionFunctional(dim=dim, f=f, metadata=metadata)


@dataclass(frozen=True)
class MeanSquared:
    """u(mu) = |int x dmu|^2; delta u / delta m (mu)(v) = 2 m . v, zero v-Hessian."""

    dim: int
    metadata: FunctionalMetadata = field(
        default_factory=lambda: FunctionalMetadata(
            name="mean_squared", sobolev_exponent=2, growth_exponent=1, measure_degree=2
        )
    )

    def value(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        mean = measure.mean()
        return float(mean @ mean)

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return 2.0 * _points(v, self.dim) @ measure.mean()

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        return np.broadcast_to(2.0 * measure.mean(), v.shape).copy()

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        return np.zeros(v.shape + (self.dim,))


@dataclass(frozen=True)
class ConstantFunctional:
    """u(mu) = level; every derivative vanishes."""

    dim: int
    level: float = 0.0
    metadata: FunctionalMetadata = field(
        default_factory=lambda: FunctionalMetadata(
            name="constant",
            sobolev_exponent=2,
            growth_exponent=0,
            hypothesis_certified=True,
            measure_degree=0,
        )
    )

    def value(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        return float(self.level)

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return np.zeros(len(_points(v, self.dim)))

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        return np.zeros(_points(v, self.dim).shape)

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        return np.zeros(v.shape + (self.dim,))


@dataclass(frozen=True)
class MollifiedFunctional:
    """u^n(mu) = u(mu * rho_n) with delta u^n / delta m (mu) = delta u / delta m (mu * rho_n) * rho_n.

    Both convolutions use the same deterministic rho_n node set.
    """

    base: IMeasureFunctional
    mollifier: Mollifier
    nodes: EmpiricalMeasure
    atom_cap: int = MOLLIFIED_ATOM_CAP

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def metadata(self) -> FunctionalMetadata:
        return replace(
            self.base.metadata, name=f"mollified[{self.base.metadata.name},n={self.mollifier.index}]"
        )

    def smoothed(self, measure: EmpiricalMeasure) -> EmpiricalMeasure:
        """The node expansion of mu * rho_n."""
        return convolve_measures(measure, self.nodes, self.atom_cap)

    def value(self, measure: EmpiricalMeasure) -> float:
        return self.base.value(self.smoothed(measure))

    def _shifted(self, v: np.ndarray) -> np.ndarray:
        v = _points(v, self.dim)
        return (v[:, None, :] - self.nodes.points[None, :, :]).reshape(-1, self.dim)

    def _average(self, values: np.ndarray, q: int) -> np.ndarray:
        values = values.reshape((q, self.nodes.size) + values.shape[1:])
        return np.tensordot(self.nodes.weights, values, axes=([0], [1]))

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        q = len(_points(v, self.dim))
        return self._average(self.base.lin_deriv(self.smoothed(measure), self._shifted(v)), q)

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        q = len(_points(v, self.dim))
        return self._average(self.base.lin_deriv_grad(self.smoothed(measure), self._shifted(v)), q)

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        q = len(_points(v, self.dim))
        return self._average(self.base.lin_deriv_hess(self.smoothed(measure), self._shifted(v)), q)


def mollified(
    functional: IMeasureFunctional,
    mollifier: Mollifier,
    mc_nodes: int = 3,
    atom_cap: int = MOLLIFIED_ATOM_CAP,
) -> MollifiedFunctional:
    """Wrap ``functional`` as u^n with ``mc_nodes`` Gauss-Legendre nodes per axis."""
    if mollifier.dim != functional.dim:
        raise InvalidArgumentError(
            f"mollifier dimension {mollifier.dim} does not match functional dimension {functional.dim}"
        )
    if mc_nodes < 1:
        raise InvalidArgumentError(f"mc_nodes must be >= 1, got {mc_nodes}")
    return MollifiedFunctional(
        base=functional, mollifier=mollifier, nodes=mollifier.nodes(mc_nodes), atom_cap=atom_cap
    )


# Extended functionals u(t, x, mu)


def _zeros_like_space(x: np.ndarray, hess: bool = False) -> np.ndarray:
    return np.zeros(x.shape + (x.shape[1],)) if hess else np.zeros(x.shape)


@dataclass(frozen=True)
class CompositeExtended:
    """u(x, mu) = F(x, int g dmu); delta u / delta m (x, mu)(v) = g(v) d_y F(x, int g dmu)."""

    dim: int
    outer: IOuterField
    g: IScalarField
    metadata: ExtendedMetadata

    def _inner(self, measure: EmpiricalMeasure) -> float:
        _require_dim(self.dim, measure)
        return float(measure.weights @ _checked(self.g.value(measure.points), "inner"))

    def value(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _checked(self.outer.value(_points(x, self.dim), self._inner(measure)), "value")

    def time_deriv(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return np.zeros(len(_points(x, self.dim)))

    def space_grad(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _checked(self.outer.grad_x(_points(x, self.dim), self._inner(measure)), "space_grad")

    def space_hess(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _checked(self.outer.hess_xx(_points(x, self.dim), self._inner(measure)), "space_hess")

    def _d_y(self, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _checked(self.outer.d_y(_points(x, self.dim), self._inner(measure)), "d_y")

    def lin_deriv(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        gv = self.g.value(_points(v, self.dim))
        return _checked(np.outer(self._d_y(x, measure), gv), "lin_deriv")

    def lin_deriv_grad(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        grad = self.g.grad(_points(v, self.dim))
        return _checked(self._d_y(x, measure)[:, None, None] * grad[None], "lin_deriv_grad")

    def lin_deriv_hess(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        hess = self.g.hess(_points(v, self.dim))
        return _checked(self._d_y(x, measure)[:, None, None, None] * hess[None], "lin_deriv_hess")


def make_composite(outer: IOuterField, g: IScalarField, dim: int) -> CompositeExtended:
    metadata = ExtendedMetadata(
        name=f"composite[{outer.name},{g.name}]",
        space_exponent=dim + 1,
        derivative_exponent=dim + 1,
        hypothesis_certified=g.sobolev_certified,
    )
    return CompositeExtended(dim=dim, outer=outer, g=g, metadata=metadata)


@dataclass(frozen=True)
class BilinearExtended:
    """u(x, mu) = int g(x, y) dmu(y); delta u / delta m (x, mu)(v) = g(x, v)."""

    dim: int
    g: IPairField
    metadata: ExtendedMetadata

    def value(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        _require_dim(self.dim, measure)
        return _checked(self.g.value(_points(x, self.dim), measure.points) @ measure.weights, "value")

    def time_deriv(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return np.zeros(len(_points(x, self.dim)))

    def space_grad(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        x = _points(x, self.dim)
        out = np.empty(x.shape)
        for rows in _chunks(len(x), measure.size * self.dim):
            out[rows] = np.einsum("pjd,j->pd", self.g.grad_x(x[rows], measure.points), measure.weights)
        return _checked(out, "space_grad")

    def space_hess(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        x = _points(x, self.dim)
        out = np.empty(x.shape + (self.dim,))
        for rows in _chunks(len(x), measure.size * self.dim**2):
            out[rows] = np.einsum(
                "pjde,j->pde", self.g.hess_xx(x[rows], measure.points), measure.weights
            )
        return _checked(out, "space_hess")

    def lin_deriv(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return _checked(self.g.value(_points(x, self.dim), _points(v, self.dim)), "lin_deriv")

    def lin_deriv_grad(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return _checked(self.g.grad_y(_points(x, self.dim), _points(v, self.dim)), "lin_deriv_grad")

    def lin_deriv_hess(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return _checked(self.g.hess_yy(_points(x, self.dim), _points(v, self.dim)), "lin_deriv_hess")


def make_bilinear(g: IPairField, dim: int) -> BilinearExtended:
    metadata = ExtendedMetadata(
        name=f"bilinear[{g.name}]",
        space_exponent=2 * dim,
        derivative_exponent=2 * dim,
        space_growth=1,
        distance="dk",
        hypothesis_certified=g.sobolev_certified,
    )
    return BilinearExtended(dim=dim, g=g, metadata=metadata)


@dataclass(frozen=True)
class LiftedExtended:
    """u(t, x, mu) = F(mu) for a measure functional F."""

    base: IMeasureFunctional

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def metadata(self) -> ExtendedMetadata:
        meta = self.base.metadata
        return ExtendedMetadata(
            name=f"lift[{meta.name}]",
            space_exponent=meta.sobolev_exponent,
            derivative_exponent=meta.sobolev_exponent,
            derivative_growth=meta.growth_exponent,
            distance=meta.distance,
            hypothesis_certified=meta.hypothesis_certified,
        )

    def value(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return np.full(len(_points(x, self.dim)), self.base.value(measure))

    def time_deriv(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return np.zeros(len(_points(x, self.dim)))

    def space_grad(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _zeros_like_space(_points(x, self.dim))

    def space_hess(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return _zeros_like_space(_points(x, self.dim), hess=True)

    def _broadcast(self, x: np.ndarray, values: np.ndarray) -> np.ndarray:
        p = len(_points(x, self.dim))
        return np.broadcast_to(values[None], (p,) + values.shape).copy()

    def lin_deriv(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return self._broadcast(x, self.base.lin_deriv(measure, v))

    def lin_deriv_grad(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return self._broadcast(x, self.base.lin_deriv_grad(measure, v))

    def lin_deriv_hess(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        return self._broadcast(x, self.base.lin_deriv_hess(measure, v))


def lift(functional: IMeasureFunctional) -> LiftedExtended:
    return LiftedExtended(base=functional)


@dataclass(frozen=True)
class TimeRateExtended:
    """u(t, x, mu) = base(t, x, mu) + rate * t."""

    base: IExtendedFunctional
    rate: float

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def metadata(self) -> ExtendedMetadata:
        return replace(self.base.metadata, name=f"{self.base.metadata.name}+{self.rate}t")

    def value(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return self.base.value(t, x, measure) + self.rate * t

    def time_deriv(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return self.base.time_deriv(t, x, measure) + self.rate

    def space_grad(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return self.base.space_grad(t, x, measure)

    def space_hess(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        return self.base.space_hess(t, x, measure)

    def lin_deriv(self, t, x, measure, v):
        return self.base.lin_deriv(t, x, measure, v)

    def lin_deriv_grad(self, t, x, measure, v):
        return self.base.lin_deriv_grad(t, x, measure, v)

    def lin_deriv_hess(self, t, x, measure, v):
        return self.base.lin_deriv_hess(t, x, measure, v)


def with_time_rate(functional: IExtendedFunctional, rate: float) -> TimeRateExtended:
    return TimeRateExtended(base=functional, rate=float(rate))


# Oracles


def default_quadrature_order(functional: IMeasureFunctional) -> int:
    """Gauss-Legendre nodes integrating a degree (measure_degree - 1) polynomial exactly."""
    return max(2, math.ceil(functional.metadata.measure_degree / 2))


def check_linear_derivative_identity(
    functional: IMeasureFunctional,
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    n_quad: int | None = None,
) -> float:
    """|u(mu) - u(nu) - int_0^1 int delta u / delta m (t mu + (1 - t) nu)(v) d(mu - nu)(v) dt|.

    The t-integral uses ``n_quad`` Gauss-Legendre nodes; the space integral is an
    exact finite sum.
    """
    if mu.dim != nu.dim or mu.dim != functional.dim:
        raise InvalidArgumentError("functional and measures must share one dimension")
    n_quad = default_quadrature_order(functional) if n_quad is None else n_quad
    if n_quad < 2:
        raise InvalidArgumentError(f"n_quad must be >= 2, got {n_quad}")
    nodes, weights = unit_rule(n_quad)
    integral = 0.0
    for t, weight in zip(nodes, weights):
        segment = mu.mixture(nu, float(t))
        inner = mu.weights @ functional.lin_deriv(segment, mu.points) - nu.weights @ functional.lin_deriv(
            segment, nu.points
        )
        integral += weight * inner
    return abs(functional.value(mu) - functional.value(nu) - integral)


def check_extended_linear_derivative_identity(
    functional: IExtendedFunctional,
    t: float,
    x: np.ndarray,
    mu: EmpiricalMeasure,
    nu: EmpiricalMeasure,
    n_quad: int = 4,
) -> float:
    """The same identity for u(t, x, .) at every row of ``x``; returns the largest residual."""
    if n_quad < 2:
        raise InvalidArgumentError(f"n_quad must be >= 2, got {n_quad}")
    x = _points(x, functional.dim)
    nodes, weights = unit_rule(n_quad)
    integral = np.zeros(len(x))
    for s, weight in zip(nodes, weights):
        segment = mu.mixture(nu, float(s))
        inner = functional.lin_deriv(t, x, segment, mu.points) @ mu.weights - functional.lin_deriv(
            t, x, segment, nu.points
        ) @ nu.weights
        integral += weight * inner
    lhs = functional.value(t, x, mu) - functional.value(t, x, nu)
    return float(np.max(np.abs(lhs - integral)))


def finite_difference_oracle(
    functional: IMeasureFunctional, measure: EmpiricalMeasure, v: np.ndarray, h: float = 1e-4
) -> tuple[np.ndarray, np.ndarray]:
    """Central differences of delta u / delta m (mu)(.) at each row of ``v``."""
    if h <= 0:
        raise InvalidArgumentError(f"h must be positive, got {h}")
    v = _points(v, functional.dim)
    d = functional.dim
    basis = np.eye(d) * h

    def f(points: np.ndarray) -> np.ndarray:
        return functional.lin_deriv(measure, points)

    grad = np.empty(v.shape)
    hess = np.empty(v.shape + (d,))
    for i in range(d):
        grad[:, i] = (f(v + basis[i]) - f(v - basis[i])) / (2 * h)
        for j in range(i, d):
            value = (
                f(v + basis[i] + basis[j])
                - f(v + basis[i] - basis[j])
                - f(v - basis[i] + basis[j])
                + f(v - basis[i] - basis[j])
            ) / (4 * h * h)
            hess[:, i, j] = value
            hess[:, j, i] = value
    return grad, hess
