"""Built-in fields with closed-form derivatives.

Scalar fields act on (N, d) batches, pair fields on all (P, Q) pairs of two
batches, outer fields on (P, d) points and a scalar second argument, and time
fields on (t, (N, d)).
"""

from dataclasses import dataclass

import numpy as np

from measure_flow_lab.core.interfaces import IScalarField


def _eye(x: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.eye(x.shape[-1]), x.shape[:-1] + (x.shape[-1], x.shape[-1]))


# Scalar fields g: R^d -> R


@dataclass(frozen=True)
class SquareNorm:
    """g(x) = |x|^2."""

    name: str = "square_norm"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.sum(x**2, axis=-1)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * x

    def hess(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * _eye(x)


@dataclass(frozen=True)
class Coordinate:
    """g(x) = x_index."""

    index: int = 0
    name: str = "coordinate"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.array(x[..., self.index], dtype=float)

    def grad(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        out[..., self.index] = 1.0
        return out

    def hess(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[-1],))


@dataclass(frozen=True)
class Affine:
    """g(x) = slope . x + offset, with ``slope`` broadcast over coordinates."""

    slope: float = 1.0
    offset: float = 0.0
    name: str = "affine"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.slope * np.sum(x, axis=-1) + self.offset

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape, float(self.slope))

    def hess(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[-1],))


@dataclass(frozen=True)
class GaussianBump:
    """g(x) = exp(-|x|^2 / (2 scale^2)); even and in every W^{1,k}."""

    scale: float = 1.0
    name: str = "gaussian"
    sobolev_certified: bool = True

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(x**2, axis=-1) / (2.0 * self.scale**2))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return -x / self.scale**2 * self.value(x)[..., None]

    def hess(self, x: np.ndarray) -> np.ndarray:
        s2 = self.scale**2
        outer = np.einsum("...i,...j->...ij", x, x) / s2**2
        return (outer - _eye(x) / s2) * self.value(x)[..., None, None]


@dataclass(frozen=True)
class Cosine:
    """g(x) = cos(frequency * sum(x))."""

    frequency: float = 1.0
    name: str = "cosine"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.cos(self.frequency * np.sum(x, axis=-1))

    def grad(self, x: np.ndarray) -> np.ndarray:
        s = -self.frequency * np.sin(self.frequency * np.sum(x, axis=-1))
        return np.broadcast_to(s[..., None], x.shape).copy()

    def hess(self, x: np.ndarray) -> np.ndarray:
        c = -(self.frequency**2) * np.cos(self.frequency * np.sum(x, axis=-1))
        ones = np.ones(x.shape + (x.shape[-1],))
        return c[..., None, None] * ones


@dataclass(frozen=True)
class Constant:
    """g(x) = level."""

    level: float = 0.0
    name: str = "constant"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[:-1], float(self.level))

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape, dtype=float)

    def hess(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[-1],))


# Pair fields g: R^d x R^d -> R, evaluated on (P, Q) grids


def _pairs(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return x[:, None, :], y[None, :, :]


@dataclass(frozen=True)
class DotProduct:
    """g(x, y) = x . y; outside W^{1,k}(R^{2d})."""

    name: str = "dot"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x @ y.T

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(y[None, :, :], (len(x),) + y.shape).copy()

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(x[:, None, :], (len(x), len(y), x.shape[1])).copy()

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = x.shape[1]
        return np.zeros((len(x), len(y), d, d))

    def hess_yy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.hess_xx(x, y)


@dataclass(frozen=True)
class GaussianPair:
    """g(x, y) = exp(-rate (|x|^2 + |y|^2))."""

    rate: float = 1.0
    name: str = "gaussian_pair"
    sobolev_certified: bool = True

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-self.rate * (np.sum(x**2, axis=1)[:, None] + np.sum(y**2, axis=1)[None, :]))

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xp, _ = _pairs(x, y)
        return -2.0 * self.rate * xp * self.value(x, y)[..., None]

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        _, yp = _pairs(x, y)
        return -2.0 * self.rate * yp * self.value(x, y)[..., None]

    def _hess(self, z: np.ndarray, g: np.ndarray) -> np.ndarray:
        outer = 4.0 * self.rate**2 * np.einsum("...i,...j->...ij", z, z)
        return (outer - 2.0 * self.rate * _eye(z)) * g[..., None, None]

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        g = self.value(x, y)
        xp = np.broadcast_to(x[:, None, :], g.shape + (x.shape[1],))
        return self._hess(xp, g)

    def hess_yy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        g = self.value(x, y)
        yp = np.broadcast_to(y[None, :, :], g.shape + (y.shape[1],))
        return self._hess(yp, g)


@dataclass(frozen=True)
class GaussianKernel:
    """g(x, y) = exp(-|x - y|^2 / (2 scale^2)); symmetric, translation invariant."""

    scale: float = 1.0
    name: str = "gaussian_kernel"
    sobolev_certified: bool = False

    def _diff(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x[:, None, :] - y[None, :, :]

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-np.sum(self._diff(x, y) ** 2, axis=-1) / (2.0 * self.scale**2))

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return -self._diff(x, y) / self.scale**2 * self.value(x, y)[..., None]

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return -self.grad_x(x, y)

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        diff = self._diff(x, y)
        s2 = self.scale**2
        outer = np.einsum("...i,...j->...ij", diff, diff) / s2**2
        return (outer - _eye(diff) / s2) * self.value(x, y)[..., None, None]

    def hess_yy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.hess_xx(x, y)


@dataclass(frozen=True)
class MixedPolynomial:
    """g(x, y) = x_1 * y_1^2; not symmetric in (x, y)."""

    name: str = "mixed"
    sobolev_certified: bool = False

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x[:, None, 0] * y[None, :, 0] ** 2

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros((len(x), len(y), x.shape[1]))
        out[..., 0] = np.broadcast_to(y[None, :, 0] ** 2, (len(x), len(y)))
        return out

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros((len(x), len(y), x.shape[1]))
        out[..., 0] = 2.0 * x[:, None, 0] * y[None, :, 0]
        return out

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = x.shape[1]
        return np.zeros((len(x), len(y), d, d))

    def hess_yy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = x.shape[1]
        out = np.zeros((len(x), len(y), d, d))
        out[..., 0, 0] = np.broadcast_to(2.0 * x[:, None, 0], (len(x), len(y)))
        return out


# Outer fields F: R^d x R -> R for composite functionals


@dataclass(frozen=True)
class IdentityY:
    """F(x, y) = y."""

    name: str = "identity_y"

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(y, x.shape[:1]).astype(float)

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape, dtype=float)

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[1],))

    def d_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.ones(x.shape[:1])


@dataclass(frozen=True)
class SquareY:
    """F(x, y) = y^2."""

    name: str = "square_y"

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.square(y), x.shape[:1]).astype(float)

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape, dtype=float)

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[1],))

    def d_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(2.0 * np.asarray(y, dtype=float), x.shape[:1]).copy()


@dataclass(frozen=True)
class ShiftFirstCoordinate:
    """F(x, y) = x_1 + y."""

    name: str = "shift_first"

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x[:, 0] + y

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=float)
        out[:, 0] = 1.0
        return out

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[1],))

    def d_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.ones(x.shape[:1])


@dataclass(frozen=True)
class ProductFirstCoordinate:
    """F(x, y) = x_1 * y."""

    name: str = "product_first"

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x[:, 0] * y

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=float)
        out[:, 0] = y
        return out

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[1],))

    def d_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.array(x[:, 0], dtype=float)


# Time fields g: [0, T] x R^d -> R


@dataclass(frozen=True)
class TimeOnly:
    """g(t, x) = t."""

    name: str = "time_only"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[:-1], float(t))

    def time_deriv(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.ones(x.shape[:-1])

    def grad(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape, dtype=float)

    def hess(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape + (x.shape[-1],))


@dataclass(frozen=True)
class StaticField:
    """g(t, x) = field(x)."""

    field: IScalarField

    @property
    def name(self) -> str:
        return f"static[{self.field.name}]"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.field.value(x)

    def time_deriv(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape[:-1])

    def grad(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.field.grad(x)

    def hess(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.field.hess(x)


@dataclass(frozen=True)
class TimeProduct:
    """g(t, x) = t * field(x)."""

    field: IScalarField

    @property
    def name(self) -> str:
        return f"time_times[{self.field.name}]"

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return t * self.field.value(x)

    def time_deriv(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.field.value(x)

    def grad(self, t: float, x: np.ndarray) -> np.ndarray:
        return t * self.field.grad(x)

    def hess(self, t: float, x: np.ndarray) -> np.ndarray:
        return t * self.field.hess(x)
