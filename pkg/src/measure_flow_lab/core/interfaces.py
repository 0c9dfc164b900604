"""Protocol interfaces for fields, initial laws and measure functionals.

Batched conventions: points are (N, d) arrays, gradients (N, d), Hessians (N, d, d).
"""

from typing import Protocol

import numpy as np

from measure_flow_lab.core.models import EmpiricalMeasure, ExtendedMetadata, FunctionalMetadata


class IScalarField(Protocol):
    """A C^2 scalar field g on R^d with closed-form derivatives."""

    name: str
    sobolev_certified: bool

    def value(self, x: np.ndarray) -> np.ndarray:
        """g at each point, shape (N,)."""
        ...

    def grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of g at each point, shape (N, d)."""
        ...

    def hess(self, x: np.ndarray) -> np.ndarray:
        """Hessian of g at each point, shape (N, d, d)."""
        ...


class IPairField(Protocol):
    """A scalar field g(x, y) on R^d x R^d, evaluated on all (P, Q) pairs."""

    name: str
    sobolev_certified: bool

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """g on every pair, shape (P, Q)."""
        ...

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient in the first argument, shape (P, Q, d)."""
        ...

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient in the second argument, shape (P, Q, d)."""
        ...

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Hessian in the first argument, shape (P, Q, d, d)."""
        ...

    def hess_yy(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Hessian in the second argument, shape (P, Q, d, d)."""
        ...


class IOuterField(Protocol):
    """F(x, y) on R^d x R, the outer function of a composite functional."""

    name: str

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """F(x, y) for each point x and the scalar y, shape (P,)."""
        ...

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient of F in x, shape (P, d)."""
        ...

    def hess_xx(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Hessian of F in x, shape (P, d, d)."""
        ...

    def d_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Derivative of F in the scalar y, shape (P,)."""
        ...


class ITimeField(Protocol):
    """g(t, x) on [0, T] x R^d with its time and space derivatives."""

    name: str

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        """g(t, .) at each point, shape (N,)."""
        ...

    def time_deriv(self, t: float, x: np.ndarray) -> np.ndarray:
        """Partial derivative in t, shape (N,)."""
        ...

    def grad(self, t: float, x: np.ndarray) -> np.ndarray:
        """Space gradient, shape (N, d)."""
        ...

    def hess(self, t: float, x: np.ndarray) -> np.ndarray:
        """Space Hessian, shape (N, d, d)."""
        ...


class ISpaceTimeField(Protocol):
    """A test field f(t, x) with a computable L^q([0, T] x R^d) norm."""

    name: str

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        """f(t, .) at each point, shape (N,)."""
        ...

    def lq_norm(self, q: float, horizon: float, dim: int) -> float:
        """||f||_{L^q([0, horizon] x R^dim)}."""
        ...


class IInitialLaw(Protocol):
    """Sampler for X_0 with a declared finite second moment."""

    dim: int
    description: str

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` initial states, shape (size, dim)."""
        ...

    def second_moment(self) -> float:
        """E|X_0|^2."""
        ...


class IMeasureFunctional(Protocol):
    """u: P_2(R^d) -> R with its linear derivative and v-derivatives."""

    dim: int
    metadata: FunctionalMetadata

    def value(self, measure: EmpiricalMeasure) -> float:
        """u(mu)."""
        ...

    def lin_deriv(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        """delta u / delta m (mu)(v), shape (Q,)."""
        ...

    def lin_deriv_grad(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        """Gradient in v of the linear derivative, shape (Q, d)."""
        ...

    def lin_deriv_hess(self, measure: EmpiricalMeasure, v: np.ndarray) -> np.ndarray:
        """Hessian in v of the linear derivative, shape (Q, d, d)."""
        ...


class IExtendedFunctional(Protocol):
    """u: [0, T] x R^d x P_2(R^d) -> R.

    Space channels take (P, d) points; linear-derivative channels take (P, d)
    points and (Q, d) measure arguments and return (P, Q, ...) arrays.
    """

    dim: int
    metadata: ExtendedMetadata

    def value(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        """u(t, x, mu) for each point, shape (P,)."""
        ...

    def time_deriv(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        """Partial derivative in t, shape (P,)."""
        ...

    def space_grad(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        """Gradient in x, shape (P, d)."""
        ...

    def space_hess(self, t: float, x: np.ndarray, measure: EmpiricalMeasure) -> np.ndarray:
        """Hessian in x, shape (P, d, d)."""
        ...

    def lin_deriv(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        """delta u / delta m (t, x, mu)(v), shape (P, Q)."""
        ...

    def lin_deriv_grad(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        """Gradient in v of the linear derivative, shape (P, Q, d)."""
        ...

    def lin_deriv_hess(
        self, t: float, x: np.ndarray, measure: EmpiricalMeasure, v: np.ndarray
    ) -> np.ndarray:
        """Hessian in v of the linear derivative, shape (P, Q, d, d)."""
        ...
