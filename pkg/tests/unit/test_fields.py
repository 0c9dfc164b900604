"""Finite-difference checks for the built-in fields."""

import numpy as np
import pytest

from measure_flow_lab.services.fields import (
    Affine,
    Constant,
    Coordinate,
    Cosine,
    DotProduct,
    GaussianBump,
    GaussianKernel,
    GaussianPair,
    IdentityY,
    MixedPolynomial,
    ProductFirstCoordinate,
    ShiftFirstCoordinate,
    SquareNorm,
    SquareY,
    StaticField,
    TimeOnly,
    TimeProduct,
)

H = 1e-5
SCALAR_FIELDS = [SquareNorm(), Coordinate(1), Affine(0.5, 2.0), GaussianBump(0.8), Cosine(1.3), Constant(4.0)]
PAIR_FIELDS = [DotProduct(), GaussianPair(0.7), GaussianKernel(1.2), MixedPolynomial()]
OUTER_FIELDS = [IdentityY(), SquareY(), ShiftFirstCoordinate(), ProductFirstCoordinate()]


def _fd_grad(func, x: np.ndarray) -> np.ndarray:
    """Central differences along the last axis of ``x``; func maps (..., d) to (...)."""
    columns = []
    for i in range(x.shape[-1]):
        step = np.zeros(x.shape[-1])
        step[i] = H
        columns.append((func(x + step) - func(x - step)) / (2 * H))
    return np.stack(columns, axis=-1)


@pytest.fixture
def points() -> np.ndarray:
    return np.random.default_rng(0).normal(scale=0.8, size=(6, 2))


class TestScalarFields:
    """Tests for scalar fields g: R^d -> R."""

    @pytest.mark.parametrize("field", SCALAR_FIELDS, ids=lambda f: f.name)
    def test_grad_matches_differences(self, field, points):
        """Test grad against central differences of value."""
        assert np.allclose(field.grad(points), _fd_grad(field.value, points), atol=1e-6)

    @pytest.mark.parametrize("field", SCALAR_FIELDS, ids=lambda f: f.name)
    def test_hess_matches_differences(self, field, points):
        """Test hess against central differences of grad."""
        fd = np.stack([_fd_grad(lambda x, i=i: field.grad(x)[..., i], points) for i in range(2)], axis=-2)

        assert np.allclose(field.hess(points), fd, atol=1e-6)

    @pytest.mark.parametrize("field", SCALAR_FIELDS, ids=lambda f: f.name)
    def test_batched_shapes(self, field):
        """Test that leading batch axes are preserved."""
        x = np.zeros((3, 4, 2))

        assert field.value(x).shape == (3, 4)
        assert field.grad(x).shape == (3, 4, 2)
        assert field.hess(x).shape == (3, 4, 2, 2)

    def test_gaussian_is_certified(self):
        """Test that only the Gaussian bump declares Sobolev membership."""
        certified = [field.name for field in SCALAR_FIELDS if field.sobolev_certified]

        assert certified == ["gaussian"]


class TestPairFields:
    """Tests for pair fields g: R^d x R^d -> R."""

    @pytest.fixture
    def others(self) -> np.ndarray:
        return np.random.default_rng(1).normal(scale=0.8, size=(3, 2))

    @pytest.mark.parametrize("field", PAIR_FIELDS, ids=lambda f: f.name)
    def test_grads(self, field, points, others):
        """Test grad_x and grad_y against differences of value."""
        grad_x = np.stack(
            [_fd_grad(lambda x, j=j: field.value(x, others[j : j + 1])[:, 0], points) for j in range(len(others))],
            axis=1,
        )
        grad_y = np.stack(
            [_fd_grad(lambda y, p=p: field.value(points[p : p + 1], y)[0], others) for p in range(len(points))],
            axis=0,
        )

        assert np.allclose(field.grad_x(points, others), grad_x, atol=1e-6)
        assert np.allclose(field.grad_y(points, others), grad_y, atol=1e-6)

    @pytest.mark.parametrize("field", PAIR_FIELDS, ids=lambda f: f.name)
    def test_hessians(self, field, points, others):
        """Test hess_xx and hess_yy against differences of the gradients."""
        hess_xx = np.empty((len(points), len(others), 2, 2))
        hess_yy = np.empty((len(points), len(others), 2, 2))
        for j in range(len(others)):
            for i in range(2):
                hess_xx[:, j, i] = _fd_grad(lambda x: field.grad_x(x, others[j : j + 1])[:, 0, i], points)
        for p in range(len(points)):
            for i in range(2):
                hess_yy[p, :, i] = _fd_grad(lambda y: field.grad_y(points[p : p + 1], y)[0, :, i], others)

        assert np.allclose(field.hess_xx(points, others), hess_xx, atol=1e-6)
        assert np.allclose(field.hess_yy(points, others), hess_yy, atol=1e-6)

    def test_value_grid_shape(self, points, others):
        """Test that values come back on the (P, Q) grid."""
        assert GaussianPair().value(points, others).shape == (6, 3)


class TestOuterFields:
    """Tests for outer fields F: R^d x R -> R."""

    @pytest.mark.parametrize("field", OUTER_FIELDS, ids=lambda f: f.name)
    def test_derivatives(self, field, points):
        """Test grad_x and d_y against differences."""
        y = 0.7
        d_y = (field.value(points, y + H) - field.value(points, y - H)) / (2 * H)

        assert np.allclose(field.grad_x(points, y), _fd_grad(lambda x: field.value(x, y), points), atol=1e-6)
        assert np.allclose(field.d_y(points, y), d_y, atol=1e-6)
        assert field.hess_xx(points, y).shape == (6, 2, 2)


class TestTimeFields:
    """Tests for time fields g: [0, T] x R^d -> R."""

    def test_time_only(self, points):
        """Test g(t, x) = t and its derivatives."""
        field = TimeOnly()

        assert np.all(field.value(0.4, points) == 0.4)
        assert np.all(field.time_deriv(0.4, points) == 1.0)
        assert not np.any(field.grad(0.4, points))

    def test_static(self, points):
        """Test that a static field ignores time."""
        field = StaticField(SquareNorm())

        assert np.array_equal(field.value(0.9, points), SquareNorm().value(points))
        assert not np.any(field.time_deriv(0.9, points))
        assert field.name == "static[square_norm]"

    def test_time_product(self, points):
        """Test g(t, x) = t * f(x) and d/dt = f(x)."""
        base = GaussianBump()
        field = TimeProduct(base)
        dt = (field.value(0.5 + H, points) - field.value(0.5 - H, points)) / (2 * H)

        assert np.allclose(field.time_deriv(0.5, points), dt)
        assert np.allclose(field.grad(0.5, points), 0.5 * base.grad(points))
