"""Tests for the deterministic quadrature helpers."""

import math

import numpy as np
import pytest

from measure_flow_lab.core.errors import NumericFailureError
from measure_flow_lab.utils.quadrature import covering_cells, cube_rule, integrate_cells, integrate_over_balls, unit_rule


class TestRules:
    """Tests for unit_rule and cube_rule."""

    def test_unit_rule_exact_for_polynomials(self):
        """Test that an order-4 rule integrates x^7 exactly on [0, 1]."""
        nodes, weights = unit_rule(4)

        assert np.sum(weights * nodes**7) == pytest.approx(1.0 / 8.0, abs=1e-14)

    def test_cube_rule_shape_and_mass(self):
        """Test the tensor rule size and total weight."""
        nodes, weights = cube_rule(3, 2)

        assert nodes.shape == (9, 2)
        assert math.isclose(float(np.sum(weights)), 1.0)


class TestCells:
    """Tests for covering_cells and integrate_cells."""

    def test_covering_cells_one_ball(self):
        """Test the cells meeting a ball centred inside one cell."""
        cells = covering_cells(np.array([[0.5, 0.5]]), radius=0.25, width=1.0)

        assert cells.tolist() == [[0, 0]]

    def test_covering_cells_merges_overlaps(self):
        """Test that shared cells are listed once."""
        cells = covering_cells(np.array([[0.1], [0.2]]), radius=0.5, width=0.5)

        assert cells.tolist() == [[-1], [0], [1]]

    def test_integrate_cells_constant(self):
        """Test the integral of 1 over two unit squares."""
        cells = np.array([[0, 0], [1, 0]])

        assert integrate_cells(lambda x: np.ones(len(x)), cells, 1.0) == pytest.approx(2.0)


class TestIntegrateOverBalls:
    """Tests for integrate_over_balls."""

    def test_smooth_bump(self):
        """Test a compactly supported polynomial bump against its exact integral."""

        def tent(x):
            r2 = np.sum(x**2, axis=1)
            return np.where(r2 < 1.0, (1.0 - r2) ** 4, 0.0)

        # int_{-1}^{1} (1 - x^2)^4 dx = 256 / 315
        assert integrate_over_balls(tent, np.zeros((1, 1)), 1.0, rel_tol=1e-8) == pytest.approx(256 / 315, rel=1e-6)

    def test_zero_integrand(self):
        """Test that a vanishing integrand returns zero."""
        assert integrate_over_balls(lambda x: np.zeros(len(x)), np.zeros((1, 2)), 0.5) == 0.0

    def test_non_finite_integrand(self):
        """Test that NaN values fail loudly."""
        with pytest.raises(NumericFailureError):
            integrate_over_balls(lambda x: np.full(len(x), np.nan), np.zeros((1, 1)), 1.0)

    def test_point_budget(self):
        """Test that an unreachable tolerance hits the point budget."""
        with pytest.raises(NumericFailureError):
            integrate_over_balls(
                lambda x: np.sign(x[:, 0] - 0.1234567), np.zeros((1, 1)), 1.0, rel_tol=0.0, max_points=64
            )
