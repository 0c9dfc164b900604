"""Tests for W2, mollifiers, mollified measures and d_k."""

import math

import numpy as np
import ot
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from measure_flow_lab.core.errors import CapacityExceededError, InvalidArgumentError
from measure_flow_lab.core.models import EmpiricalMeasure
from measure_flow_lab.services.measure import (
    conjugate_exponent,
    convolve_measures,
    density_norm,
    dk_distance,
    mollifier_make,
    mollify,
    sphere_area,
    wasserstein2,
)
from measure_flow_lab.utils.rng import stream


def _random_measure(seed: int, dim: int, size: int | None = None, uniform: bool = False) -> EmpiricalMeasure:
    rng = np.random.default_rng(seed)
    size = size or int(rng.integers(1, 9))
    points = rng.standard_normal((size, dim))
    if uniform:
        return EmpiricalMeasure.uniform(points)
    return EmpiricalMeasure(points=points, weights=rng.dirichlet(np.ones(size)))


def _emd(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    cost = ot.dist(mu.points, nu.points)
    return math.sqrt(max(float(ot.emd2(mu.weights, nu.weights, cost)), 0.0))


class TestHelpers:
    """Tests for exponent and geometry helpers."""

    @pytest.mark.parametrize("dim,area", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
    def test_sphere_area(self, dim, area):
        """Test unit sphere areas in low dimensions."""
        assert sphere_area(dim) == pytest.approx(area)

    def test_conjugate_exponent(self):
        """Test k' = k / (k - 1) and the k = inf case."""
        assert conjugate_exponent(2.0) == 2.0
        assert conjugate_exponent(3.0) == 1.5
        assert conjugate_exponent(math.inf) == 1.0

    def test_conjugate_exponent_rejects_one(self):
        """Test that k <= 1 has no conjugate."""
        with pytest.raises(InvalidArgumentError):
            conjugate_exponent(1.0)


class TestWasserstein2:
    """Tests for wasserstein2."""

    def test_point_masses(self):
        """Test W2 between point masses is their distance."""
        mu = EmpiricalMeasure.point_mass([0.0, 0.0])
        nu = EmpiricalMeasure.point_mass([3.0, 4.0])

        assert wasserstein2(mu, nu) == pytest.approx(5.0)

    def test_one_dimensional_translation(self):
        """Test that shifting a 1-D measure by c gives W2 = |c|."""
        mu = _random_measure(0, 1, size=6)
        shifted = EmpiricalMeasure(points=mu.points + 0.75, weights=mu.weights)

        assert wasserstein2(mu, shifted) == pytest.approx(0.75)

    def test_quantile_matches_transport(self):
        """Test the 1-D quantile coupling against exact transport."""
        for seed in range(10):
            mu, nu = _random_measure(seed, 1), _random_measure(seed + 100, 1)
            assert wasserstein2(mu, nu) == pytest.approx(_emd(mu, nu), abs=1e-9)

    def test_assignment_matches_transport(self):
        """Test the equal-size uniform assignment path against exact transport."""
        mu = _random_measure(1, 2, size=7, uniform=True)
        nu = _random_measure(2, 2, size=7, uniform=True)

        assert wasserstein2(mu, nu) == pytest.approx(_emd(mu, nu), abs=1e-9)

    def test_identity(self, make_measure):
        """Test W2(mu, mu) = 0 for weighted 2-D measures."""
        mu = make_measure(3)

        assert wasserstein2(mu, mu) == pytest.approx(0.0, abs=1e-7)

    def test_dimension_mismatch(self):
        """Test that measures of different dimension are rejected."""
        with pytest.raises(InvalidArgumentError):
            wasserstein2(_random_measure(0, 1), _random_measure(0, 2))

    def test_assignment_cap(self):
        """Test that the assignment cap is enforced."""
        mu = _random_measure(1, 2, size=10, uniform=True)
        nu = _random_measure(2, 2, size=10, uniform=True)

        with pytest.raises(CapacityExceededError):
            wasserstein2(mu, nu, assignment_cap=5)

    def test_transport_cap(self):
        """Test that the transport cap is enforced."""
        with pytest.raises(CapacityExceededError):
            wasserstein2(_random_measure(1, 2, size=8), _random_measure(2, 2, size=8), transport_cap=4)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), dim=st.integers(1, 3))
    def test_metric_axioms(self, seed, dim):
        """Test symmetry and the triangle inequality on random measures."""
        mu, nu, rho = (_random_measure(seed + 1000 * i, dim) for i in range(3))

        assert wasserstein2(mu, nu) == pytest.approx(wasserstein2(nu, mu), abs=1e-9)
        assert wasserstein2(mu, rho) <= wasserstein2(mu, nu) + wasserstein2(nu, rho) + 1e-9


class TestMollifier:
    """Tests for Mollifier and mollifier_make."""

    @pytest.mark.parametrize("dim", [1, 2, 3])
    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_unit_mass(self, n, dim):
        """Test that rho_n integrates to one."""
        assert mollifier_make(n, dim).lq_norm(1.0) == pytest.approx(1.0, abs=1e-8)

    def test_support_and_symmetry(self):
        """Test rho_n = 0 outside the ball and rho_n(x) = rho_n(-x)."""
        rho = mollifier_make(4, 2)
        x = np.random.default_rng(0).uniform(-0.5, 0.5, (200, 2))

        values = rho.density(x)

        assert np.all(values[np.linalg.norm(x, axis=1) >= 0.25] == 0.0)
        assert np.array_equal(values, rho.density(-x))

    def test_peak(self):
        """Test that the sup norm is the value at the origin."""
        rho = mollifier_make(3, 2)

        assert rho.lq_norm(math.inf) == pytest.approx(float(rho.density(np.zeros(2))[0]))

    def test_nodes(self):
        """Test that quadrature nodes are symmetric, inside the ball and normalized."""
        nodes = mollifier_make(8, 2).nodes(3)

        assert np.all(np.linalg.norm(nodes.points, axis=1) < 1.0 / 8)
        assert np.allclose(nodes.mean(), 0.0)
        assert math.isclose(float(nodes.weights.sum()), 1.0)

    def test_samples_inside_ball(self):
        """Test that rejection samples land in the support."""
        samples = mollifier_make(5, 3).sample(stream(0, 0), 500)

        assert samples.shape == (500, 3)
        assert np.all(np.linalg.norm(samples, axis=1) < 0.2)

    @pytest.mark.parametrize("n,dim", [(0, 1), (2, 0), (1.5, 1)])
    def test_rejects_bad_arguments(self, n, dim):
        """Test that nonpositive or fractional indices are rejected."""
        with pytest.raises(InvalidArgumentError):
            mollifier_make(n, dim)


class TestConvolution:
    """Tests for convolve_measures."""

    def test_point_mass_translates(self, make_measure):
        """Test that convolving with a point mass shifts the atoms."""
        mu = make_measure(0)
        shift = EmpiricalMeasure.point_mass([1.0, -1.0])

        out = convolve_measures(mu, shift)

        assert np.allclose(out.points, mu.points + [1.0, -1.0])
        assert np.allclose(out.weights, mu.weights)

    def test_product_size_and_mean(self, make_measure):
        """Test the atom count and additivity of means."""
        mu, m = make_measure(0, size=4), make_measure(1, size=3)

        out = convolve_measures(mu, m)

        assert out.size == 12
        assert np.allclose(out.mean(), mu.mean() + m.mean())

    def test_cap(self, make_measure):
        """Test that the atom cap is enforced."""
        with pytest.raises(CapacityExceededError):
            convolve_measures(make_measure(0, size=4), make_measure(1, size=4), atom_cap=10)


class TestMollifiedMeasure:
    """Tests for MollifiedMeasure, density_norm and dk_distance."""

    def test_density_integrates_to_one(self):
        """Test that the smoothed density has unit mass."""
        mu = EmpiricalMeasure(points=np.array([[0.0], [0.1], [1.0]]), weights=np.array([0.2, 0.3, 0.5]))

        assert density_norm(mollify(mu, mollifier_make(4, 1)), 1.0) == pytest.approx(1.0, abs=1e-5)

    def test_density_vanishes_away_from_atoms(self):
        """Test the support of the smoothed density."""
        smoothed = mollify(EmpiricalMeasure.point_mass([0.0, 0.0]), mollifier_make(2, 2))

        assert np.all(smoothed.density(np.array([[0.6, 0.0], [0.0, -0.5], [2.0, 2.0]])) == 0.0)
        assert smoothed.density(np.zeros((1, 2)))[0] > 0

    def test_matched_sample_within_radius(self, make_measure):
        """Test that one perturbation per atom stays within 1/n in W2."""
        mu = make_measure(0, size=6)
        smoothed = mollify(mu, mollifier_make(4, 2))

        sample = smoothed.sample_matched(stream(1, 0))

        assert wasserstein2(sample, mu) <= 0.25

    def test_node_expansion_mass_and_mean(self, make_measure):
        """Test that the node expansion keeps mass and mean."""
        mu = make_measure(2, size=3)

        expanded = mollify(mu, mollifier_make(4, 2)).node_expansion(3)

        assert math.isclose(float(expanded.weights.sum()), 1.0)
        assert np.allclose(expanded.mean(), mu.mean())

    def test_dk_zero_for_same_measure(self):
        """Test d_k(mu, mu) = 0."""
        smoothed = mollify(EmpiricalMeasure.point_mass([0.0]), mollifier_make(2, 1))

        assert dk_distance(smoothed, smoothed, k=2.0) == 0.0

    def test_dk_disjoint_supports(self):
        """Test d_k of far-apart point masses against the mollifier norm."""
        rho = mollifier_make(2, 1)
        first = mollify(EmpiricalMeasure.point_mass([0.0]), rho)
        second = mollify(EmpiricalMeasure.point_mass([5.0]), rho)

        expected = 2.0 ** (1.0 / 2.0) * rho.lq_norm(2.0)

        assert dk_distance(first, second, k=2.0) == pytest.approx(expected, rel=1e-5)

    def test_dk_rejects_small_k(self):
        """Test that k < d + 1 is rejected."""
        smoothed = mollify(EmpiricalMeasure.point_mass([0.0, 0.0]), mollifier_make(2, 2))

        with pytest.raises(InvalidArgumentError):
            dk_distance(smoothed, smoothed, k=2.0)
