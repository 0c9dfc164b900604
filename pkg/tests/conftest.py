"""Pytest fixtures shared by the unit and integration tests."""

import json
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from measure_flow_lab.app import Catalog, create_catalog
from measure_flow_lab.core.models import EmpiricalMeasure, PathBundle, TimeGrid
from measure_flow_lab.services.process import PointMassLaw, brownian, constant_drift, simulate_paths
from measure_flow_lab.utils.config import Settings


@pytest.fixture
def grid() -> TimeGrid:
    """Coarse unit-horizon grid."""
    return TimeGrid(horizon=1.0, n_steps=20)


@pytest.fixture
def brownian_1d():
    """b = 0, sigma = 1 in one dimension."""
    return brownian(1)


@pytest.fixture
def brownian_2d():
    """b = 0, sigma = I in two dimensions."""
    return brownian(2)


@pytest.fixture
def drift_1d():
    """b = 0.7, sigma = 1 in one dimension."""
    return constant_drift([0.7])


@pytest.fixture
def paths_1d(brownian_1d, grid) -> PathBundle:
    """4000 Brownian paths from the origin."""
    return simulate_paths(brownian_1d, grid, 4000, PointMassLaw((0.0,)), seed=11, block_size=512)


@pytest.fixture
def paths_2d(brownian_2d, grid) -> PathBundle:
    """4000 two-dimensional Brownian paths from the origin."""
    return simulate_paths(brownian_2d, grid, 4000, PointMassLaw((0.0, 0.0)), seed=12, block_size=512)


@pytest.fixture
def make_measure() -> Callable[..., EmpiricalMeasure]:
    """Factory for small random weighted measures."""

    def factory(seed: int, size: int = 5, dim: int = 2, uniform: bool = False) -> EmpiricalMeasure:
        rng = np.random.default_rng(seed)
        points = rng.standard_normal((size, dim))
        if uniform:
            return EmpiricalMeasure.uniform(points)
        weights = rng.random(size) + 0.1
        return EmpiricalMeasure(points=points, weights=weights / weights.sum())

    return factory


@pytest.fixture
def catalog() -> Catalog:
    """Fully populated registries."""
    return create_catalog()


@pytest.fixture
def settings(tmp_path) -> Settings:
    """Settings writing under a temporary directory."""
    return Settings(output_directory=str(tmp_path / "runs"), block_size=512)


@pytest.fixture
def write_config(tmp_path) -> Callable[[dict], Path]:
    """Write an experiment config document and return its path."""

    def factory(data: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return factory
