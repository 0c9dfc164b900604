"""Deterministic quadrature: Gauss-Legendre rules on [0, 1], cubes and unions of balls."""

import itertools
import logging
from typing import Callable

import numpy as np

from measure_flow_lab.core.errors import NumericFailureError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 8
MAX_POINTS = 1 << 24
EVAL_CHUNK = 1 << 18


def unit_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return (nodes + 1.0) / 2.0, weights / 2.0


def cube_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on the unit cube [0, 1]^dim."""
    nodes, weights = unit_rule(order)
    points = np.array(list(itertools.product(nodes, repeat=dim)))
    tensor_weights = np.prod(np.array(list(itertools.product(weights, repeat=dim))), axis=1)
    return points, tensor_weights


def covering_cells(centers: np.ndarray, radius: float, width: float) -> np.ndarray:
    """Integer indices of the lattice cells of side ``width`` meeting any ball B(c, radius)."""
    low = np.floor((centers - radius) / width).astype(np.int64)
    high = np.floor((centers + radius) / width).astype(np.int64)
    span = int(np.max(high - low)) + 1
    dim = centers.shape[1]
    offsets = np.array(list(itertools.product(range(span), repeat=dim)), dtype=np.int64)
    cells = []
    step = max(1, EVAL_CHUNK // len(offsets))
    for start in range(0, len(low), step):
        block_low = low[start : start + step]
        block_high = high[start : start + step]
        candidates = block_low[:, None, :] + offsets[None, :, :]
        inside = np.all(candidates <= block_high[:, None, :], axis=2)
        cells.append(candidates[inside])
    return np.unique(np.concatenate(cells), axis=0)


def integrate_cells(
    func: Callable[[np.ndarray], np.ndarray],
    cells: np.ndarray,
    width: float,
    order: int = DEFAULT_ORDER,
) -> float:
    """Composite tensor Gauss-Legendre integral of ``func`` over the given lattice cells."""
    dim = cells.shape[1]
    nodes, weights = cube_rule(order, dim)
    per_chunk = max(1, EVAL_CHUNK // len(nodes))
    partial = []
    for start in range(0, len(cells), per_chunk):
        block = cells[start : start + per_chunk]
        points = (block[:, None, :] + nodes[None, :, :]) * width
        values = np.asarray(func(points.reshape(-1, dim)), dtype=float).reshape(len(block), -1)
        if not np.all(np.isfinite(values)):
            raise NumericFailureError("integrand is not finite")
        partial.append(np.sum(values @ weights))
    return float(np.sum(partial)) * width**dim


def integrate_over_balls(
    func: Callable[[np.ndarray], np.ndarray],
    centers: np.ndarray,
    radius: float,
    rel_tol: float = 1e-6,
    order: int = DEFAULT_ORDER,
    max_points: int = MAX_POINTS,
) -> float:
    """Integrate a function that vanishes outside the union of balls B(c_j, radius).

    Cells of side ``radius`` are halved until two successive levels agree to
    ``rel_tol``.

    Raises:
        NumericFailureError: If the tolerance is not met within ``max_points`` nodes
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    dim = centers.shape[1]
    width = float(radius)
    previous = integrate_cells(func, covering_cells(centers, radius, width), width, order)
    while True:
        width /= 2.0
        cells = covering_cells(centers, radius, width)
        if len(cells) * order**dim > max_points:
            raise NumericFailureError(
                f"quadrature did not reach relative tolerance {rel_tol:g} "
                f"(last estimate {previous!r})"
            )
        current = integrate_cells(func, cells, width, order)
        change = abs(current - previous)
        logger.debug("ball quadrature: %d cells, estimate %.17g, change %.3g", len(cells), current, change)
        if change <= rel_tol * abs(current) or (current == 0.0 and previous == 0.0):
            return current
        previous = current
