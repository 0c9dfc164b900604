"""Ensemble reductions and bootstrap helpers.

Reductions over the path axis move that axis last and contiguous so numpy's
pairwise summation applies; results do not depend on thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from measure_flow_lab.core.errors import InvalidArgumentError
from measure_flow_lab.utils.rng import BOOTSTRAP_TAG, stream


def pairwise_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    moved = np.ascontiguousarray(np.moveaxis(np.asarray(values, dtype=float), axis, -1))
    return np.sum(moved, axis=-1)


def weighted_mean(values: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Mean over axis 0, optionally weighted by a probability vector."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        return pairwise_sum(values) / values.shape[0]
    shape = (-1,) + (1,) * (values.ndim - 1)
    return pairwise_sum(values * np.reshape(weights, shape))


def ideal_bootstrap_stderr(per_path: np.ndarray) -> np.ndarray:
    """Standard error of the mean under infinitely many path resamples.

    The path bootstrap of a sample mean has variance sum((r - mean)^2) / N^2,
    which is what this returns (per column of ``per_path``).
    """
    per_path = np.asarray(per_path, dtype=float)
    n = per_path.shape[0]
    centred = per_path - weighted_mean(per_path)
    return np.sqrt(pairwise_sum(centred**2)) / n


def resample_weight(seed: int, replicate: int, size: int, tag: int = BOOTSTRAP_TAG) -> np.ndarray:
    """Multinomial resampling weights of one replicate; they sum to 1."""
    rng = stream(seed, replicate, tag)
    counts = rng.multinomial(size, np.full(size, 1.0 / size))
    return counts / size


def resample_weights(seed: int, n_resamples: int, size: int) -> np.ndarray:
    """One row of :func:`resample_weight` per replicate."""
    return np.stack([resample_weight(seed, replicate, size) for replicate in range(n_resamples)])


def bootstrap_stderr(
    replicate: Callable[[int], np.ndarray], n_resamples: int, threads: int = 1
) -> np.ndarray:
    """Standard deviation across replicates of a series-valued statistic.

    ``replicate(b)`` must be a deterministic function of ``b``.
    """
    if n_resamples < 2:
        raise InvalidArgumentError("bootstrap needs at least two resamples")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(replicate, range(n_resamples)))
    else:
        results = [replicate(b) for b in range(n_resamples)]
    stacked = np.stack(results)
    return np.std(stacked, axis=0, ddof=1)


def loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log y against log x; nan when undefined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        return math.nan
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
